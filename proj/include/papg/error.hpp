#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace papg {

enum class Errc {
    MalformedUrl,
    NoRegistrableDomain,
    AlreadyPresent,
    NotFound,
    NotAuthorized,
    UnsupportedVersion,
    CorruptProfile,
    IoFailure,
    Conflict,
    InvalidArgument,
    AddressInUse,
    StoreOpenFailure,
};

std::string_view to_string(Errc code) noexcept;

// Single exception type for every domain failure; callers switch on code().
class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}

    [[nodiscard]] Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

}  // namespace papg
