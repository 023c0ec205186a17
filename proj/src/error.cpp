#include "papg/error.hpp"

namespace papg {

std::string_view to_string(Errc code) noexcept {
    switch (code) {
        case Errc::MalformedUrl: return "MalformedUrl";
        case Errc::NoRegistrableDomain: return "NoRegistrableDomain";
        case Errc::AlreadyPresent: return "AlreadyPresent";
        case Errc::NotFound: return "NotFound";
        case Errc::NotAuthorized: return "NotAuthorized";
        case Errc::UnsupportedVersion: return "UnsupportedVersion";
        case Errc::CorruptProfile: return "CorruptProfile";
        case Errc::IoFailure: return "IoFailure";
        case Errc::Conflict: return "Conflict";
        case Errc::InvalidArgument: return "InvalidArgument";
        case Errc::AddressInUse: return "AddressInUse";
        case Errc::StoreOpenFailure: return "StoreOpenFailure";
    }
    return "Unknown";
}

}  // namespace papg
