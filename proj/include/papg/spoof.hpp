#pragma once

#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "papg/public_suffix.hpp"
#include "papg/url_canon.hpp"

namespace papg {

enum class SpoofKind {
    SubdomainImpersonation,
    PathImpersonation,
    UserinfoImpersonation,
    IpLiteralHost,
    PunycodeHost,
};

std::string_view to_string(SpoofKind kind) noexcept;

struct SpoofSignal {
    SpoofKind kind;
    std::optional<RegistrableDomain> trusted;  // set for the three impersonation kinds

    friend auto operator<=>(const SpoofSignal&, const SpoofSignal&) = default;
};

struct SpoofReport {
    std::set<SpoofSignal> signals;

    [[nodiscard]] bool empty() const noexcept { return signals.empty(); }
    [[nodiscard]] bool has(SpoofKind kind) const;
    [[nodiscard]] bool has(SpoofKind kind, const RegistrableDomain& trusted) const;
    [[nodiscard]] bool has_impersonation() const;

    friend bool operator==(const SpoofReport&, const SpoofReport&) = default;
};

/// Finds the trusted domains that `url` borrows without belonging to them.
///
/// A trusted name counts as present in a piece of text when it occurs with
/// label boundaries on both sides: the neighbouring characters (if any) are
/// not letters, digits or '-'. Host matches only count left of the URL's own
/// registrable domain, and never for a trusted domain equal to that
/// registrable domain. Path matches scan the percent-decoded path, query and
/// fragment of `url.raw`; a name that starts a '/'-separated segment counts
/// there even without a right boundary. Userinfo matches scan the decoded userinfo.
SpoofReport spoof_signals(const CanonicalUrl& url, const std::set<RegistrableDomain>& trusted,
                          const PublicSuffixList& psl = PublicSuffixList::bundled());

/// True when `needle` occurs in `haystack` with label boundaries on both
/// sides. Both strings are compared case-insensitively.
bool contains_label_aligned(std::string_view haystack, std::string_view needle);

}  // namespace papg
