#include "papg/spoof.hpp"

#include <algorithm>
#include <cctype>

namespace papg {

std::string_view to_string(SpoofKind kind) noexcept {
    switch (kind) {
        case SpoofKind::SubdomainImpersonation: return "SubdomainImpersonation";
        case SpoofKind::PathImpersonation: return "PathImpersonation";
        case SpoofKind::UserinfoImpersonation: return "UserinfoImpersonation";
        case SpoofKind::IpLiteralHost: return "IpLiteralHost";
        case SpoofKind::PunycodeHost: return "PunycodeHost";
    }
    return "Unknown";
}

bool SpoofReport::has(SpoofKind kind) const {
    return std::any_of(signals.begin(), signals.end(), [kind](const SpoofSignal& s) { return s.kind == kind; });
}

bool SpoofReport::has(SpoofKind kind, const RegistrableDomain& trusted) const {
    return std::any_of(signals.begin(), signals.end(),
                       [&](const SpoofSignal& s) { return s.kind == kind && s.trusted == trusted; });
}

bool SpoofReport::has_impersonation() const {
    return has(SpoofKind::SubdomainImpersonation) || has(SpoofKind::PathImpersonation) ||
           has(SpoofKind::UserinfoImpersonation);
}

namespace {

bool is_label_char(char ch) {
    const auto c = static_cast<unsigned char>(ch);
    return std::isalnum(c) != 0 || c == '-';
}

std::string lower(std::string_view text) {
    std::string out(text);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

// True when some '/'-separated segment of `path` starts with `needle`.
bool starts_a_segment(std::string_view path, std::string_view needle) {
    const std::string hay = lower(path);
    const std::string pin = lower(needle);
    for (std::size_t pos = hay.find(pin); pos != std::string::npos; pos = hay.find(pin, pos + 1)) {
        if (pos == 0 || hay[pos - 1] == '/') return true;
    }
    return false;
}

}  // namespace

bool contains_label_aligned(std::string_view haystack, std::string_view needle) {
    if (needle.empty() || needle.size() > haystack.size()) return false;
    const std::string hay = lower(haystack);
    const std::string pin = lower(needle);
    for (auto pos = hay.find(pin); pos != std::string::npos; pos = hay.find(pin, pos + 1)) {
        const bool left_ok = pos == 0 || !is_label_char(hay[pos - 1]);
        const std::size_t end = pos + pin.size();
        const bool right_ok = end == hay.size() || !is_label_char(hay[end]);
        if (left_ok && right_ok) return true;
    }
    return false;
}

SpoofReport spoof_signals(const CanonicalUrl& url, const std::set<RegistrableDomain>& trusted,
                          const PublicSuffixList& psl) {
    SpoofReport report;
    if (url.host_kind != HostKind::RegisteredName) {
        report.signals.insert({SpoofKind::IpLiteralHost, std::nullopt});
    } else {
        const bool punycode = url.host.starts_with("xn--") || url.host.find(".xn--") != std::string::npos;
        if (punycode) report.signals.insert({SpoofKind::PunycodeHost, std::nullopt});
    }
    if (trusted.empty()) return report;

    // Host text strictly left of the URL's own registrable domain.
    std::optional<RegistrableDomain> own;
    std::string_view subdomain_part;
    if (url.host_kind == HostKind::RegisteredName) {
        own = psl.registrable_domain_of(url.host);
        if (own && url.host.size() > own->value().size()) {
            subdomain_part = std::string_view(url.host).substr(0, url.host.size() - own->value().size() - 1);
        }
    }

    // Query and fragment are not part of the canonical form, so they come
    // from re-splitting raw. Segment separators keep the pieces apart.
    std::string path_text = percent_decode(url.path);
    if (!url.raw.empty()) {
        try {
            const UrlParts parts = split_url(url.raw);
            path_text += "/" + percent_decode(parts.path) + "?" + percent_decode(parts.query) + "#" +
                         percent_decode(parts.fragment);
        } catch (const std::exception&) {
        }
    }
    const std::string userinfo_text = percent_decode(url.userinfo);

    for (const RegistrableDomain& t : trusted) {
        const bool is_own = own && *own == t;
        if (!is_own && !subdomain_part.empty() && contains_label_aligned(subdomain_part, t.value())) {
            report.signals.insert({SpoofKind::SubdomainImpersonation, t});
        }
        if (!is_own && (contains_label_aligned(path_text, t.value()) || starts_a_segment(path_text, t.value()))) {
            report.signals.insert({SpoofKind::PathImpersonation, t});
        }
        if (!is_own && url.has_userinfo && contains_label_aligned(userinfo_text, t.value())) {
            report.signals.insert({SpoofKind::UserinfoImpersonation, t});
        }
    }
    return report;
}

}  // namespace papg
