#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace papg {

enum class HostKind { RegisteredName, Ipv4Literal, Ipv6Literal };

/// Normalized decomposition of an http(s) URL.
///
/// `host` is lowercase ASCII (IDN labels in punycode), a dotted-quad IPv4
/// address, or an IPv6 address in RFC 5952 form without brackets. `port` is
/// absent when it equals the scheme default. `path` always begins with "/"
/// and has no "." or ".." segments. Query and fragment are not kept.
struct CanonicalUrl {
    std::string scheme;
    std::string host;
    HostKind host_kind = HostKind::RegisteredName;
    std::optional<std::uint16_t> port;
    std::string path = "/";
    bool has_userinfo = false;
    std::string userinfo;  // percent-normalized; empty when has_userinfo is false
    std::string raw;

    // Equality ignores `raw`: two spellings of one URL compare equal.
    friend bool operator==(const CanonicalUrl& a, const CanonicalUrl& b) {
        return a.scheme == b.scheme && a.host == b.host && a.host_kind == b.host_kind &&
               a.port == b.port && a.path == b.path && a.has_userinfo == b.has_userinfo &&
               a.userinfo == b.userinfo;
    }
};

/// Pieces of a raw URL as written, before any normalization. Used by the
/// canonicalizer and by spoof scanning, which needs the query and fragment
/// that the canonical form drops.
struct UrlParts {
    std::string scheme;
    std::optional<std::string> userinfo;
    std::string host;
    std::string port;
    std::string path;
    std::string query;     // without the leading '?'
    std::string fragment;  // without the leading '#'
};

/// Splits `raw` into its components. Throws Error(MalformedUrl) for input
/// without a scheme or with a scheme other than http/https.
UrlParts split_url(std::string_view raw);

/// Throws Error(MalformedUrl) on unparseable input, unsupported scheme,
/// empty or invalid host, or a port outside 1-65535.
CanonicalUrl canonicalize(std::string_view raw);

/// Serializes the canonical fields back to URL text.
std::string render(const CanonicalUrl& url);

/// Normalizes a bare host name (IDNA to ASCII, lowercase, trailing dot
/// dropped, label rules enforced). Throws Error(MalformedUrl).
std::string canonical_host_name(std::string_view host);

/// Decodes %XX escapes; malformed escapes are left as-is.
std::string percent_decode(std::string_view text);

}  // namespace papg
