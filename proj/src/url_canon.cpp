#include "papg/url_canon.hpp"

#include <arpa/inet.h>
#include <unicode/uidna.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdint>
#include <vector>

#include "papg/error.hpp"

namespace papg {

namespace {

[[noreturn]] void malformed(std::string_view raw, std::string_view why) {
    throw Error(Errc::MalformedUrl, "malformed URL '" + std::string(raw) + "': " + std::string(why));
}

constexpr bool is_alpha(unsigned char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }
constexpr bool is_digit(unsigned char c) { return c >= '0' && c <= '9'; }

int hex_value(unsigned char c) {
    if (is_digit(c)) return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

constexpr bool is_unreserved(unsigned char c) {
    return is_alpha(c) || is_digit(c) || c == '-' || c == '.' || c == '_' || c == '~';
}

constexpr bool needs_escape(unsigned char c) {
    return c <= 0x20 || c >= 0x7f || c == '"' || c == '<' || c == '>' || c == '`' || c == '{' || c == '}' ||
           c == '^' || c == '|';
}

constexpr char kHexUpper[] = "0123456789ABCDEF";

void append_escape(std::string& out, unsigned char c) {
    out += '%';
    out += kHexUpper[c >> 4];
    out += kHexUpper[c & 0xf];
}

// Decodes escapes of unreserved characters, upper-cases the rest, and
// escapes bytes that may not appear literally. Applying it twice is a no-op.
std::string normalize_escapes(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    for (std::size_t i = 0; i < text.size(); ++i) {
        const auto c = static_cast<unsigned char>(text[i]);
        if (c == '%') {
            if (i + 2 < text.size() && hex_value(text[i + 1]) >= 0 &&
                hex_value(text[i + 2]) >= 0) {
                const auto v = static_cast<unsigned char>(hex_value(text[i + 1]) * 16 + hex_value(text[i + 2]));
                if (is_unreserved(v)) {
                    out += static_cast<char>(v);
                } else {
                    append_escape(out, v);
                }
                i += 2;
            } else {
                out += "%25";
            }
        } else if (needs_escape(c)) {
            append_escape(out, c);
        } else {
            out += static_cast<char>(c);
        }
    }
    return out;
}

std::string remove_dot_segments(std::string_view path) {
    std::string in(path);
    std::string out;
    auto drop_last_segment = [&out] {
        const auto slash = out.rfind('/');
        out.erase(slash == std::string::npos ? 0 : slash);
    };
    while (!in.empty()) {
        if (in.starts_with("../")) {
            in.erase(0, 3);
        } else if (in.starts_with("./")) {
            in.erase(0, 2);
        } else if (in.starts_with("/./")) {
            in.erase(0, 2);
        } else if (in == "/.") {
            in = "/";
        } else if (in.starts_with("/../")) {
            in.erase(0, 3);
            drop_last_segment();
        } else if (in == "/..") {
            in = "/";
            drop_last_segment();
        } else if (in == "." || in == "..") {
            in.clear();
        } else {
            const auto next = in.find('/', in.front() == '/' ? 1 : 0);
            const auto len = next == std::string::npos ? in.size() : next;
            out.append(in, 0, len);
            in.erase(0, len);
        }
    }
    return out.empty() ? "/" : out;
}

std::string normalize_path(std::string_view raw_path) {
    std::string path(raw_path);
    std::replace(path.begin(), path.end(), '\\', '/');
    path = normalize_escapes(path);
    if (path.empty() || path.front() != '/') path.insert(path.begin(), '/');
    return remove_dot_segments(path);
}

const UIDNA* idna() {
    static const UIDNA* instance = [] {
        UErrorCode status = U_ZERO_ERROR;
        UIDNA* p = uidna_openUTS46(UIDNA_NONTRANSITIONAL_TO_ASCII, &status);
        return U_SUCCESS(status) ? p : nullptr;
    }();
    return instance;
}

// Hyphen placement errors are ignored, as browsers do; real hosts such as
// "r3---sn-x.example" rely on that.
constexpr std::uint32_t kIgnoredIdnaErrors =
    UIDNA_ERROR_LEADING_HYPHEN | UIDNA_ERROR_TRAILING_HYPHEN | UIDNA_ERROR_HYPHEN_3_4;

std::optional<std::string> to_ascii(std::string_view host) {
    const UIDNA* converter = idna();
    if (converter == nullptr) return std::nullopt;
    std::string out(std::max<std::size_t>(host.size() * 4 + 16, 64), '\0');
    for (int attempt = 0; attempt < 2; ++attempt) {
        UErrorCode status = U_ZERO_ERROR;
        UIDNAInfo info = UIDNA_INFO_INITIALIZER;
        const int32_t len = uidna_nameToASCII_UTF8(converter, host.data(), static_cast<int32_t>(host.size()),
                                                   out.data(), static_cast<int32_t>(out.size()), &info, &status);
        if (status == U_BUFFER_OVERFLOW_ERROR) {
            out.assign(static_cast<std::size_t>(len) + 1, '\0');
            continue;
        }
        if (U_FAILURE(status) || (info.errors & ~kIgnoredIdnaErrors) != 0) return std::nullopt;
        out.resize(static_cast<std::size_t>(len));
        return out;
    }
    return std::nullopt;
}

std::vector<std::string_view> split_labels(std::string_view host) {
    std::vector<std::string_view> labels;
    std::size_t start = 0;
    while (true) {
        const auto dot = host.find('.', start);
        labels.push_back(host.substr(start, dot == std::string_view::npos ? std::string_view::npos : dot - start));
        if (dot == std::string_view::npos) break;
        start = dot + 1;
    }
    return labels;
}

bool is_number_label(std::string_view label) {
    if (label.empty()) return false;
    if (std::all_of(label.begin(), label.end(), [](char c) { return is_digit(static_cast<unsigned char>(c)); }))
        return true;
    if (label.size() >= 2 && label[0] == '0' && (label[1] == 'x' || label[1] == 'X')) {
        return std::all_of(label.begin() + 2, label.end(), [](char c) { return hex_value(c) >= 0; });
    }
    return false;
}

std::optional<std::uint64_t> parse_ipv4_number(std::string_view part) {
    if (part.empty()) return std::nullopt;
    int base = 10;
    if (part.size() >= 2 && part[0] == '0' && (part[1] == 'x' || part[1] == 'X')) {
        base = 16;
        part.remove_prefix(2);
    } else if (part.size() >= 2 && part[0] == '0') {
        base = 8;
        part.remove_prefix(1);
    }
    std::uint64_t value = 0;
    for (char ch : part) {
        const int digit = hex_value(ch);
        if (digit < 0 || digit >= base) return std::nullopt;
        value = value * base + digit;
        if (value > 0xffffffffULL) return std::nullopt;
    }
    return value;
}

// Parses dotted, hex, octal and shortened IPv4 forms ("0x7f.1",
// "2130706433") the way browsers do and renders them as a dotted quad.
std::optional<std::string> parse_ipv4(std::string_view host) {
    auto parts = split_labels(host);
    if (parts.size() > 4) return std::nullopt;
    std::vector<std::uint64_t> numbers;
    for (auto part : parts) {
        auto n = parse_ipv4_number(part);
        if (!n) return std::nullopt;
        numbers.push_back(*n);
    }
    for (std::size_t i = 0; i + 1 < numbers.size(); ++i) {
        if (numbers[i] > 255) return std::nullopt;
    }
    const std::size_t tail_bytes = 5 - numbers.size();
    if (numbers.back() >= (1ULL << (8 * tail_bytes))) return std::nullopt;
    std::uint64_t address = numbers.back();
    for (std::size_t i = 0; i + 1 < numbers.size(); ++i) address += numbers[i] << (8 * (3 - i));

    return std::to_string((address >> 24) & 0xff) + "." + std::to_string((address >> 16) & 0xff) + "." +
           std::to_string((address >> 8) & 0xff) + "." + std::to_string(address & 0xff);
}

std::optional<std::string> parse_ipv6(std::string_view literal) {
    std::string text(literal);
    if (text.find('%') != std::string::npos) return std::nullopt;
    std::array<unsigned char, 16> bytes{};
    if (inet_pton(AF_INET6, text.c_str(), bytes.data()) != 1) return std::nullopt;
    char buf[INET6_ADDRSTRLEN];
    if (inet_ntop(AF_INET6, bytes.data(), buf, sizeof buf) == nullptr) return std::nullopt;
    return std::string(buf);
}

struct CanonicalHost {
    std::string name;
    HostKind kind;
};

std::optional<CanonicalHost> canonical_host(std::string_view raw_host) {
    if (raw_host.empty()) return std::nullopt;
    if (raw_host.front() == '[') {
        if (raw_host.size() < 3 || raw_host.back() != ']') return std::nullopt;
        auto v6 = parse_ipv6(raw_host.substr(1, raw_host.size() - 2));
        if (!v6) return std::nullopt;
        return CanonicalHost{*v6, HostKind::Ipv6Literal};
    }
    auto ascii = to_ascii(percent_decode(raw_host));
    if (!ascii) return std::nullopt;
    std::string host = std::move(*ascii);
    if (!host.empty() && host.back() == '.') host.pop_back();
    if (host.empty()) return std::nullopt;

    const auto labels = split_labels(host);
    if (is_number_label(labels.back())) {
        auto v4 = parse_ipv4(host);
        if (!v4) return std::nullopt;
        return CanonicalHost{*v4, HostKind::Ipv4Literal};
    }
    if (host.size() > 253) return std::nullopt;
    for (auto label : labels) {
        if (label.empty() || label.size() > 63) return std::nullopt;
        for (char ch : label) {
            const auto c = static_cast<unsigned char>(ch);
            if (!((c >= 'a' && c <= 'z') || is_digit(c) || c == '-')) return std::nullopt;
        }
    }
    return CanonicalHost{std::move(host), HostKind::RegisteredName};
}

std::string_view trim_controls(std::string_view s) {
    while (!s.empty() && static_cast<unsigned char>(s.front()) <= 0x20) s.remove_prefix(1);
    while (!s.empty() && static_cast<unsigned char>(s.back()) <= 0x20) s.remove_suffix(1);
    return s;
}

}  // namespace

std::string percent_decode(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (text[i] == '%' && i + 2 < text.size() && hex_value(text[i + 1]) >= 0 && hex_value(text[i + 2]) >= 0) {
            out += static_cast<char>(hex_value(text[i + 1]) * 16 + hex_value(text[i + 2]));
            i += 2;
        } else {
            out += text[i];
        }
    }
    return out;
}

UrlParts split_url(std::string_view raw) {
    std::string input;
    for (char c : trim_controls(raw)) {
        if (c != '\t' && c != '\n' && c != '\r') input += c;
    }
    if (input.empty()) malformed(raw, "empty input");

    std::size_t pos = 0;
    if (!is_alpha(static_cast<unsigned char>(input[0]))) malformed(raw, "missing scheme");
    while (pos < input.size() && (is_alpha(static_cast<unsigned char>(input[pos])) ||
                                  is_digit(static_cast<unsigned char>(input[pos])) || input[pos] == '+' ||
                                  input[pos] == '-' || input[pos] == '.')) {
        ++pos;
    }
    if (pos >= input.size() || input[pos] != ':') malformed(raw, "missing scheme");

    UrlParts parts;
    parts.scheme = input.substr(0, pos);
    std::transform(parts.scheme.begin(), parts.scheme.end(), parts.scheme.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (parts.scheme != "http" && parts.scheme != "https") malformed(raw, "unsupported scheme " + parts.scheme);

    ++pos;
    while (pos < input.size() && (input[pos] == '/' || input[pos] == '\\')) ++pos;

    const auto authority_end = input.find_first_of("/\\?#", pos);
    std::string_view authority =
        std::string_view(input).substr(pos, authority_end == std::string::npos ? std::string::npos : authority_end - pos);
    std::string_view rest =
        authority_end == std::string::npos ? std::string_view{} : std::string_view(input).substr(authority_end);

    if (const auto at = authority.rfind('@'); at != std::string_view::npos) {
        parts.userinfo = std::string(authority.substr(0, at));
        authority.remove_prefix(at + 1);
    }
    if (!authority.empty() && authority.front() == '[') {
        const auto close = authority.find(']');
        if (close == std::string_view::npos) malformed(raw, "unterminated IPv6 literal");
        parts.host = std::string(authority.substr(0, close + 1));
        auto after = authority.substr(close + 1);
        if (!after.empty()) {
            if (after.front() != ':') malformed(raw, "junk after IPv6 literal");
            parts.port = std::string(after.substr(1));
        }
    } else if (const auto colon = authority.rfind(':'); colon != std::string_view::npos) {
        parts.host = std::string(authority.substr(0, colon));
        parts.port = std::string(authority.substr(colon + 1));
    } else {
        parts.host = std::string(authority);
    }

    const auto fragment_at = rest.find('#');
    if (fragment_at != std::string_view::npos) {
        parts.fragment = std::string(rest.substr(fragment_at + 1));
        rest = rest.substr(0, fragment_at);
    }
    const auto query_at = rest.find('?');
    if (query_at != std::string_view::npos) {
        parts.query = std::string(rest.substr(query_at + 1));
        rest = rest.substr(0, query_at);
    }
    parts.path = std::string(rest);
    return parts;
}

std::string canonical_host_name(std::string_view host) {
    auto h = canonical_host(host);
    if (!h || h->kind != HostKind::RegisteredName) malformed(host, "not a valid host name");
    return std::move(h->name);
}

CanonicalUrl canonicalize(std::string_view raw) {
    UrlParts parts = split_url(raw);
    if (parts.host.empty()) malformed(raw, "empty host");

    CanonicalUrl url;
    url.raw = std::string(raw);
    url.scheme = parts.scheme;

    auto host = canonical_host(parts.host);
    if (!host) malformed(raw, "invalid host");
    url.host = std::move(host->name);
    url.host_kind = host->kind;

    if (!parts.port.empty()) {
        if (parts.port.size() > 5 ||
            !std::all_of(parts.port.begin(), parts.port.end(), [](char c) { return is_digit(static_cast<unsigned char>(c)); })) {
            malformed(raw, "invalid port");
        }
        const int port = std::stoi(parts.port);
        if (port < 1 || port > 65535) malformed(raw, "port out of range");
        const int default_port = url.scheme == "https" ? 443 : 80;
        if (port != default_port) url.port = static_cast<std::uint16_t>(port);
    }

    url.path = normalize_path(parts.path);
    if (parts.userinfo) {
        url.has_userinfo = true;
        url.userinfo = normalize_escapes(*parts.userinfo);
    }
    return url;
}

std::string render(const CanonicalUrl& url) {
    std::string out = url.scheme + "://";
    if (url.has_userinfo) out += url.userinfo + "@";
    if (url.host_kind == HostKind::Ipv6Literal) {
        out += "[" + url.host + "]";
    } else {
        out += url.host;
    }
    if (url.port) out += ":" + std::to_string(*url.port);
    out += url.path;
    return out;
}

}  // namespace papg
