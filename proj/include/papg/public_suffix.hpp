#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include "papg/url_canon.hpp"

namespace papg {

/// eTLD+1: one label plus the longest matching public suffix.
class RegistrableDomain {
public:
    [[nodiscard]] const std::string& value() const noexcept { return value_; }

    friend auto operator<=>(const RegistrableDomain&, const RegistrableDomain&) = default;

private:
    friend class PublicSuffixList;
    explicit RegistrableDomain(std::string v) : value_(std::move(v)) {}

    std::string value_;
};

/// Rule set loaded from a public-suffix snapshot ("//" comments, "*."
/// wildcard and "!" exception rules). A wildcard rule "*.x" also makes "x"
/// a public suffix. Hosts not covered by any rule fall back to the implicit
/// "*" rule, so their TLD is the public suffix.
class PublicSuffixList {
public:
    static PublicSuffixList from_text(std::string_view text);
    static PublicSuffixList from_file(const std::filesystem::path& path);

    /// The snapshot that ships with the build.
    static const PublicSuffixList& bundled();
    static std::filesystem::path bundled_path();

    PublicSuffixList(PublicSuffixList&&) noexcept;
    PublicSuffixList& operator=(PublicSuffixList&&) noexcept;
    ~PublicSuffixList();

    [[nodiscard]] std::size_t rule_count() const noexcept { return rule_count_; }

    /// Public suffix of a canonical host name (lowercase ASCII labels).
    [[nodiscard]] std::string public_suffix(std::string_view host) const;

    /// eTLD+1 of a canonical host name, or nullopt when the host is itself
    /// a public suffix.
    [[nodiscard]] std::optional<RegistrableDomain> registrable_domain_of(std::string_view host) const;

    /// Throws Error(NoRegistrableDomain) for IP literals and bare suffixes.
    [[nodiscard]] RegistrableDomain registrable_domain(const CanonicalUrl& url) const;

    /// Parses user input such as "Bank.Example" or "www.bank.example" into
    /// its registrable domain. Throws Error(MalformedUrl) or
    /// Error(NoRegistrableDomain).
    [[nodiscard]] RegistrableDomain parse_domain(std::string_view text) const;

    [[nodiscard]] bool is_public_suffix(std::string_view host) const;

private:
    struct Node;
    PublicSuffixList();

    // Number of trailing labels of `host` forming its public suffix.
    std::size_t suffix_label_count(std::string_view host) const;

    std::unique_ptr<Node> root_;
    std::size_t rule_count_ = 0;
};

}  // namespace papg

template <>
struct std::hash<papg::RegistrableDomain> {
    std::size_t operator()(const papg::RegistrableDomain& d) const noexcept {
        return std::hash<std::string>{}(d.value());
    }
};
