#include "papg/public_suffix.hpp"

#include <fstream>
#include <sstream>
#include <unordered_map>
#include <vector>

#include "papg/error.hpp"

#ifndef PAPG_PSL_PATH
#define PAPG_PSL_PATH "data/public_suffix_list.dat"
#endif

namespace papg {

// Trie over reversed labels: "co.uk" is root -> "uk" -> "co".
struct PublicSuffixList::Node {
    std::unordered_map<std::string, std::unique_ptr<Node>> children;
    bool rule = false;       // a normal or wildcard rule ends here
    bool exception = false;  // a "!" rule ends here

    Node* child(std::string_view label) const {
        auto it = children.find(std::string(label));
        return it == children.end() ? nullptr : it->second.get();
    }
};

namespace {

std::vector<std::string_view> labels_of(std::string_view host) {
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

std::string_view trailing_labels(std::string_view host, std::size_t count) {
    std::size_t pos = host.size();
    for (std::size_t i = 0; i < count; ++i) {
        const auto dot = host.rfind('.', pos == 0 ? 0 : pos - 1);
        if (dot == std::string_view::npos || pos == 0) return host;
        pos = dot;
    }
    return host.substr(pos + 1);
}

}  // namespace

PublicSuffixList::PublicSuffixList() : root_(std::make_unique<Node>()) {}
PublicSuffixList::PublicSuffixList(PublicSuffixList&&) noexcept = default;
PublicSuffixList& PublicSuffixList::operator=(PublicSuffixList&&) noexcept = default;
PublicSuffixList::~PublicSuffixList() = default;

PublicSuffixList PublicSuffixList::from_text(std::string_view text) {
    PublicSuffixList psl;
    std::istringstream lines{std::string(text)};
    std::string line;
    while (std::getline(lines, line)) {
        // A rule ends at the first whitespace.
        const auto start = line.find_first_not_of(" \t\r");
        if (start == std::string::npos) continue;
        const auto end = line.find_first_of(" \t\r", start);
        std::string_view rule = std::string_view(line).substr(start, end == std::string::npos ? end : end - start);
        if (rule.starts_with("//")) continue;

        bool exception = false;
        if (rule.front() == '!') {
            exception = true;
            rule.remove_prefix(1);
        }
        bool wildcard = false;
        if (rule.starts_with("*.")) {
            wildcard = true;
            rule.remove_prefix(2);
        }
        std::string ascii;
        try {
            ascii = canonical_host_name(rule);
        } catch (const Error&) {
            continue;  // not representable as a host name; cannot match anything
        }

        auto labels = labels_of(ascii);
        Node* node = psl.root_.get();
        for (auto it = labels.rbegin(); it != labels.rend(); ++it) {
            auto& slot = node->children[std::string(*it)];
            if (!slot) slot = std::make_unique<Node>();
            node = slot.get();
        }
        if (wildcard) {
            // "*.x" also makes "x" itself a public suffix.
            node->rule = true;
            auto& slot = node->children["*"];
            if (!slot) slot = std::make_unique<Node>();
            node = slot.get();
        }
        if (exception) {
            node->exception = true;
        } else {
            node->rule = true;
        }
        ++psl.rule_count_;
    }
    return psl;
}

PublicSuffixList PublicSuffixList::from_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::IoFailure, "cannot read public suffix list " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_text(buf.str());
}

std::filesystem::path PublicSuffixList::bundled_path() { return PAPG_PSL_PATH; }

const PublicSuffixList& PublicSuffixList::bundled() {
    static const PublicSuffixList instance = from_file(bundled_path());
    return instance;
}

std::size_t PublicSuffixList::suffix_label_count(std::string_view host) const {
    const auto labels = labels_of(host);
    const std::size_t n = labels.size();
    std::size_t longest = 1;  // implicit "*" rule
    const Node* node = root_.get();
    for (std::size_t depth = 0; depth < n && node != nullptr; ++depth) {
        const std::string_view label = labels[n - 1 - depth];
        if (const Node* wild = node->child("*"); wild != nullptr && wild->rule) {
            longest = std::max(longest, depth + 1);
        }
        const Node* next = node->child(label);
        if (next == nullptr) break;
        // An exception rule makes its parent the suffix and beats every
        // other match.
        if (next->exception) return depth;
        if (next->rule) longest = std::max(longest, depth + 1);
        node = next;
    }
    return longest;
}

std::string PublicSuffixList::public_suffix(std::string_view host) const {
    return std::string(trailing_labels(host, suffix_label_count(host)));
}

bool PublicSuffixList::is_public_suffix(std::string_view host) const {
    return labels_of(host).size() <= suffix_label_count(host);
}

std::optional<RegistrableDomain> PublicSuffixList::registrable_domain_of(std::string_view host) const {
    if (host.empty()) return std::nullopt;
    const std::size_t suffix = suffix_label_count(host);
    if (labels_of(host).size() <= suffix) return std::nullopt;
    return RegistrableDomain(std::string(trailing_labels(host, suffix + 1)));
}

RegistrableDomain PublicSuffixList::registrable_domain(const CanonicalUrl& url) const {
    if (url.host_kind != HostKind::RegisteredName) {
        throw Error(Errc::NoRegistrableDomain, "host " + url.host + " is an IP literal");
    }
    auto domain = registrable_domain_of(url.host);
    if (!domain) throw Error(Errc::NoRegistrableDomain, "host " + url.host + " is a public suffix");
    return *std::move(domain);
}

RegistrableDomain PublicSuffixList::parse_domain(std::string_view text) const {
    const std::string host = canonical_host_name(text);
    auto domain = registrable_domain_of(host);
    if (!domain) throw Error(Errc::NoRegistrableDomain, "'" + std::string(text) + "' is a public suffix");
    return *std::move(domain);
}

}  // namespace papg
