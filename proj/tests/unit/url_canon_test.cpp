#include <gtest/gtest.h>

#include <random>

#include "papg/error.hpp"
#include "papg/url_canon.hpp"

using namespace papg;

namespace {

Errc error_of(std::string_view raw) {
    try {
        canonicalize(raw);
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "no error for " << raw;
    return Errc::InvalidArgument;
}

bool host_chars_ok(const std::string& host) {
    if (host.empty() || host.size() > 253) return false;
    std::size_t label = 0;
    for (char c : host) {
        if (c == '.') {
            if (label == 0) return false;
            label = 0;
            continue;
        }
        if (!((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '-')) return false;
        if (++label > 63) return false;
    }
    return label > 0;
}

bool path_ok(const std::string& path) {
    if (path.empty() || path.front() != '/') return false;
    std::size_t start = 1;
    while (start <= path.size()) {
        const auto end = std::min(path.find('/', start), path.size());
        const auto seg = path.substr(start, end - start);
        if (seg == "." || seg == "..") return false;
        start = end + 1;
    }
    return true;
}

}  // namespace

TEST(Canonicalize, NormalizesCaseDefaultPortAndDotSegments) {
    const auto u = canonicalize("HTTP://ExAmPle.COM:80/a/./b");
    EXPECT_EQ(u.scheme, "http");
    EXPECT_EQ(u.host, "example.com");
    EXPECT_EQ(u.host_kind, HostKind::RegisteredName);
    EXPECT_FALSE(u.port.has_value());
    EXPECT_EQ(u.path, "/a/b");
    EXPECT_FALSE(u.has_userinfo);
    EXPECT_EQ(u.raw, "HTTP://ExAmPle.COM:80/a/./b");
}

TEST(Canonicalize, RecordsUserinfo) {
    const auto u = canonicalize("https://user@evil.example/");
    EXPECT_EQ(u.scheme, "https");
    EXPECT_EQ(u.host, "evil.example");
    EXPECT_EQ(u.path, "/");
    EXPECT_TRUE(u.has_userinfo);
    EXPECT_EQ(u.userinfo, "user");
}

TEST(Canonicalize, RejectsOtherSchemes) {
    EXPECT_EQ(error_of("ftp://example.com/"), Errc::MalformedUrl);
    EXPECT_EQ(error_of("javascript:alert(1)"), Errc::MalformedUrl);
    EXPECT_EQ(error_of("file:///etc/passwd"), Errc::MalformedUrl);
    EXPECT_EQ(error_of("mailto:a@b.com"), Errc::MalformedUrl);
}

TEST(Canonicalize, RejectsUnparseableInput) {
    for (const char* raw : {"", "   ", "::::", "example.com", "http://", "http://?x", "http://:80/",
                            "http://exa mple.com/", "http://a..b.com/", "http://example.com:0/",
                            "http://example.com:65536/", "http://example.com:8x/", "http://[::1/",
                            "http://[fe80::1%25eth0]/", "http://exa%mple.com/"}) {
        EXPECT_EQ(error_of(raw), Errc::MalformedUrl) << raw;
    }
}

TEST(Canonicalize, KeepsNonDefaultPortAndHttpsDefault) {
    EXPECT_EQ(canonicalize("https://example.com:443/").port, std::nullopt);
    EXPECT_EQ(canonicalize("https://example.com:80/").port, std::optional<std::uint16_t>{80});
    EXPECT_EQ(canonicalize("http://example.com:8080").port, std::optional<std::uint16_t>{8080});
    EXPECT_EQ(canonicalize("http://example.com:0080/").port, std::nullopt);
}

TEST(Canonicalize, HostNormalization) {
    EXPECT_EQ(canonicalize("http://WWW.Example.COM./").host, "www.example.com");
    EXPECT_EQ(canonicalize("  http://example.com/  ").host, "example.com");
    EXPECT_EQ(canonicalize("http://exa\tmple.com/").host, "example.com");
    EXPECT_EQ(canonicalize("http:\\\\example.com\\a\\b").path, "/a/b");
    EXPECT_EQ(canonicalize("https:example.com/x").host, "example.com");
    EXPECT_EQ(canonicalize("http://example.com").path, "/");
    EXPECT_EQ(canonicalize("http://example.com?q=1#f").path, "/");
}

TEST(Canonicalize, InternationalizedLabelsBecomePunycode) {
    EXPECT_EQ(canonicalize("http://bücher.example/").host, "xn--bcher-kva.example");
    EXPECT_EQ(canonicalize("http://BÜCHER.example/").host, "xn--bcher-kva.example");
    EXPECT_EQ(canonicalize("http://xn--bcher-kva.example/").host, "xn--bcher-kva.example");
    EXPECT_EQ(canonicalize("http://食狮.com.cn/").host, "xn--85x722f.com.cn");
}

TEST(Canonicalize, IpLiterals) {
    auto v4 = canonicalize("http://192.168.1.5/");
    EXPECT_EQ(v4.host_kind, HostKind::Ipv4Literal);
    EXPECT_EQ(v4.host, "192.168.1.5");
    // Alternative IPv4 spellings browsers accept.
    EXPECT_EQ(canonicalize("http://0xC0A80105/").host, "192.168.1.5");
    EXPECT_EQ(canonicalize("http://3232235781/").host, "192.168.1.5");
    EXPECT_EQ(canonicalize("http://0300.0250.1.5/").host, "192.168.1.5");
    EXPECT_EQ(canonicalize("http://127.1/").host, "127.0.0.1");
    EXPECT_EQ(error_of("http://256.1.1.1/"), Errc::MalformedUrl);

    auto v6 = canonicalize("http://[2001:DB8:0:0:0:0:0:1]:8080/x");
    EXPECT_EQ(v6.host_kind, HostKind::Ipv6Literal);
    EXPECT_EQ(v6.host, "2001:db8::1");
    EXPECT_EQ(v6.port, std::optional<std::uint16_t>{8080});
    EXPECT_EQ(render(v6), "http://[2001:db8::1]:8080/x");
}

TEST(Canonicalize, PathDotSegmentsAndEscapes) {
    EXPECT_EQ(canonicalize("http://a.com/a/b/c/./../../g").path, "/a/g");
    EXPECT_EQ(canonicalize("http://a.com/../../x").path, "/x");
    EXPECT_EQ(canonicalize("http://a.com/a/%2e%2E/b").path, "/b");
    EXPECT_EQ(canonicalize("http://a.com/a/..").path, "/");
    EXPECT_EQ(canonicalize("http://a.com/%7euser/%41").path, "/~user/A");
    EXPECT_EQ(canonicalize("http://a.com/a%2fb").path, "/a%2Fb");
    EXPECT_EQ(canonicalize("http://a.com/100%").path, "/100%25");
    EXPECT_EQ(canonicalize("http://a.com/a b").path, "/a%20b");
}

TEST(Canonicalize, UserinfoSplitsAtLastAt) {
    const auto u = canonicalize("http://paypal.com@login@evil.example/");
    EXPECT_EQ(u.host, "evil.example");
    EXPECT_TRUE(u.has_userinfo);
    EXPECT_EQ(percent_decode(u.userinfo), "paypal.com@login");
}

TEST(Canonicalize, EqualityIgnoresRawSpelling) {
    EXPECT_EQ(canonicalize("HTTP://EXAMPLE.com:80/a/../b"), canonicalize("http://example.com/b"));
    EXPECT_NE(canonicalize("http://example.com/b"), canonicalize("https://example.com/b"));
}

TEST(CanonicalHostName, EnforcesLabelLimits) {
    const std::string label63(63, 'a');
    EXPECT_EQ(canonical_host_name(label63 + ".com"), label63 + ".com");
    EXPECT_THROW(canonical_host_name(std::string(64, 'a') + ".com"), Error);
    std::string long_host;
    while (long_host.size() < 260) long_host += "abcdefghi.";
    EXPECT_THROW(canonical_host_name(long_host + "com"), Error);
    EXPECT_THROW(canonical_host_name("a_b.com"), Error);
    EXPECT_THROW(canonical_host_name(""), Error);
}

TEST(PercentDecode, LeavesMalformedEscapes) {
    EXPECT_EQ(percent_decode("a%20b"), "a b");
    EXPECT_EQ(percent_decode("%zz%4"), "%zz%4");
    EXPECT_EQ(percent_decode("%2E%2e"), "..");
}

TEST(SplitUrl, KeepsQueryAndFragment) {
    const auto p = split_url("https://u:p@Host.com:81/a/b?x=1&y#frag");
    EXPECT_EQ(p.scheme, "https");
    EXPECT_EQ(p.userinfo, std::optional<std::string>{"u:p"});
    EXPECT_EQ(p.host, "Host.com");
    EXPECT_EQ(p.port, "81");
    EXPECT_EQ(p.path, "/a/b");
    EXPECT_EQ(p.query, "x=1&y");
    EXPECT_EQ(p.fragment, "frag");
}

// Random URLs assembled from pieces that exercise every normalization step.
TEST(CanonicalizeProperty, IdempotentAndInvariantsHold) {
    std::mt19937 rng(20261017);
    const std::vector<std::string> schemes = {"http", "HTTPS", "hTtP", "https"};
    const std::vector<std::string> users = {"", "user@", "a:b@", "paypal.com@", "x%40y@", "%zz@"};
    const std::vector<std::string> hosts = {"example.com",  "WWW.Example.COM.", "bücher.de",   "sub.xn--bcher-kva.de",
                                            "192.168.0.1",  "0x7f.1",           "[::1]",       "[2001:db8::a:B]",
                                            "a-b.co.uk",    "食狮.com.cn",      "x.github.io", "paypal.com.evil.net"};
    const std::vector<std::string> ports = {"", ":80", ":443", ":8080", ":1", ":65535"};
    const std::vector<std::string> segs = {"a", ".", "..", "%2e", "%2E%2e", "b%20c", "%7e", "%zz", "~x",
                                           "paypal.com", "", "A%2fB", "ü", "q;p", "%41"};
    std::uniform_int_distribution<std::size_t> nseg(0, 6);
    int parsed = 0;
    for (int i = 0; i < 3000; ++i) {
        auto pick = [&](const auto& v) { return v[std::uniform_int_distribution<std::size_t>(0, v.size() - 1)(rng)]; };
        std::string raw = pick(schemes) + "://" + pick(users) + pick(hosts) + pick(ports);
        const auto n = nseg(rng);
        for (std::size_t s = 0; s < n; ++s) raw += (rng() % 5 == 0 ? "\\" : "/") + pick(segs);
        if (rng() % 3 == 0) raw += "?q=" + pick(segs);
        if (rng() % 4 == 0) raw += "#" + pick(segs);

        CanonicalUrl u;
        try {
            u = canonicalize(raw);
        } catch (const Error&) {
            continue;
        }
        ++parsed;
        const auto again = canonicalize(render(u));
        ASSERT_EQ(again, u) << raw << " -> " << render(u) << " -> " << render(again);
        EXPECT_EQ(render(again), render(u));
        EXPECT_TRUE(path_ok(u.path)) << raw;
        EXPECT_TRUE(u.scheme == "http" || u.scheme == "https");
        if (u.port) {
            EXPECT_NE(*u.port, u.scheme == "http" ? 80 : 443);
        }
        if (u.host_kind == HostKind::RegisteredName) {
            EXPECT_TRUE(host_chars_ok(u.host)) << u.host;
        }
    }
    EXPECT_GT(parsed, 2500);
}
