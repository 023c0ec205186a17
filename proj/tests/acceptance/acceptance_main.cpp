// Acceptance run: one PASS/FAIL line per criterion, non-zero exit on any FAIL.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "papg/error.hpp"
#include "papg/simulate.hpp"
#include "papg/verdict_engine.hpp"
#include "support.hpp"
#include "trick_corpus.hpp"

using namespace papg;
using namespace papg::testkit;
using namespace std::chrono_literals;
using steady = std::chrono::steady_clock;

namespace {

// Pinned tolerances.
constexpr auto kSimulateBudget = 1s;
constexpr auto kLookupBudget = 30s;
constexpr double kLookupRatioLimit = 2.0;
constexpr int kLookups = 100'000;
constexpr auto kTrickBudget = 10s;
constexpr int kTrickCases = 1500;
constexpr int kTwoPhaseOps = 10'000;
constexpr int kEvictionStores = 1000;
constexpr int kRoundTripStores = 200;
constexpr int kMinPslVectors = 100;

const PublicSuffixList& psl() { return PublicSuffixList::bundled(); }
RegistrableDomain dom(std::string_view text) { return psl().parse_domain(text); }

double seconds_since(steady::time_point start) {
    return std::chrono::duration<double>(steady::now() - start).count();
}

std::vector<std::unique_ptr<RepoAdapter>> scripted(const std::shared_ptr<ScriptedAdapter::Probe>& probe, int copies) {
    std::vector<std::unique_ptr<RepoAdapter>> out;
    for (int i = 0; i < copies; ++i) out.push_back(std::make_unique<ScriptedAdapter>(probe, "r" + std::to_string(i)));
    return out;
}

// Waits for phase two on `url` to land in the verdict cache.
VerdictRecord settled(VerdictEngine& engine, const std::string& url, Timestamp now) {
    VerdictRecord r = engine.check(url, now);
    for (int i = 0; i < 1000 && r.pending_repo; ++i) {
        std::this_thread::sleep_for(1ms);
        r = engine.check(url, now);
    }
    return r;
}

struct Outcome {
    bool pass = false;
    std::string detail;
};

// --- criteria ---

Outcome steady_state_size() {
    const auto start = steady::now();
    const SimulationReport r = simulate_growth({180, 3, 90});
    const double took = seconds_since(start);
    std::ostringstream d;
    d << "steady-state " << r.steady_state_size << " from day " << r.steady_from_day << ", peak " << r.peak_size
      << ", " << took << "s";
    return {r.steady_state_size == 270 && took < std::chrono::duration<double>(kSimulateBudget).count(), d.str()};
}

double median_lookup_ns(std::size_t entries, std::mt19937& rng) {
    WhitelistStore store(psl(), fast_options());
    const Timestamp t0 = at(2026, 1, 1);
    std::vector<RegistrableDomain> keys;
    keys.reserve(entries);
    for (std::size_t i = 0; i < entries; ++i) {
        keys.push_back(dom("site" + std::to_string(i) + ".com"));
        store.add(keys.back(), Origin::Manual, t0);
    }
    std::vector<RegistrableDomain> probes;
    probes.reserve(kLookups);
    for (int i = 0; i < kLookups; ++i) {
        // One in four probes misses.
        probes.push_back(i % 4 == 0 ? dom("absent" + std::to_string(i) + ".org") : keys[rng() % keys.size()]);
    }
    std::size_t hits = 0;
    for (int i = 0; i < 2000; ++i) hits += store.lookup(probes[static_cast<std::size_t>(i)]).has_value();
    std::vector<std::int64_t> samples;
    samples.reserve(kLookups);
    for (const auto& key : probes) {
        const auto a = steady::now();
        hits += store.lookup(key).has_value();
        samples.push_back(std::chrono::duration_cast<std::chrono::nanoseconds>(steady::now() - a).count());
    }
    if (hits == 0) return -1;
    std::nth_element(samples.begin(), samples.begin() + kLookups / 2, samples.end());
    return static_cast<double>(samples[kLookups / 2]);
}

Outcome near_constant_lookup() {
    const auto start = steady::now();
    std::mt19937 rng(42);
    // Interleave repetitions so drift in machine load hits both sizes alike.
    std::vector<double> small, large;
    for (int rep = 0; rep < 3; ++rep) {
        small.push_back(median_lookup_ns(270, rng));
        large.push_back(median_lookup_ns(27'000, rng));
    }
    std::sort(small.begin(), small.end());
    std::sort(large.begin(), large.end());
    const double ratio = large[1] / small[1];
    const double took = seconds_since(start);
    std::ostringstream d;
    d << "median " << large[1] << "ns at 27000 vs " << small[1] << "ns at 270, ratio " << ratio << ", " << took << "s";
    return {small[1] > 0 && ratio <= kLookupRatioLimit &&
                took < std::chrono::duration<double>(kLookupBudget).count(),
            d.str()};
}

Outcome trick_corpus() {
    const auto start = steady::now();
    ManualClock clock;
    WhitelistStore store(psl(), fast_options());
    for (const auto& d : trusted_domains()) store.add(dom(d), Origin::Manual, clock());
    const auto trusted = trusted_set(psl());
    std::vector<std::unique_ptr<RepoAdapter>> adapters;
    adapters.push_back(std::make_unique<FixtureAdapter>(std::unordered_set<std::string>{}));
    RepoClient repo(std::move(adapters), clock);
    VerdictEngine engine(store, repo);

    TrickGenerator gen(2024);
    int detected = 0;
    int safe = 0;
    int exact = 0;
    std::string first_miss;
    for (int i = 0; i < kTrickCases; ++i) {
        const TrickClass kind = static_cast<TrickClass>(i % 3);
        const TrickCase c = gen.next(kind);
        const VerdictRecord r = engine.check(c.url, clock());
        const SpoofKind want = kind == TrickClass::Subdomain ? SpoofKind::SubdomainImpersonation
                               : kind == TrickClass::Path    ? SpoofKind::PathImpersonation
                                                             : SpoofKind::UserinfoImpersonation;
        const bool hit = r.url && r.spoof.has(want, dom(c.trusted));
        const bool agrees = r.url && r.spoof.signals == oracle_signals(*r.url, trusted, psl());
        detected += hit;
        exact += agrees;
        safe += r.verdict == Verdict::Safe;
        if ((!hit || !agrees) && first_miss.empty()) first_miss = c.url;
    }
    const double took = seconds_since(start);
    std::ostringstream d;
    d << detected << "/" << kTrickCases << " detected, " << exact << " match oracle, " << safe << " Safe, " << took
      << "s";
    if (!first_miss.empty()) d << ", first miss " << first_miss;
    return {detected == kTrickCases && exact == kTrickCases && safe == 0 &&
                took < std::chrono::duration<double>(kTrickBudget).count(),
            d.str()};
}

Outcome two_phase_discipline() {
    std::mt19937 rng(7);
    ManualClock clock;
    auto probe = make_probe(RepoStatus::NotListed);
    WhitelistStore store(psl(), fast_options());
    RepoClient repo(scripted(probe, 2), clock);
    VerdictEngine engine(store, repo);

    std::vector<RegistrableDomain> pool;
    for (int i = 0; i < 40; ++i) pool.push_back(dom("d" + std::to_string(i) + (i % 3 == 0 ? ".co.uk" : ".com")));
    const std::vector<std::string> shapes = {"https://", "http://www.", "https://a.b.", "http://user@"};

    int listed_checks = 0;
    int violations = 0;
    int incoherent = 0;
    for (int op = 0; op < kTwoPhaseOps; ++op) {
        const RegistrableDomain& d = pool[rng() % pool.size()];
        switch (rng() % 10) {
            case 0:
                try {
                    store.add(d, Origin::Manual, clock());
                } catch (const Error&) {
                }
                break;
            case 1: store.remove(d, clock()); break;
            case 2: store.block(d, clock()); break;
            case 3: store.unblock(d, clock()); break;
            case 4: engine.feedback(d, rng() % 2 ? Judgement::Safe : Judgement::Unsafe, "", clock()); break;
            case 5:
                clock.advance(std::chrono::hours{rng() % 72});
                store.evict(clock());
                break;
            default: {
                const bool listed = store.contains(d) || store.is_blocked(d);
                const int before = probe->calls_for(d);
                const std::string url = shapes[rng() % shapes.size()] + d.value() + "/p?x=" + std::to_string(op);
                const VerdictRecord r = engine.check(url, clock());
                incoherent += !r.coherent();
                if (listed) {
                    ++listed_checks;
                    violations += probe->calls_for(d) != before;
                    violations += r.source == VerdictSource::ExternalRepo;
                } else if (r.pending_repo) {
                    // Drain so a lookup issued now cannot be counted after d is listed.
                    repo.query_async(d).wait();
                }
            }
        }
    }
    std::ostringstream d;
    d << kTwoPhaseOps << " ops, " << listed_checks << " checks of listed domains, " << violations
      << " repo queries for them, " << incoherent << " incoherent records, " << probe->calls.load()
      << " repo queries overall";
    return {violations == 0 && incoherent == 0 && listed_checks > 1000, d.str()};
}

Outcome eviction_oracle() {
    std::mt19937 rng(1234);
    int mismatches = 0;
    std::size_t evicted_total = 0;
    for (int s = 0; s < kEvictionStores; ++s) {
        WhitelistStore store(psl(), fast_options());
        Settings settings = store.settings();
        settings.retention_days = Settings::kRetentionChoices[rng() % 3];
        store.update_settings(settings, at(2026, 1, 1));
        const Timestamp base = at(2025, 1, 1) + std::chrono::seconds{rng() % (86400 * 365)};
        const int n = static_cast<int>(rng() % 60);
        for (int i = 0; i < n; ++i) {
            const auto d = dom("e" + std::to_string(i) + ".net");
            const Timestamp first = base + std::chrono::seconds{rng() % (86400 * 200)};
            store.add(d, Origin::Manual, first);
            if (rng() % 2) store.touch(d, first + std::chrono::seconds{rng() % (86400 * 200)});
        }
        Timestamp now = base + std::chrono::seconds{rng() % (86400 * 500)};
        // Sometimes land exactly on an entry's retention boundary.
        const auto before = store.entries();
        if (!before.empty() && rng() % 4 == 0) {
            now = before[rng() % before.size()].last_visited + days(settings.retention_days) +
                  std::chrono::seconds{static_cast<int>(rng() % 3) - 1};
        }

        std::vector<std::string> want_removed, want_kept;
        for (const auto& e : before) {
            (now - e.last_visited > days(settings.retention_days) ? want_removed : want_kept).push_back(e.domain.value());
        }
        const auto removed = store.evict(now);
        std::vector<std::string> got_removed, got_kept;
        for (const auto& e : removed) got_removed.push_back(e.domain.value());
        for (const auto& e : store.entries()) got_kept.push_back(e.domain.value());
        for (auto* v : {&want_removed, &want_kept, &got_removed, &got_kept}) std::sort(v->begin(), v->end());
        mismatches += got_removed != want_removed || got_kept != want_kept;
        evicted_total += removed.size();
    }
    std::ostringstream d;
    d << kEvictionStores << " stores, " << evicted_total << " entries evicted, " << mismatches << " mismatches";
    return {mismatches == 0, d.str()};
}

Outcome profile_round_trip() {
    std::mt19937 rng(99);
    TempDir dir;
    int mismatches = 0;
    for (int s = 0; s < kRoundTripStores; ++s) {
        WhitelistStore source(psl(), fast_options());
        const Timestamp base = at(2026, 2, 1) + std::chrono::seconds{rng() % 86400};
        Settings settings = source.settings();
        settings.retention_days = Settings::kRetentionChoices[rng() % 3];
        settings.auto_add_min_visits = 1 + static_cast<int>(rng() % 10);
        settings.auto_add_window_days = 1 + static_cast<int>(rng() % 30);
        source.update_settings(settings, base);
        const int n = static_cast<int>(rng() % 40);
        for (int i = 0; i < n; ++i) {
            const auto d = dom("r" + std::to_string(rng() % 200) + (rng() % 2 ? ".org" : ".co.uk"));
            const Timestamp t = base + std::chrono::seconds{rng() % (86400 * 30)};
            switch (rng() % 3) {
                case 0:
                    try {
                        source.add(d, static_cast<Origin>(rng() % 3), t);
                        for (unsigned v = rng() % 5; v > 0; --v) source.touch(d, t + std::chrono::hours{v * 7});
                    } catch (const Error&) {
                    }
                    break;
                case 1: source.block(d, t); break;
                default: break;
            }
        }
        const Timestamp when = base + days(40);
        const auto file = dir / ("p" + std::to_string(s) + ".json");
        const Profile exported = source.export_profile(file, when);
        WhitelistStore target(psl(), fast_options());
        target.import_profile(file, when);
        const Profile back = target.snapshot(when);
        mismatches += back.whitelist != exported.whitelist || back.blocklist != exported.blocklist ||
                      back.settings != exported.settings || exported.whitelist != source.entries();
    }

    // Rejections leave the target untouched.
    int rejected = 0;
    WhitelistStore target(psl(), fast_options());
    target.add(dom("keep.com"), Origin::Manual, at(2026, 1, 1));
    const Profile before = target.snapshot(at(2026, 1, 1));
    auto expect_rejection = [&](const std::string& name, const std::string& text, Errc code) {
        write_text(dir / name, text);
        try {
            target.import_profile(dir / name, at(2026, 1, 2));
        } catch (const Error& e) {
            rejected += e.code() == code;
        }
    };
    const std::string good = slurp(dir / "p0.json");
    std::string future = good;
    future.replace(future.find("\"format_version\": 1"), 19, "\"format_version\": 2");
    expect_rejection("future.json", future, Errc::UnsupportedVersion);
    expect_rejection("truncated.json", good.substr(0, good.size() / 2), Errc::CorruptProfile);
    expect_rejection("garbage.json", "\x00\x01not json", Errc::CorruptProfile);
    expect_rejection("wrongtype.json", R"({"format_version":1,"exported_at":"2026-01-01T00:00:00Z",)"
                                       R"("settings":{},"whitelist":{},"blocklist":[]})",
                     Errc::CorruptProfile);
    const bool untouched = target.snapshot(at(2026, 1, 1)) == before;

    std::ostringstream d;
    d << kRoundTripStores << " stores, " << mismatches << " mismatches, " << rejected << "/4 bad files rejected"
      << (untouched ? "" : ", target modified by a rejected import");
    return {mismatches == 0 && rejected == 4 && untouched, d.str()};
}

Outcome fail_closed() {
    ManualClock clock;
    auto probe = make_probe(RepoStatus::Unavailable);
    WhitelistStore store(psl(), fast_options());
    RepoClient repo(scripted(probe, 3), clock);
    VerdictEngine engine(store, repo);
    for (const char* d : {"example.com", "paypal.com", "bbc.co.uk"}) store.add(dom(d), Origin::Manual, clock());

    std::vector<std::string> corpus;
    std::ifstream fixture(data_path("repo_fixture.txt"));
    for (const auto& d : FixtureAdapter::parse_fixture(std::string(std::istreambuf_iterator<char>(fixture), {}))) {
        corpus.push_back("https://" + d + "/");
        corpus.push_back("http://login." + d + "/account?next=/");
    }
    TrickGenerator gen(5);
    for (int i = 0; i < 300; ++i) corpus.push_back(gen.next(static_cast<TrickClass>(i % 3)).url);
    for (const char* u : {"https://example.com/", "http://www.paypal.com/x", "https://news.bbc.co.uk/",
                          "https://example.com.evil.com/", "http://10.0.0.1/", "http://[::1]/", "::::",
                          "https://xn--pypal-4ve.com/", "https://co.uk/", "file:///etc/passwd"}) {
        corpus.push_back(u);
    }

    int unsafe_safe = 0;
    int whitelisted_safe = 0;
    int whitelisted = 0;
    for (const auto& url : corpus) {
        for (const VerdictRecord& r : {engine.check(url, clock()), settled(engine, url, clock())}) {
            const bool on_whitelist = r.domain && store.contains(*r.domain);
            if (on_whitelist) {
                ++whitelisted;
                whitelisted_safe += r.verdict == Verdict::Safe;
            } else {
                unsafe_safe += r.verdict == Verdict::Safe;
            }
        }
    }
    std::ostringstream d;
    d << corpus.size() << " URLs, " << unsafe_safe << " non-whitelisted Safe, " << whitelisted_safe << "/"
      << whitelisted << " whitelisted Safe, " << probe->calls.load() << " unavailable lookups";
    return {unsafe_safe == 0 && whitelisted_safe == whitelisted && probe->calls.load() > 0, d.str()};
}

Outcome registrable_domains() {
    std::ifstream in(data_path("psl_vectors.txt"));
    if (!in) return {false, "psl_vectors.txt missing"};
    int cases = 0;
    int agree = 0;
    int exceptions_and_wildcards = 0;
    std::string first_miss;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line.front() == '#') continue;
        std::istringstream fields(line);
        std::string host, expected;
        fields >> host >> expected;
        ++cases;
        std::optional<std::string> want;
        if (expected != "null") want = canonical_host_name(expected);
        std::optional<std::string> got;
        // Leading dots and empty labels are not host names.
        if (!host.starts_with('.') && host.find("..") == std::string::npos) {
            try {
                if (auto d = psl().registrable_domain_of(canonical_host_name(host))) got = d->value();
            } catch (const Error&) {
            }
        }
        if (got == want) {
            ++agree;
        } else if (first_miss.empty()) {
            first_miss = host;
        }
        for (const char* marker : {".ck", ".kawasaki.jp", ".kobe.jp", ".kitakyushu.jp", ".bd", ".er", ".mm"}) {
            if (host.ends_with(marker)) {
                ++exceptions_and_wildcards;
                break;
            }
        }
    }
    std::ostringstream d;
    d << agree << "/" << cases << " agree, " << exceptions_and_wildcards << " under wildcard or exception rules";
    if (!first_miss.empty()) d << ", first miss " << first_miss;
    return {cases >= kMinPslVectors && agree == cases && exceptions_and_wildcards > 0, d.str()};
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"steady-state whitelist size is 270", steady_state_size},
        {"lookup latency near-constant from 270 to 27000 entries", near_constant_lookup},
        {"trick-URL corpus fully detected and never Safe", trick_corpus},
        {"two-phase discipline: no repo query for listed domains", two_phase_discipline},
        {"eviction equals brute-force retention filter", eviction_oracle},
        {"profile export/import round trip and rejections", profile_round_trip},
        {"fail-closed with every repository unavailable", fail_closed},
        {"registrable domains agree with reference vectors", registrable_domains},
    };
    int failures = 0;
    for (const auto& [name, run] : criteria) {
        Outcome o;
        try {
            o = run();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        failures += !o.pass;
        std::cout << (o.pass ? "PASS" : "FAIL") << ": " << name << " (" << o.detail << ")" << std::endl;
    }
    return failures == 0 ? 0 : 1;
}
