#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "papg/public_suffix.hpp"
#include "papg/time.hpp"

namespace papg {

enum class RepoStatus { Listed, NotListed, Unavailable };

std::string_view to_string(RepoStatus status) noexcept;

struct RepoResult {
    RepoStatus status = RepoStatus::Unavailable;
    std::string source;
    Timestamp queried_at;
    // Zero for Unavailable, which is never cached.
    std::int64_t ttl_seconds = 0;

    friend bool operator==(const RepoResult&, const RepoResult&) = default;
};

/// One external blacklist repository.
class RepoAdapter {
public:
    virtual ~RepoAdapter() = default;

    [[nodiscard]] virtual std::string id() const = 0;
    /// Must not throw; failures are Unavailable. Implementations should
    /// give up once `deadline` has elapsed.
    virtual RepoStatus lookup(const RegistrableDomain& domain, std::chrono::milliseconds deadline) = 0;
};

/// Offline repository backed by a fixture file: one listed domain per
/// line, "#" starts a comment.
class FixtureAdapter final : public RepoAdapter {
public:
    explicit FixtureAdapter(std::unordered_set<std::string> listed, std::string id = "fixture");
    static std::unique_ptr<FixtureAdapter> from_file(const std::filesystem::path& path);
    static std::unordered_set<std::string> parse_fixture(std::string_view text);

    [[nodiscard]] std::string id() const override { return id_; }
    RepoStatus lookup(const RegistrableDomain& domain, std::chrono::milliseconds deadline) override;

private:
    std::unordered_set<std::string> listed_;
    std::string id_;
};

struct HttpAdapterConfig {
    std::string base_url;  // e.g. http://127.0.0.1:8080/lookup
    std::optional<std::string> api_key;
    std::chrono::milliseconds timeout{2000};
    std::string id = "http";
};

/// GET <base_url>?domain=<domain>, optional "X-Api-Key" header, expects a
/// JSON body {"listed": bool}. Anything else is Unavailable.
class HttpAdapter final : public RepoAdapter {
public:
    explicit HttpAdapter(HttpAdapterConfig config);

    [[nodiscard]] std::string id() const override { return config_.id; }
    RepoStatus lookup(const RegistrableDomain& domain, std::chrono::milliseconds deadline) override;

private:
    HttpAdapterConfig config_;
    std::string scheme_host_port_;
    std::string path_;
};

class RepoClient;

/// Shared view of one in-flight (or finished) lookup.
class RepoHandle {
public:
    RepoHandle() = default;

    /// nullopt while pending.
    [[nodiscard]] std::optional<RepoResult> poll() const;
    [[nodiscard]] bool pending() const { return !poll().has_value(); }
    RepoResult wait() const;
    std::optional<RepoResult> wait_for(std::chrono::milliseconds timeout) const;
    /// Runs `callback` on completion, immediately if already complete.
    void on_complete(std::function<void(const RepoResult&)> callback) const;

    [[nodiscard]] bool same_lookup(const RepoHandle& other) const { return state_ == other.state_; }

private:
    friend class RepoClient;
    struct State {
        mutable std::mutex mutex;
        std::condition_variable done;
        std::optional<RepoResult> result;
        std::vector<std::function<void(const RepoResult&)>> callbacks;
    };
    explicit RepoHandle(std::shared_ptr<State> state) : state_(std::move(state)) {}

    std::shared_ptr<State> state_;
};

/// Queries repositories in priority order with a TTL cache.
///
/// Listed wins as soon as any repository reports it. Otherwise the answer
/// is NotListed when at least one repository answered, and Unavailable
/// when none did. Listed/NotListed answers are cached for their TTL;
/// Unavailable is never cached.
class RepoClient {
public:
    struct Options {
        std::chrono::seconds listed_ttl{24 * 3600};
        std::chrono::seconds not_listed_ttl{3600};
        std::chrono::milliseconds default_deadline{2000};
        // Extra time query() may take past its deadline.
        std::chrono::milliseconds slack{100};
    };

    RepoClient(std::vector<std::unique_ptr<RepoAdapter>> adapters, Clock clock = system_now);
    RepoClient(std::vector<std::unique_ptr<RepoAdapter>> adapters, Clock clock, Options options);
    ~RepoClient();

    RepoClient(const RepoClient&) = delete;
    RepoClient& operator=(const RepoClient&) = delete;

    /// Blocks for at most deadline + slack.
    RepoResult query(const RegistrableDomain& domain, std::chrono::milliseconds deadline);
    RepoResult query(const RegistrableDomain& domain) { return query(domain, options_.default_deadline); }

    /// Returns immediately. Concurrent calls for one domain share a single
    /// lookup; a fresh cache entry yields an already-completed handle.
    RepoHandle query_async(const RegistrableDomain& domain);

    /// Fresh cache entry, if any.
    [[nodiscard]] std::optional<RepoResult> cached(const RegistrableDomain& domain) const;
    /// Number of adapter lookups issued so far.
    [[nodiscard]] std::uint64_t lookups_issued() const noexcept { return lookups_issued_.load(); }
    [[nodiscard]] const Options& options() const noexcept { return options_; }

private:
    RepoResult lookup_uncached(const RegistrableDomain& domain, std::chrono::milliseconds deadline);
    void store_in_cache(const RegistrableDomain& domain, const RepoResult& result);

    std::vector<std::shared_ptr<RepoAdapter>> adapters_;
    Clock clock_;
    Options options_;

    mutable std::mutex cache_mutex_;
    std::unordered_map<RegistrableDomain, RepoResult> cache_;

    std::mutex inflight_mutex_;
    std::unordered_map<RegistrableDomain, std::shared_ptr<RepoHandle::State>> inflight_;
    std::condition_variable workers_done_;
    std::size_t workers_ = 0;

    std::atomic<std::uint64_t> lookups_issued_{0};
};

}  // namespace papg
