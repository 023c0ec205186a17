#include "papg/repo_client.hpp"

#include <fstream>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "papg/error.hpp"

namespace papg {

std::string_view to_string(RepoStatus status) noexcept {
    switch (status) {
        case RepoStatus::Listed: return "Listed";
        case RepoStatus::NotListed: return "NotListed";
        case RepoStatus::Unavailable: return "Unavailable";
    }
    return "Unavailable";
}

// --- FixtureAdapter ---

FixtureAdapter::FixtureAdapter(std::unordered_set<std::string> listed, std::string id)
    : listed_(std::move(listed)), id_(std::move(id)) {}

std::unordered_set<std::string> FixtureAdapter::parse_fixture(std::string_view text) {
    std::unordered_set<std::string> listed;
    std::istringstream lines{std::string(text)};
    std::string line;
    while (std::getline(lines, line)) {
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const auto start = line.find_first_not_of(" \t\r");
        if (start == std::string::npos) continue;
        const auto end = line.find_last_not_of(" \t\r");
        std::string domain = line.substr(start, end - start + 1);
        try {
            domain = canonical_host_name(domain);
        } catch (const Error&) {
            continue;
        }
        listed.insert(std::move(domain));
    }
    return listed;
}

std::unique_ptr<FixtureAdapter> FixtureAdapter::from_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::IoFailure, "cannot read fixture " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return std::make_unique<FixtureAdapter>(parse_fixture(buf.str()), "fixture:" + path.filename().string());
}

RepoStatus FixtureAdapter::lookup(const RegistrableDomain& domain, std::chrono::milliseconds) {
    return listed_.contains(domain.value()) ? RepoStatus::Listed : RepoStatus::NotListed;
}

// --- HttpAdapter ---

HttpAdapter::HttpAdapter(HttpAdapterConfig config) : config_(std::move(config)) {
    // Split "http://host:port/path" into the client origin and request path.
    const auto scheme_end = config_.base_url.find("://");
    const auto path_start =
        config_.base_url.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
    scheme_host_port_ = config_.base_url.substr(0, path_start);
    path_ = path_start == std::string::npos ? "/" : config_.base_url.substr(path_start);
}

RepoStatus HttpAdapter::lookup(const RegistrableDomain& domain, std::chrono::milliseconds deadline) {
    try {
        const auto budget = std::min(deadline, config_.timeout);
        if (budget.count() <= 0) return RepoStatus::Unavailable;
        httplib::Client client(scheme_host_port_);
        const auto secs = static_cast<time_t>(budget.count() / 1000);
        const auto usecs = static_cast<time_t>((budget.count() % 1000) * 1000);
        client.set_connection_timeout(secs, usecs);
        client.set_read_timeout(secs, usecs);
        client.set_write_timeout(secs, usecs);
        httplib::Headers headers;
        if (config_.api_key) headers.emplace("X-Api-Key", *config_.api_key);
        const httplib::Params params{{"domain", domain.value()}};
        auto res = client.Get(path_, params, headers);
        if (!res || res->status != 200) return RepoStatus::Unavailable;
        const auto body = nlohmann::json::parse(res->body, nullptr, false);
        if (!body.is_object() || !body.contains("listed") || !body["listed"].is_boolean()) {
            return RepoStatus::Unavailable;
        }
        return body["listed"].get<bool>() ? RepoStatus::Listed : RepoStatus::NotListed;
    } catch (const std::exception&) {
        return RepoStatus::Unavailable;
    }
}

// --- RepoHandle ---

std::optional<RepoResult> RepoHandle::poll() const {
    if (!state_) return std::nullopt;
    std::lock_guard lock(state_->mutex);
    return state_->result;
}

RepoResult RepoHandle::wait() const {
    std::unique_lock lock(state_->mutex);
    state_->done.wait(lock, [this] { return state_->result.has_value(); });
    return *state_->result;
}

std::optional<RepoResult> RepoHandle::wait_for(std::chrono::milliseconds timeout) const {
    std::unique_lock lock(state_->mutex);
    if (!state_->done.wait_for(lock, timeout, [this] { return state_->result.has_value(); })) return std::nullopt;
    return state_->result;
}

void RepoHandle::on_complete(std::function<void(const RepoResult&)> callback) const {
    std::unique_lock lock(state_->mutex);
    if (state_->result) {
        const RepoResult result = *state_->result;
        lock.unlock();
        callback(result);
        return;
    }
    state_->callbacks.push_back(std::move(callback));
}

// --- RepoClient ---

RepoClient::RepoClient(std::vector<std::unique_ptr<RepoAdapter>> adapters, Clock clock)
    : RepoClient(std::move(adapters), std::move(clock), Options{}) {}

RepoClient::RepoClient(std::vector<std::unique_ptr<RepoAdapter>> adapters, Clock clock, Options options)
    : clock_(std::move(clock)), options_(options) {
    for (auto& a : adapters) adapters_.push_back(std::shared_ptr<RepoAdapter>(std::move(a)));
}

RepoClient::~RepoClient() {
    std::unique_lock lock(inflight_mutex_);
    workers_done_.wait(lock, [this] { return workers_ == 0; });
}

std::optional<RepoResult> RepoClient::cached(const RegistrableDomain& domain) const {
    const Timestamp now = clock_();
    std::lock_guard lock(cache_mutex_);
    auto it = cache_.find(domain);
    if (it == cache_.end()) return std::nullopt;
    const RepoResult& r = it->second;
    if (now >= r.queried_at + std::chrono::seconds{r.ttl_seconds}) return std::nullopt;
    return r;
}

void RepoClient::store_in_cache(const RegistrableDomain& domain, const RepoResult& result) {
    if (result.status == RepoStatus::Unavailable) return;
    std::lock_guard lock(cache_mutex_);
    cache_.insert_or_assign(domain, result);
}

RepoResult RepoClient::lookup_uncached(const RegistrableDomain& domain, std::chrono::milliseconds deadline) {
    using steady = std::chrono::steady_clock;
    const auto give_up_at = steady::now() + deadline;
    const Timestamp queried_at = clock_();

    std::optional<std::string> negative_source;
    for (const auto& adapter : adapters_) {
        const auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(give_up_at - steady::now());
        if (remaining.count() <= 0) break;
        lookups_issued_.fetch_add(1);
        const RepoStatus status = adapter->lookup(domain, remaining);
        if (status == RepoStatus::Listed) {
            return RepoResult{RepoStatus::Listed, adapter->id(), queried_at, options_.listed_ttl.count()};
        }
        if (status == RepoStatus::NotListed && !negative_source) negative_source = adapter->id();
    }
    if (negative_source) {
        return RepoResult{RepoStatus::NotListed, *negative_source, queried_at, options_.not_listed_ttl.count()};
    }
    return RepoResult{RepoStatus::Unavailable, adapters_.empty() ? "none" : "all", queried_at, 0};
}

RepoHandle RepoClient::query_async(const RegistrableDomain& domain) {
    if (auto hit = cached(domain)) {
        auto state = std::make_shared<RepoHandle::State>();
        state->result = *hit;
        return RepoHandle(std::move(state));
    }

    std::shared_ptr<RepoHandle::State> state;
    {
        std::lock_guard lock(inflight_mutex_);
        if (auto it = inflight_.find(domain); it != inflight_.end()) return RepoHandle(it->second);
        state = std::make_shared<RepoHandle::State>();
        inflight_.emplace(domain, state);
        ++workers_;
    }

    std::thread([this, domain, state] {
        const RepoResult result = lookup_uncached(domain, options_.default_deadline);
        store_in_cache(domain, result);

        std::vector<std::function<void(const RepoResult&)>> callbacks;
        {
            std::lock_guard lock(state->mutex);
            state->result = result;
            callbacks.swap(state->callbacks);
        }
        state->done.notify_all();
        {
            std::lock_guard lock(inflight_mutex_);
            inflight_.erase(domain);
        }
        for (auto& cb : callbacks) cb(result);

        std::lock_guard lock(inflight_mutex_);
        --workers_;
        workers_done_.notify_all();
    }).detach();

    return RepoHandle(std::move(state));
}

RepoResult RepoClient::query(const RegistrableDomain& domain, std::chrono::milliseconds deadline) {
    if (auto hit = cached(domain)) return *hit;

    // The adapters run on a worker so a misbehaving one cannot hold the
    // caller past deadline + slack.
    auto state = std::make_shared<RepoHandle::State>();
    {
        std::lock_guard lock(inflight_mutex_);
        ++workers_;
    }
    std::thread([this, domain, deadline, state] {
        const RepoResult result = lookup_uncached(domain, deadline);
        store_in_cache(domain, result);
        {
            std::lock_guard lock(state->mutex);
            state->result = result;
        }
        state->done.notify_all();
        std::lock_guard lock(inflight_mutex_);
        --workers_;
        workers_done_.notify_all();
    }).detach();

    if (auto result = RepoHandle(state).wait_for(deadline + options_.slack)) return *result;
    return RepoResult{RepoStatus::Unavailable, "timeout", clock_(), 0};
}

}  // namespace papg
