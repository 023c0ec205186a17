#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <sstream>
#include <string>
#include <thread>

#include <unistd.h>

#include "papg/repo_client.hpp"
#include "papg/time.hpp"
#include "papg/whitelist_store.hpp"

namespace papg::testkit {

inline std::filesystem::path data_path(const std::string& name) { return std::filesystem::path(PAPG_TEST_DATA) / name; }

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir() {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("papg-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    [[nodiscard]] const std::filesystem::path& path() const { return path_; }
    [[nodiscard]] std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline Timestamp at(int y, unsigned m, unsigned d, int hour = 0) {
    return std::chrono::sys_days{std::chrono::year{y} / m / d} + std::chrono::hours{hour};
}

// Copyable handle on one shared, manually advanced time source.
class ManualClock {
public:
    explicit ManualClock(Timestamp start = at(2026, 3, 1)) : now_(std::make_shared<std::atomic<long long>>(
                                                                 start.time_since_epoch().count())) {}

    Timestamp operator()() const { return Timestamp{std::chrono::seconds{now_->load()}}; }
    void set(Timestamp t) { now_->store(t.time_since_epoch().count()); }
    void advance(std::chrono::seconds by) { now_->fetch_add(by.count()); }

private:
    std::shared_ptr<std::atomic<long long>> now_;
};

inline WhitelistStore::Options fast_options(std::optional<std::filesystem::path> snapshot = std::nullopt) {
    WhitelistStore::Options o;
    o.snapshot_path = std::move(snapshot);
    o.kdf = KdfParams::minimal();
    return o;
}

// Adapter answering a fixed status; counts calls and can be slowed down.
class ScriptedAdapter final : public RepoAdapter {
public:
    struct Probe {
        std::atomic<int> calls{0};
        std::atomic<int> status{static_cast<int>(RepoStatus::NotListed)};
        std::atomic<int> delay_ms{0};

        int calls_for(const RegistrableDomain& domain) {
            std::lock_guard lock(mutex);
            auto it = per_domain.find(domain.value());
            return it == per_domain.end() ? 0 : it->second;
        }

        std::mutex mutex;
        std::map<std::string, int> per_domain;
    };

    ScriptedAdapter(std::shared_ptr<Probe> probe, std::string id) : probe_(std::move(probe)), id_(std::move(id)) {}

    [[nodiscard]] std::string id() const override { return id_; }
    RepoStatus lookup(const RegistrableDomain& domain, std::chrono::milliseconds) override {
        probe_->calls.fetch_add(1);
        {
            std::lock_guard lock(probe_->mutex);
            ++probe_->per_domain[domain.value()];
        }
        if (const int d = probe_->delay_ms.load(); d > 0) std::this_thread::sleep_for(std::chrono::milliseconds{d});
        return static_cast<RepoStatus>(probe_->status.load());
    }

private:
    std::shared_ptr<Probe> probe_;
    std::string id_;
};

inline std::shared_ptr<ScriptedAdapter::Probe> make_probe(RepoStatus status) {
    auto p = std::make_shared<ScriptedAdapter::Probe>();
    p->status = static_cast<int>(status);
    return p;
}

inline std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << text;
}

}  // namespace papg::testkit
