#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>

#include <nlohmann/json.hpp>

#include "papg/repo_client.hpp"
#include "papg/verdict_engine.hpp"
#include "papg/whitelist_store.hpp"

namespace httplib {
class Server;
}

namespace papg {

struct ApiConfig {
    std::string listen_host = "127.0.0.1";
    int listen_port = 7753;
    bool allow_remote = false;
    std::filesystem::path store_path;
    std::optional<std::filesystem::path> fixture_path;
    std::optional<std::filesystem::path> psl_path;
    std::optional<std::string> repo_base_url;
    std::optional<std::string> repo_api_key;
    std::chrono::milliseconds repo_timeout{2000};
    std::string log_level = "info";

    /// Throws Error(InvalidArgument) for a non-loopback listen host without
    /// allow_remote, or an out-of-range port.
    void validate() const;
};

std::filesystem::path default_store_path();

/// Flat key=value file; "#" comments and blank lines ignored. Keys:
/// listen_address (host:port), allow_remote, store_path, fixture_path,
/// psl_path, repo_base_url, repo_api_key, repo_timeout_ms, log_level.
/// Unknown keys throw Error(InvalidArgument).
ApiConfig parse_config(std::string_view text, ApiConfig base = {});
ApiConfig load_config_file(const std::filesystem::path& path, ApiConfig base = {});

bool is_loopback_host(std::string_view host);

/// Repository adapters described by the config, in priority order.
std::vector<std::unique_ptr<RepoAdapter>> make_adapters(const ApiConfig& config);

// JSON views of domain types, shared by the HTTP layer and the CLI.
nlohmann::json to_json(const VerdictRecord& record);
nlohmann::json to_json(const WhitelistEntry& entry);
nlohmann::json to_json(const PendingPrompt& prompt);

struct ApiResponse {
    int status = 200;
    nlohmann::json body;
};

/// Transport-free request router. Each call maps one HTTP request onto
/// engine and store calls; HttpService only adapts it to sockets.
class ApiHandler {
public:
    ApiHandler(VerdictEngine& engine, Clock clock = system_now);

    ApiResponse handle(std::string_view method, std::string_view path, std::string_view body,
                       std::string_view session_header) const;

    static constexpr std::string_view kSessionHeader = "X-PAPG-Session";

private:
    VerdictEngine& engine_;
    Clock clock_;
};

/// Owns the store, repository client, engine and the HTTP listener.
class HttpService {
public:
    /// Opens the store and binds the listener. Throws StoreOpenFailure,
    /// AddressInUse, InvalidArgument.
    explicit HttpService(const ApiConfig& config, Clock clock = system_now);
    ~HttpService();

    HttpService(const HttpService&) = delete;
    HttpService& operator=(const HttpService&) = delete;

    [[nodiscard]] int port() const noexcept { return port_; }
    [[nodiscard]] VerdictEngine& engine() noexcept { return *engine_; }

    /// Blocks until stop() is called.
    void run();
    void stop();

private:
    ApiConfig config_;
    Clock clock_;
    std::unique_ptr<PublicSuffixList> own_psl_;
    std::unique_ptr<WhitelistStore> store_;
    std::unique_ptr<RepoClient> repo_;
    std::unique_ptr<VerdictEngine> engine_;
    std::unique_ptr<ApiHandler> handler_;
    std::unique_ptr<httplib::Server> server_;
    int port_ = 0;
    std::mutex stop_mutex_;
    std::condition_variable stop_cv_;
    bool stopping_ = false;
    std::atomic<bool> running_{false};
    std::thread evictor_;
};

}  // namespace papg
