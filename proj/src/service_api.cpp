#include "papg/service_api.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <regex>
#include <sstream>

#include <sys/socket.h>

#include <httplib.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "papg/error.hpp"

namespace papg {

using nlohmann::json;

namespace {

std::shared_ptr<spdlog::logger> logger() {
    static auto instance = [] {
        auto existing = spdlog::get("papg");
        return existing ? existing : spdlog::stderr_color_mt("papg");
    }();
    return instance;
}

std::string trim(std::string_view s) {
    const auto start = s.find_first_not_of(" \t\r");
    if (start == std::string_view::npos) return {};
    const auto end = s.find_last_not_of(" \t\r");
    return std::string(s.substr(start, end - start + 1));
}

bool parse_bool(std::string_view key, std::string_view value) {
    if (value == "true" || value == "1" || value == "yes") return true;
    if (value == "false" || value == "0" || value == "no") return false;
    throw Error(Errc::InvalidArgument, "config key " + std::string(key) + " expects true/false");
}

int parse_int(std::string_view key, std::string_view value) {
    int out = 0;
    auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc{} || p != value.data() + value.size()) {
        throw Error(Errc::InvalidArgument, "config key " + std::string(key) + " expects an integer");
    }
    return out;
}

}  // namespace

// --- configuration ---

bool is_loopback_host(std::string_view host) {
    if (host == "localhost" || host == "::1" || host == "[::1]") return true;
    return host.starts_with("127.");
}

void ApiConfig::validate() const {
    if (listen_port < 0 || listen_port > 65535) {
        throw Error(Errc::InvalidArgument, "listen port out of range: " + std::to_string(listen_port));
    }
    if (!allow_remote && !is_loopback_host(listen_host)) {
        throw Error(Errc::InvalidArgument,
                    "refusing to listen on non-loopback address " + listen_host + " without allow_remote=true");
    }
}

std::filesystem::path default_store_path() {
    if (const char* home = std::getenv("HOME"); home != nullptr && *home != '\0') {
        return std::filesystem::path(home) / ".papg" / "store.json";
    }
    return "papg-store.json";
}

ApiConfig parse_config(std::string_view text, ApiConfig config) {
    std::istringstream lines{std::string(text)};
    std::string line;
    int line_no = 0;
    while (std::getline(lines, line)) {
        ++line_no;
        const std::string stripped = trim(line);
        if (stripped.empty() || stripped.front() == '#') continue;
        const auto eq = stripped.find('=');
        if (eq == std::string::npos) {
            throw Error(Errc::InvalidArgument, "config line " + std::to_string(line_no) + " is not key=value");
        }
        const std::string key = trim(std::string_view(stripped).substr(0, eq));
        const std::string value = trim(std::string_view(stripped).substr(eq + 1));

        if (key == "listen_address") {
            const auto colon = value.rfind(':');
            if (colon == std::string::npos) throw Error(Errc::InvalidArgument, "listen_address must be host:port");
            std::string host = value.substr(0, colon);
            if (host.size() >= 2 && host.front() == '[' && host.back() == ']') host = host.substr(1, host.size() - 2);
            config.listen_host = host;
            config.listen_port = parse_int(key, std::string_view(value).substr(colon + 1));
        } else if (key == "allow_remote") {
            config.allow_remote = parse_bool(key, value);
        } else if (key == "store_path") {
            config.store_path = value;
        } else if (key == "fixture_path") {
            config.fixture_path = value;
        } else if (key == "psl_path") {
            config.psl_path = value;
        } else if (key == "repo_base_url") {
            config.repo_base_url = value;
        } else if (key == "repo_api_key") {
            config.repo_api_key = value;
        } else if (key == "repo_timeout_ms") {
            config.repo_timeout = std::chrono::milliseconds{parse_int(key, value)};
        } else if (key == "log_level") {
            config.log_level = value;
        } else {
            throw Error(Errc::InvalidArgument, "unknown config key '" + key + "'");
        }
    }
    return config;
}

ApiConfig load_config_file(const std::filesystem::path& path, ApiConfig base) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::IoFailure, "cannot read config " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str(), std::move(base));
}

std::vector<std::unique_ptr<RepoAdapter>> make_adapters(const ApiConfig& config) {
    std::vector<std::unique_ptr<RepoAdapter>> adapters;
    if (config.fixture_path) adapters.push_back(FixtureAdapter::from_file(*config.fixture_path));
    if (config.repo_base_url) {
        adapters.push_back(std::make_unique<HttpAdapter>(
            HttpAdapterConfig{*config.repo_base_url, config.repo_api_key, config.repo_timeout, "http"}));
    }
    return adapters;
}

// --- JSON views ---

json to_json(const VerdictRecord& r) {
    json spoof = json::array();
    for (const auto& s : r.spoof.signals) {
        spoof.push_back({{"kind", to_string(s.kind)},
                         {"trusted", s.trusted ? json(s.trusted->value()) : json(nullptr)}});
    }
    return json{{"url", r.url ? json(render(*r.url)) : json(nullptr)},
                {"raw_url", r.raw_url},
                {"domain", r.domain ? json(r.domain->value()) : json(nullptr)},
                {"verdict", to_string(r.verdict)},
                {"source", to_string(r.source)},
                {"spoof", std::move(spoof)},
                {"decided_at", format_rfc3339(r.decided_at)},
                {"pending_repo", r.pending_repo},
                {"malformed", r.malformed}};
}

json to_json(const WhitelistEntry& e) {
    return json{{"domain", e.domain.value()},
                {"first_seen", format_rfc3339(e.first_seen)},
                {"last_visited", format_rfc3339(e.last_visited)},
                {"visit_count", e.visit_count},
                {"origin", to_string(e.origin)}};
}

json to_json(const PendingPrompt& p) {
    json out{{"id", p.id},
             {"kind", to_string(p.kind)},
             {"domain", p.domain.value()},
             {"created_at", format_rfc3339(p.created_at)}};
    if (p.kind == PromptKind::AutoAddOffer) {
        out["evidence"] = json{{"visit_count", p.visit_count}, {"window_days", p.window_days}};
    }
    return out;
}

// --- request routing ---

namespace {

int status_for(Errc code) {
    switch (code) {
        case Errc::NotAuthorized: return 401;
        case Errc::NotFound: return 404;
        case Errc::AlreadyPresent:
        case Errc::Conflict: return 409;
        case Errc::IoFailure:
        case Errc::AddressInUse:
        case Errc::StoreOpenFailure: return 500;
        default: return 400;
    }
}

ApiResponse error_response(int status, std::string_view code, const std::string& message) {
    return ApiResponse{status, json{{"error", code}, {"message", message}}};
}

ApiResponse error_response(const Error& e) { return error_response(status_for(e.code()), to_string(e.code()), e.what()); }

json parse_body(std::string_view body) {
    json doc = json::parse(body, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) throw Error(Errc::InvalidArgument, "request body must be a JSON object");
    return doc;
}

const std::string& string_field(const json& doc, const char* key) {
    if (!doc.contains(key) || !doc[key].is_string()) {
        throw Error(Errc::InvalidArgument, std::string("missing string field \"") + key + "\"");
    }
    return doc[key].get_ref<const std::string&>();
}

bool bool_field(const json& doc, const char* key) {
    if (!doc.contains(key) || !doc[key].is_boolean()) {
        throw Error(Errc::InvalidArgument, std::string("missing boolean field \"") + key + "\"");
    }
    return doc[key].get<bool>();
}

json settings_view(const Settings& s, bool password_protected) {
    return json{{"retention_days", s.retention_days},
                {"auto_add_min_visits", s.auto_add_min_visits},
                {"auto_add_window_days", s.auto_add_window_days},
                {"password_protected", password_protected}};
}

}  // namespace

ApiHandler::ApiHandler(VerdictEngine& engine, Clock clock) : engine_(engine), clock_(std::move(clock)) {}

ApiResponse ApiHandler::handle(std::string_view method, std::string_view path, std::string_view body,
                               std::string_view session) const {
    static const std::regex kWhitelistItem(R"(^/v1/whitelist/([^/]+)$)");
    static const std::regex kPromptResolve(R"(^/v1/prompts/([0-9]+)/resolve$)");

    WhitelistStore& store = engine_.store();
    const Timestamp now = clock_();
    const std::string p(path);
    std::smatch m;

    auto gate = [&] {
        if (!store.authorized(session, now)) {
            throw Error(Errc::NotAuthorized,
                        "header " + std::string(kSessionHeader) + " with a valid session is required");
        }
    };

    try {
        if (p == "/v1/health" && method == "GET") {
            return {200, json{{"status", "ok"}, {"password_protected", store.password_protected()}}};
        }
        if (p == "/v1/check" && method == "POST") {
            const json doc = parse_body(body);
            return {200, to_json(engine_.check(string_field(doc, "url"), now))};
        }
        if (p == "/v1/feedback" && method == "POST") {
            gate();
            const json doc = parse_body(body);
            const auto domain = store.psl().parse_domain(string_field(doc, "domain"));
            const std::string& judgement = string_field(doc, "judgement");
            Judgement j;
            if (judgement == "Safe") {
                j = Judgement::Safe;
            } else if (judgement == "Unsafe") {
                j = Judgement::Unsafe;
            } else {
                throw Error(Errc::InvalidArgument, "judgement must be \"Safe\" or \"Unsafe\"");
            }
            return {200, to_json(engine_.feedback(domain, j, session, now))};
        }
        if (p == "/v1/whitelist" && method == "GET") {
            json entries = json::array();
            for (const auto& e : store.entries()) entries.push_back(to_json(e));
            return {200, json{{"whitelist", std::move(entries)}}};
        }
        if (p == "/v1/whitelist" && method == "POST") {
            gate();
            const json doc = parse_body(body);
            const auto domain = store.psl().parse_domain(string_field(doc, "domain"));
            return {201, to_json(store.add(domain, Origin::Manual, now, session))};
        }
        if (std::regex_match(p, m, kWhitelistItem) && method == "DELETE") {
            gate();
            const auto domain = store.psl().parse_domain(percent_decode(m[1].str()));
            if (!store.remove(domain, now, session)) {
                return error_response(404, "NotFound", domain.value() + " is not whitelisted");
            }
            return {200, json{{"removed", true}, {"domain", domain.value()}}};
        }
        if (p == "/v1/blocklist" && method == "GET") {
            json entries = json::array();
            for (const auto& b : store.blocklist()) {
                entries.push_back({{"domain", b.domain.value()}, {"reported_at", format_rfc3339(b.reported_at)}});
            }
            return {200, json{{"blocklist", std::move(entries)}}};
        }
        if (p == "/v1/prompts" && method == "GET") {
            json prompts = json::array();
            for (const auto& pr : engine_.prompts()) prompts.push_back(to_json(pr));
            return {200, json{{"prompts", std::move(prompts)}}};
        }
        if (std::regex_match(p, m, kPromptResolve) && method == "POST") {
            gate();
            const json doc = parse_body(body);
            const bool accept = bool_field(doc, "accept");
            engine_.resolve_prompt(std::stoull(m[1].str()), accept, session, now);
            return {200, json{{"resolved", true}, {"accepted", accept}}};
        }
        if (p == "/v1/profile/export" && method == "POST") {
            gate();
            const json doc = parse_body(body);
            const Profile profile = store.export_profile(string_field(doc, "path"), now, session);
            return {200, json{{"exported", true},
                              {"whitelist_entries", profile.whitelist.size()},
                              {"blocklist_entries", profile.blocklist.size()}}};
        }
        if (p == "/v1/profile/import" && method == "POST") {
            gate();
            const json doc = parse_body(body);
            ImportMode mode = ImportMode::PreserveOrigin;
            if (doc.contains("mark_imported") && bool_field(doc, "mark_imported")) mode = ImportMode::MarkImported;
            const Profile profile = store.import_profile(string_field(doc, "path"), now, session, mode);
            return {200, json{{"imported", true},
                              {"whitelist_entries", profile.whitelist.size()},
                              {"blocklist_entries", profile.blocklist.size()}}};
        }
        if (p == "/v1/session" && method == "POST") {
            const json doc = parse_body(body);
            auto token = store.open_session(string_field(doc, "passphrase"), now);
            if (!token) return error_response(401, "NotAuthorized", "wrong passphrase");
            return {200, json{{"session", *token}, {"expires_in", SessionRegistry::kDefaultLifetime.count()}}};
        }
        if (p == "/v1/settings" && method == "GET") {
            return {200, settings_view(store.settings(), store.password_protected())};
        }
        if (p == "/v1/settings" && method == "PUT") {
            gate();
            const json doc = parse_body(body);
            Settings s = store.settings();
            auto int_field = [&](const char* key, int& target) {
                if (!doc.contains(key)) return;
                if (!doc[key].is_number_integer()) {
                    throw Error(Errc::InvalidArgument, std::string("field \"") + key + "\" must be an integer");
                }
                target = doc[key].get<int>();
            };
            int_field("retention_days", s.retention_days);
            int_field("auto_add_min_visits", s.auto_add_min_visits);
            int_field("auto_add_window_days", s.auto_add_window_days);
            store.update_settings(s, now, session);
            return {200, settings_view(store.settings(), store.password_protected())};
        }
    } catch (const Error& e) {
        return error_response(e);
    } catch (const std::exception& e) {
        return error_response(500, "Internal", e.what());
    }
    static const std::regex kKnownPath(
        R"(^/v1/(health|check|feedback|whitelist|whitelist/[^/]+|blocklist|prompts|prompts/[0-9]+/resolve|)"
        R"(profile/export|profile/import|session|settings)$)");
    if (std::regex_match(p, kKnownPath)) {
        return error_response(405, "MethodNotAllowed", std::string(method) + " is not supported on " + p);
    }
    return error_response(404, "NotFound", "no route for " + std::string(method) + " " + p);
}

// --- HTTP listener ---

HttpService::HttpService(const ApiConfig& config, Clock clock) : config_(config), clock_(std::move(clock)) {
    config_.validate();
    spdlog::level::level_enum level = spdlog::level::from_str(config_.log_level);
    logger()->set_level(level);

    const PublicSuffixList* psl = &PublicSuffixList::bundled();
    if (config_.psl_path) {
        own_psl_ = std::make_unique<PublicSuffixList>(PublicSuffixList::from_file(*config_.psl_path));
        psl = own_psl_.get();
    }
    try {
        std::filesystem::path store_path = config_.store_path.empty() ? default_store_path() : config_.store_path;
        if (store_path.has_parent_path()) std::filesystem::create_directories(store_path.parent_path());
        store_ = WhitelistStore::open(store_path, *psl);
    } catch (const std::filesystem::filesystem_error& e) {
        throw Error(Errc::StoreOpenFailure, e.what());
    }
    repo_ = std::make_unique<RepoClient>(make_adapters(config_), clock_,
                                         RepoClient::Options{.default_deadline = config_.repo_timeout});
    engine_ = std::make_unique<VerdictEngine>(*store_, *repo_);
    handler_ = std::make_unique<ApiHandler>(*engine_, clock_);

    server_ = std::make_unique<httplib::Server>();
    // httplib defaults to SO_REUSEPORT, which would let a second daemon
    // share the port silently; plain SO_REUSEADDR still allows fast restarts.
    server_->set_socket_options([](int sock) {
        int yes = 1;
        ::setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
    });
    auto route = [this](const httplib::Request& req, httplib::Response& res) {
        const ApiResponse out =
            handler_->handle(req.method, req.path, req.body, req.get_header_value(ApiHandler::kSessionHeader.data()));
        res.status = out.status;
        res.set_content(out.body.dump(), "application/json");
        logger()->debug("{} {} -> {}", req.method, req.path, out.status);
    };
    server_->Get(".*", route);
    server_->Post(".*", route);
    server_->Put(".*", route);
    server_->Delete(".*", route);

    if (config_.listen_port == 0) {
        port_ = server_->bind_to_any_port(config_.listen_host);
    } else {
        port_ = server_->bind_to_port(config_.listen_host, config_.listen_port) ? config_.listen_port : -1;
    }
    if (port_ <= 0) {
        throw Error(Errc::AddressInUse,
                    "cannot listen on " + config_.listen_host + ":" + std::to_string(config_.listen_port));
    }

    const auto removed = store_->evict(clock_());
    logger()->info("startup eviction removed {} stale whitelist entries", removed.size());
    evictor_ = std::thread([this] {
        std::unique_lock lock(stop_mutex_);
        while (!stop_cv_.wait_for(lock, std::chrono::hours{24}, [this] { return stopping_; })) {
            lock.unlock();
            try {
                const auto stale = store_->evict(clock_());
                logger()->info("daily eviction removed {} stale whitelist entries", stale.size());
            } catch (const Error& e) {
                logger()->error("daily eviction failed: {}", e.what());
            }
            lock.lock();
        }
    });
}

HttpService::~HttpService() {
    stop();
    if (evictor_.joinable()) evictor_.join();
}

void HttpService::run() {
    {
        std::lock_guard lock(stop_mutex_);
        if (stopping_) return;
        running_ = true;
    }
    logger()->info("listening on {}:{}", config_.listen_host, port_);
    server_->listen_after_bind();
    running_ = false;
}

void HttpService::stop() {
    {
        std::lock_guard lock(stop_mutex_);
        stopping_ = true;
    }
    stop_cv_.notify_all();
    if (!server_) return;
    // httplib ignores stop() until the accept loop is up, so wait for it
    // when run() has already been entered.
    while (running_ && !server_->is_running()) std::this_thread::sleep_for(std::chrono::milliseconds{1});
    server_->stop();
}

}  // namespace papg
