#include "papg/cli.hpp"

#include <algorithm>
#include <csignal>
#include <cstdlib>
#include <iostream>
#include <thread>

#include <CLI11.hpp>
#include <pthread.h>

#include "papg/error.hpp"
#include "papg/service_api.hpp"
#include "papg/simulate.hpp"

namespace papg {

namespace {

std::optional<std::string> env(const char* name) {
    const char* value = std::getenv(name);
    if (value == nullptr || *value == '\0') return std::nullopt;
    return std::string(value);
}

struct GlobalOptions {
    std::string config_path;
    std::string store_path;
    std::optional<std::string> password;
};

ApiConfig resolve_config(const GlobalOptions& g) {
    ApiConfig config;
    std::string path = g.config_path;
    if (path.empty()) path = env("PAPG_CONFIG").value_or("");
    if (!path.empty()) config = load_config_file(path);
    if (!g.store_path.empty()) config.store_path = g.store_path;
    if (config.store_path.empty()) config.store_path = default_store_path();
    return config;
}

// Everything a one-shot management command needs.
struct Context {
    ApiConfig config;
    std::unique_ptr<PublicSuffixList> own_psl;
    std::unique_ptr<WhitelistStore> store;

    const PublicSuffixList& psl() const { return own_psl ? *own_psl : PublicSuffixList::bundled(); }
};

Context open_context(const GlobalOptions& g) {
    Context ctx;
    ctx.config = resolve_config(g);
    if (ctx.config.psl_path) {
        ctx.own_psl = std::make_unique<PublicSuffixList>(PublicSuffixList::from_file(*ctx.config.psl_path));
    }
    if (ctx.config.store_path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(ctx.config.store_path.parent_path(), ec);
    }
    ctx.store = WhitelistStore::open(ctx.config.store_path, ctx.psl());
    return ctx;
}

std::string read_passphrase(std::istream& in) {
    std::string line;
    std::getline(in, line);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
}

// Session token for a gated mutation; empty when the store is unprotected.
std::string session_for(WhitelistStore& store, const GlobalOptions& g, std::istream& in) {
    if (!store.password_protected()) return {};
    std::string passphrase = g.password ? *g.password : env("PAPG_PASSWORD").value_or("");
    if (passphrase.empty()) passphrase = read_passphrase(in);
    auto token = store.open_session(passphrase, system_now());
    if (!token) throw Error(Errc::NotAuthorized, "wrong configuration password");
    return *token;
}

std::string verdict_line(Verdict verdict, VerdictSource source) {
    std::string word = verdict == Verdict::Safe       ? "SAFE"
                       : verdict == Verdict::Phishing ? "PHISHING"
                                                      : "UNKNOWN";
    switch (source) {
        case VerdictSource::Whitelist: return word + " whitelist";
        case VerdictSource::LocalBlocklist: return word + " blocklist";
        case VerdictSource::ExternalRepo: return word + " repo";
        case VerdictSource::None: return word + " none";
    }
    return word;
}

int cmd_check(const GlobalOptions& g, const std::string& url, bool as_json, std::ostream& out) {
    Context ctx = open_context(g);
    RepoClient repo(make_adapters(ctx.config), system_now,
                    RepoClient::Options{.default_deadline = ctx.config.repo_timeout});
    VerdictEngine engine(*ctx.store, repo);
    VerdictRecord record = engine.check(url, system_now());

    if (record.pending_repo && record.domain) {
        // A one-shot command has nobody to notify later, so settle the
        // repository phase here.
        const RepoResult result = repo.query(*record.domain, ctx.config.repo_timeout);
        record.pending_repo = false;
        record.verdict = result.status == RepoStatus::Listed ? Verdict::Phishing : Verdict::Unknown;
        record.source = result.status == RepoStatus::Unavailable ? VerdictSource::None : VerdictSource::ExternalRepo;
    }

    if (as_json) {
        out << to_json(record).dump(2) << '\n';
        return kExitOk;
    }
    if (record.malformed) {
        out << "UNKNOWN malformed\n";
        return kExitOk;
    }
    out << verdict_line(record.verdict, record.source) << '\n';
    for (const auto& s : record.spoof.signals) {
        out << "  warning: " << to_string(s.kind);
        if (s.trusted) out << " (" << s.trusted->value() << ')';
        out << '\n';
    }
    return kExitOk;
}

void print_entry(std::ostream& out, const WhitelistEntry& e) {
    out << e.domain.value() << '\t' << to_string(e.origin) << '\t' << e.visit_count << '\t'
        << format_rfc3339(e.last_visited) << '\n';
}

void install_serve_signals(sigset_t& set) {
    sigemptyset(&set);
    sigaddset(&set, SIGINT);
    sigaddset(&set, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &set, nullptr);
}

int cmd_serve(const GlobalOptions& g, std::ostream& out) {
    ApiConfig config = resolve_config(g);
    // Block the shutdown signals before any thread starts so that only the
    // waiter below receives them.
    sigset_t set;
    install_serve_signals(set);
    HttpService service(config);
    out << "listening on " << config.listen_host << ':' << service.port() << std::endl;
    std::thread waiter([&service, set] {
        int sig = 0;
        sigwait(&set, &sig);
        service.stop();
    });
    service.run();
    waiter.join();
    pthread_sigmask(SIG_UNBLOCK, &set, nullptr);
    return kExitOk;
}

}  // namespace

int cli_dispatch(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err, std::istream& in) {
    CLI::App app{"Personalized anti-phishing guard", argv.empty() ? "papg" : argv.front()};
    app.require_subcommand(1);

    GlobalOptions g;
    app.add_option("--config", g.config_path, "key=value config file (default: $PAPG_CONFIG)");
    app.add_option("--store", g.store_path, "whitelist store snapshot path");
    app.add_option("--password", g.password, "configuration password (default: $PAPG_PASSWORD, then stdin)");

    std::string url;
    bool check_json = false;
    auto* check = app.add_subcommand("check", "classify a URL");
    check->add_option("url", url)->required();
    check->add_flag("--json", check_json, "print the full verdict record");

    std::string domain;
    auto* whitelist = app.add_subcommand("whitelist", "manage the personal whitelist");
    whitelist->require_subcommand(1);
    auto* wl_list = whitelist->add_subcommand("list");
    auto* wl_add = whitelist->add_subcommand("add");
    wl_add->add_option("domain", domain)->required();
    auto* wl_remove = whitelist->add_subcommand("remove");
    wl_remove->add_option("domain", domain)->required();

    auto* blocklist = app.add_subcommand("blocklist", "manage the local blocklist");
    blocklist->require_subcommand(1);
    auto* bl_list = blocklist->add_subcommand("list");
    auto* bl_add = blocklist->add_subcommand("add");
    bl_add->add_option("domain", domain)->required();
    auto* bl_remove = blocklist->add_subcommand("remove");
    bl_remove->add_option("domain", domain)->required();

    bool dry_run = false;
    auto* evict = app.add_subcommand("evict", "drop entries past the retention period");
    evict->add_flag("--dry-run", dry_run, "only list what would be removed");

    std::string file;
    auto* export_cmd = app.add_subcommand("export", "write the profile to a file");
    export_cmd->add_option("file", file)->required();
    bool mark_imported = false;
    auto* import_cmd = app.add_subcommand("import", "replace the store with a profile file");
    import_cmd->add_option("file", file)->required();
    import_cmd->add_flag("--mark-imported", mark_imported, "set every entry's origin to Imported");

    std::optional<std::string> new_password;
    auto* set_password = app.add_subcommand("set-password", "set or replace the configuration password");
    set_password->add_option("--new", new_password, "new password (default: read from stdin)");

    SimulationParams sim;
    auto* simulate = app.add_subcommand("simulate", "replay the whitelist growth model");
    simulate->add_option("--days", sim.days)->check(CLI::PositiveNumber);
    simulate->add_option("--rate", sim.new_sites_per_day)->check(CLI::NonNegativeNumber);
    simulate->add_option("--retention", sim.retention_days)->check(CLI::IsMember({30, 90, 180}));

    auto* serve = app.add_subcommand("serve", "run the local HTTP API");

    std::vector<std::string> args(argv.size() > 1 ? argv.begin() + 1 : argv.end(), argv.end());
    std::reverse(args.begin(), args.end());
    try {
        app.parse(args);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "papg: " << e.what() << '\n';
        return kExitUsage;
    }

    try {
        if (check->parsed()) return cmd_check(g, url, check_json, out);
        if (simulate->parsed()) {
            const SimulationReport report = simulate_growth(sim);
            out << "steady-state size: " << report.steady_state_size << " (from day " << report.steady_from_day
                << ")\n"
                << "peak size: " << report.peak_size << '\n';
            return kExitOk;
        }
        if (serve->parsed()) return cmd_serve(g, out);

        Context ctx = open_context(g);
        WhitelistStore& store = *ctx.store;
        const Timestamp now = system_now();

        if (wl_list->parsed()) {
            for (const auto& e : store.entries()) print_entry(out, e);
        } else if (wl_add->parsed()) {
            const auto d = ctx.psl().parse_domain(domain);
            store.add(d, Origin::Manual, now, session_for(store, g, in));
            out << "added " << d.value() << '\n';
        } else if (wl_remove->parsed()) {
            const auto d = ctx.psl().parse_domain(domain);
            if (!store.remove(d, now, session_for(store, g, in))) {
                throw Error(Errc::NotFound, d.value() + " is not whitelisted");
            }
            out << "removed " << d.value() << '\n';
        } else if (bl_list->parsed()) {
            for (const auto& b : store.blocklist()) {
                out << b.domain.value() << '\t' << format_rfc3339(b.reported_at) << '\n';
            }
        } else if (bl_add->parsed()) {
            const auto d = ctx.psl().parse_domain(domain);
            store.block(d, now, session_for(store, g, in));
            out << "blocked " << d.value() << '\n';
        } else if (bl_remove->parsed()) {
            const auto d = ctx.psl().parse_domain(domain);
            if (!store.unblock(d, now, session_for(store, g, in))) {
                throw Error(Errc::NotFound, d.value() + " is not blocked");
            }
            out << "unblocked " << d.value() << '\n';
        } else if (evict->parsed()) {
            const auto removed = store.evict(now, dry_run);
            for (const auto& e : removed) out << (dry_run ? "would remove " : "removed ") << e.domain.value() << '\n';
            out << removed.size() << (dry_run ? " entries would be removed\n" : " entries removed\n");
        } else if (export_cmd->parsed()) {
            const Profile p = store.export_profile(file, now, session_for(store, g, in));
            out << "exported " << p.whitelist.size() << " whitelist and " << p.blocklist.size()
                << " blocklist entries\n";
        } else if (import_cmd->parsed()) {
            const Profile p = store.import_profile(file, now, session_for(store, g, in),
                                                   mark_imported ? ImportMode::MarkImported : ImportMode::PreserveOrigin);
            out << "imported " << p.whitelist.size() << " whitelist and " << p.blocklist.size()
                << " blocklist entries\n";
        } else if (set_password->parsed()) {
            const std::string session = session_for(store, g, in);
            const std::string passphrase = new_password ? *new_password : read_passphrase(in);
            if (passphrase.empty()) throw Error(Errc::InvalidArgument, "the new password must not be empty");
            store.set_password(passphrase, now, session);
            out << "password set\n";
        }
        return kExitOk;
    } catch (const Error& e) {
        err << "papg: " << to_string(e.code()) << ": " << e.what() << '\n';
        return e.code() == Errc::InvalidArgument || e.code() == Errc::MalformedUrl ? kExitUsage : kExitDomainError;
    }
}

}  // namespace papg
