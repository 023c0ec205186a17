#include "papg/whitelist_store.hpp"

#include <algorithm>
#include <fstream>
#include <mutex>
#include <sstream>

#include <unistd.h>

#include "papg/error.hpp"
#include "papg/profile_json.hpp"

namespace papg {

std::string_view to_string(Origin origin) noexcept {
    switch (origin) {
        case Origin::Manual: return "Manual";
        case Origin::PromptAccepted: return "PromptAccepted";
        case Origin::Imported: return "Imported";
    }
    return "Manual";
}

std::optional<Origin> origin_from_string(std::string_view text) noexcept {
    if (text == "Manual") return Origin::Manual;
    if (text == "PromptAccepted") return Origin::PromptAccepted;
    if (text == "Imported") return Origin::Imported;
    return std::nullopt;
}

void Settings::validate() const {
    if (std::find(std::begin(kRetentionChoices), std::end(kRetentionChoices), retention_days) ==
        std::end(kRetentionChoices)) {
        throw Error(Errc::InvalidArgument,
                    "retention_days must be 30, 90 or 180 (got " + std::to_string(retention_days) + ")");
    }
    if (auto_add_min_visits < 1) throw Error(Errc::InvalidArgument, "auto_add_min_visits must be positive");
    if (auto_add_window_days < 1) throw Error(Errc::InvalidArgument, "auto_add_window_days must be positive");
}

namespace {

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::IoFailure, "cannot read " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) throw Error(Errc::IoFailure, "error reading " + path.string());
    return buf.str();
}

// Write to a sibling temp file, flush to disk, then rename over the target.
void write_file_atomically(const std::filesystem::path& path, const std::string& contents) {
    std::filesystem::path tmp = path;
    tmp += ".tmp." + std::to_string(::getpid());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(Errc::IoFailure, "cannot write " + tmp.string());
        out << contents;
        out.flush();
        if (!out) throw Error(Errc::IoFailure, "error writing " + tmp.string());
    }
    if (FILE* f = std::fopen(tmp.c_str(), "rb")) {
        ::fsync(::fileno(f));
        std::fclose(f);
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw Error(Errc::IoFailure, "cannot replace " + path.string());
    }
}

void sort_by_domain(std::vector<WhitelistEntry>& v) {
    std::sort(v.begin(), v.end(), [](const WhitelistEntry& a, const WhitelistEntry& b) { return a.domain < b.domain; });
}

}  // namespace

WhitelistStore::EntryStats WhitelistStore::compact(const WhitelistEntry& e) {
    return EntryStats{e.first_seen, e.last_visited, std::min(e.visit_count, kMaxVisitCount),
                      static_cast<std::uint64_t>(e.origin)};
}

WhitelistEntry WhitelistStore::expand(const RegistrableDomain& domain, const EntryStats& s) {
    return WhitelistEntry{domain, s.first_seen, s.last_visited, s.visit_count, static_cast<Origin>(s.origin)};
}

WhitelistStore::WhitelistStore(const PublicSuffixList& psl) : WhitelistStore(psl, Options{}) {}

WhitelistStore::WhitelistStore(const PublicSuffixList& psl, Options options)
    : psl_(psl), options_(std::move(options)), sessions_(options_.session_lifetime) {}

std::unique_ptr<WhitelistStore> WhitelistStore::open(const std::filesystem::path& snapshot,
                                                     const PublicSuffixList& psl, Options options) {
    options.snapshot_path = snapshot;
    auto store = std::make_unique<WhitelistStore>(psl, std::move(options));
    std::error_code ec;
    if (!std::filesystem::exists(snapshot, ec)) return store;
    try {
        const SnapshotDoc doc = snapshot_from_json(parse_profile_text(read_file(snapshot)), psl);
        State& s = store->state_;
        s.settings = doc.profile.settings;
        for (const auto& e : doc.profile.whitelist) s.whitelist.emplace(e.domain, compact(e));
        for (const auto& b : doc.profile.blocklist) s.blocklist.emplace(b.domain, b.reported_at);
        s.dirty = doc.dirty;
    } catch (const Error& e) {
        throw Error(Errc::StoreOpenFailure, "cannot open store " + snapshot.string() + ": " + e.what());
    }
    return store;
}

template <typename F>
auto WhitelistStore::mutate(F&& fn) {
    std::unique_lock lock(mutex_);
    if (!options_.snapshot_path) {
        if constexpr (std::is_void_v<decltype(fn(state_))>) {
            fn(state_);
            state_.dirty = true;
            return;
        } else {
            auto result = fn(state_);
            state_.dirty = true;
            return result;
        }
    }
    State before = state_;
    try {
        if constexpr (std::is_void_v<decltype(fn(state_))>) {
            fn(state_);
            state_.dirty = true;
            persist_locked();
        } else {
            auto result = fn(state_);
            state_.dirty = true;
            persist_locked();
            return result;
        }
    } catch (...) {
        state_ = std::move(before);
        throw;
    }
}

void WhitelistStore::persist_locked() const {
    if (!options_.snapshot_path) return;
    const Profile p = snapshot_locked(system_now());
    write_file_atomically(*options_.snapshot_path, snapshot_to_json(p, state_.dirty).dump(2) + "\n");
}

Profile WhitelistStore::snapshot_locked(Timestamp now) const {
    Profile p;
    p.exported_at = now;
    p.settings = state_.settings;
    p.whitelist.reserve(state_.whitelist.size());
    for (const auto& [domain, stats] : state_.whitelist) p.whitelist.push_back(expand(domain, stats));
    sort_by_domain(p.whitelist);
    p.blocklist.reserve(state_.blocklist.size());
    for (const auto& [domain, at] : state_.blocklist) p.blocklist.push_back({domain, at});
    std::sort(p.blocklist.begin(), p.blocklist.end(),
              [](const BlocklistEntry& a, const BlocklistEntry& b) { return a.domain < b.domain; });
    return p;
}

void WhitelistStore::require_authorized(std::string_view session, Timestamp now) const {
    if (state_.settings.password_record && !sessions_.valid(session, now)) {
        throw Error(Errc::NotAuthorized, "a valid session is required while a configuration password is set");
    }
}

// --- whitelist ---

std::optional<WhitelistEntry> WhitelistStore::lookup(const RegistrableDomain& domain) const {
    std::shared_lock lock(mutex_);
    auto it = state_.whitelist.find(domain);
    if (it == state_.whitelist.end()) return std::nullopt;
    return expand(it->first, it->second);
}

bool WhitelistStore::contains(const RegistrableDomain& domain) const {
    std::shared_lock lock(mutex_);
    return state_.whitelist.contains(domain);
}

std::size_t WhitelistStore::size() const {
    std::shared_lock lock(mutex_);
    return state_.whitelist.size();
}

std::vector<WhitelistEntry> WhitelistStore::entries() const {
    std::shared_lock lock(mutex_);
    std::vector<WhitelistEntry> out;
    out.reserve(state_.whitelist.size());
    for (const auto& [domain, stats] : state_.whitelist) out.push_back(expand(domain, stats));
    sort_by_domain(out);
    return out;
}

std::set<RegistrableDomain> WhitelistStore::domains() const {
    std::shared_lock lock(mutex_);
    std::set<RegistrableDomain> out;
    for (const auto& [domain, entry] : state_.whitelist) out.insert(domain);
    return out;
}

WhitelistEntry WhitelistStore::add(const RegistrableDomain& domain, Origin origin, Timestamp now,
                                   std::string_view session) {
    return mutate([&](State& s) {
        require_authorized(session, now);
        if (s.whitelist.contains(domain)) {
            throw Error(Errc::AlreadyPresent, domain.value() + " is already whitelisted");
        }
        s.blocklist.erase(domain);
        WhitelistEntry entry{domain, now, now, 1, origin};
        s.whitelist.emplace(domain, compact(entry));
        return entry;
    });
}

bool WhitelistStore::remove(const RegistrableDomain& domain, Timestamp now, std::string_view session) {
    {
        std::shared_lock lock(mutex_);
        require_authorized(session, now);
        if (!state_.whitelist.contains(domain)) return false;
    }
    return mutate([&](State& s) {
        require_authorized(session, now);
        return s.whitelist.erase(domain) > 0;
    });
}

WhitelistEntry WhitelistStore::touch(const RegistrableDomain& domain, Timestamp now) {
    return mutate([&](State& s) {
        auto it = s.whitelist.find(domain);
        if (it == s.whitelist.end()) throw Error(Errc::NotFound, domain.value() + " is not whitelisted");
        EntryStats& e = it->second;
        e.last_visited = std::max(e.last_visited, now);
        if (e.visit_count < kMaxVisitCount) ++e.visit_count;
        return expand(domain, e);
    });
}

std::vector<WhitelistEntry> WhitelistStore::evict(Timestamp now, bool dry_run) {
    auto stale = [&](const State& s) {
        const auto window = days(s.settings.retention_days);
        std::vector<WhitelistEntry> out;
        for (const auto& [domain, e] : s.whitelist) {
            if (now - e.last_visited > window) out.push_back(expand(domain, e));
        }
        sort_by_domain(out);
        return out;
    };
    {
        std::shared_lock lock(mutex_);
        auto victims = stale(state_);
        if (dry_run || victims.empty()) return victims;
    }
    return mutate([&](State& s) {
        auto victims = stale(s);
        for (const auto& e : victims) s.whitelist.erase(e.domain);
        return victims;
    });
}

// --- blocklist ---

BlocklistEntry WhitelistStore::block(const RegistrableDomain& domain, Timestamp now, std::string_view session) {
    return mutate([&](State& s) {
        require_authorized(session, now);
        s.whitelist.erase(domain);
        auto [it, inserted] = s.blocklist.emplace(domain, now);
        return BlocklistEntry{domain, it->second};
    });
}

bool WhitelistStore::unblock(const RegistrableDomain& domain, Timestamp now, std::string_view session) {
    {
        std::shared_lock lock(mutex_);
        require_authorized(session, now);
        if (!state_.blocklist.contains(domain)) return false;
    }
    return mutate([&](State& s) {
        require_authorized(session, now);
        return s.blocklist.erase(domain) > 0;
    });
}

bool WhitelistStore::is_blocked(const RegistrableDomain& domain) const {
    std::shared_lock lock(mutex_);
    return state_.blocklist.contains(domain);
}

std::vector<BlocklistEntry> WhitelistStore::blocklist() const {
    std::shared_lock lock(mutex_);
    return snapshot_locked(Timestamp{}).blocklist;
}

// --- settings and password ---

Settings WhitelistStore::settings() const {
    std::shared_lock lock(mutex_);
    return state_.settings;
}

void WhitelistStore::update_settings(const Settings& updated, Timestamp now, std::string_view session) {
    Settings candidate = updated;
    candidate.validate();
    mutate([&](State& s) {
        require_authorized(session, now);
        candidate.password_record = s.settings.password_record;
        s.settings = candidate;
    });
}

bool WhitelistStore::password_protected() const {
    std::shared_lock lock(mutex_);
    return state_.settings.password_record.has_value();
}

std::string WhitelistStore::set_password(std::string_view passphrase, Timestamp now, std::string_view session) {
    if (passphrase.empty()) throw Error(Errc::InvalidArgument, "passphrase must not be empty");
    {
        std::shared_lock lock(mutex_);
        require_authorized(session, now);
    }
    // The KDF is slow; run it outside the writer lock.
    PasswordRecord record = make_password_record(passphrase, options_.kdf);
    mutate([&](State& s) {
        require_authorized(session, now);
        s.settings.password_record = std::move(record);
    });
    sessions_.revoke_all();
    return sessions_.issue(now);
}

void WhitelistStore::clear_password(Timestamp now, std::string_view session) {
    mutate([&](State& s) {
        require_authorized(session, now);
        s.settings.password_record.reset();
    });
    sessions_.revoke_all();
}

bool WhitelistStore::verify_password(std::string_view passphrase) const {
    std::optional<PasswordRecord> record;
    {
        std::shared_lock lock(mutex_);
        record = state_.settings.password_record;
    }
    return record && papg::verify_password(*record, passphrase);
}

std::optional<std::string> WhitelistStore::open_session(std::string_view passphrase, Timestamp now) {
    if (password_protected() && !verify_password(passphrase)) return std::nullopt;
    return sessions_.issue(now);
}

bool WhitelistStore::authorized(std::string_view session, Timestamp now) const {
    std::shared_lock lock(mutex_);
    return !state_.settings.password_record || sessions_.valid(session, now);
}

// --- profiles ---

Profile WhitelistStore::snapshot(Timestamp now) const {
    std::shared_lock lock(mutex_);
    return snapshot_locked(now);
}

Profile WhitelistStore::export_profile(const std::filesystem::path& path, Timestamp now, std::string_view session) {
    Profile profile;
    {
        std::shared_lock lock(mutex_);
        require_authorized(session, now);
        profile = snapshot_locked(now);
    }
    write_file_atomically(path, profile_to_json(profile).dump(2) + "\n");
    // The store now matches a profile file on disk.
    std::unique_lock lock(mutex_);
    state_.dirty = false;
    try {
        persist_locked();
    } catch (const Error&) {
        // The export itself succeeded; a stale dirty flag is harmless.
    }
    return profile;
}

Profile WhitelistStore::import_profile(const std::filesystem::path& path, Timestamp now, std::string_view session,
                                       ImportMode mode) {
    if (!authorized(session, now)) {
        throw Error(Errc::NotAuthorized, "a valid session is required while a configuration password is set");
    }
    Profile profile = profile_from_json(parse_profile_text(read_file(path)), psl_);
    replace_with(profile, now, session, mode);
    if (mode == ImportMode::MarkImported) {
        for (auto& e : profile.whitelist) e.origin = Origin::Imported;
    }
    return profile;
}

void WhitelistStore::replace_with(const Profile& profile, Timestamp now, std::string_view session, ImportMode mode) {
    if (profile.format_version != kProfileFormatVersion) {
        throw Error(Errc::UnsupportedVersion, "unsupported profile format_version " +
                                                  std::to_string(profile.format_version));
    }
    profile.settings.validate();
    bool password_changed = false;
    mutate([&](State& s) {
        require_authorized(session, now);
        State next;
        next.settings = profile.settings;
        for (const auto& e : profile.whitelist) {
            WhitelistEntry entry = e;
            if (mode == ImportMode::MarkImported) entry.origin = Origin::Imported;
            if (!next.whitelist.emplace(entry.domain, compact(entry)).second) {
                throw Error(Errc::CorruptProfile, "duplicate whitelist domain " + entry.domain.value());
            }
        }
        for (const auto& b : profile.blocklist) {
            if (next.whitelist.contains(b.domain) || !next.blocklist.emplace(b.domain, b.reported_at).second) {
                throw Error(Errc::CorruptProfile, "conflicting blocklist domain " + b.domain.value());
            }
        }
        password_changed = next.settings.password_record != s.settings.password_record;
        s = std::move(next);
    });
    // Sessions were issued under the old password.
    if (password_changed) sessions_.revoke_all();
}

bool WhitelistStore::dirty() const {
    std::shared_lock lock(mutex_);
    return state_.dirty;
}

}  // namespace papg
