#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <absl/container/flat_hash_map.h>

#include "papg/password.hpp"
#include "papg/public_suffix.hpp"
#include "papg/time.hpp"

namespace papg {

enum class Origin { Manual, PromptAccepted, Imported };

std::string_view to_string(Origin origin) noexcept;
std::optional<Origin> origin_from_string(std::string_view text) noexcept;

// Visit counts are stored in 56 bits; touch() saturates there and profiles
// carrying larger counts are rejected.
inline constexpr std::uint64_t kMaxVisitCount = (std::uint64_t{1} << 56) - 1;

struct WhitelistEntry {
    RegistrableDomain domain;
    Timestamp first_seen;
    Timestamp last_visited;
    std::uint64_t visit_count = 1;
    Origin origin = Origin::Manual;

    friend bool operator==(const WhitelistEntry&, const WhitelistEntry&) = default;
};

struct BlocklistEntry {
    RegistrableDomain domain;
    Timestamp reported_at;

    friend bool operator==(const BlocklistEntry&, const BlocklistEntry&) = default;
};

struct Settings {
    static constexpr int kRetentionChoices[] = {30, 90, 180};

    int retention_days = 90;
    int auto_add_min_visits = 5;
    int auto_add_window_days = 14;
    std::optional<PasswordRecord> password_record;

    // Throws Error(InvalidArgument) when a field is out of range.
    void validate() const;

    friend bool operator==(const Settings&, const Settings&) = default;
};

inline constexpr int kProfileFormatVersion = 1;

struct Profile {
    int format_version = kProfileFormatVersion;
    Timestamp exported_at;
    Settings settings;
    std::vector<WhitelistEntry> whitelist;  // sorted by domain
    std::vector<BlocklistEntry> blocklist;  // sorted by domain

    friend bool operator==(const Profile&, const Profile&) = default;
};

enum class ImportMode {
    PreserveOrigin,  // entries keep the origin recorded in the file
    MarkImported,    // every entry gets Origin::Imported
};

struct WhitelistStoreOptions {
    std::optional<std::filesystem::path> snapshot_path;
    KdfParams kdf = KdfParams::interactive();
    std::chrono::seconds session_lifetime = SessionRegistry::kDefaultLifetime;
};

/// Personal whitelist plus local blocklist, keyed by registrable domain.
///
/// Readers run concurrently; mutations take an exclusive lock and, when a
/// snapshot path is configured, are committed by rewriting the snapshot
/// file (temp file then rename) before the lock is released. A failed
/// commit rolls the in-memory state back.
///
/// Mutations that change settings or list membership take a session token.
/// While no password is configured every token (including the empty one)
/// is accepted.
class WhitelistStore {
public:
    using Options = WhitelistStoreOptions;

    explicit WhitelistStore(const PublicSuffixList& psl = PublicSuffixList::bundled());
    WhitelistStore(const PublicSuffixList& psl, Options options);

    /// Loads the snapshot when the file exists. Throws
    /// Error(StoreOpenFailure) when it exists but does not parse.
    static std::unique_ptr<WhitelistStore> open(const std::filesystem::path& snapshot,
                                                const PublicSuffixList& psl = PublicSuffixList::bundled(),
                                                Options options = {});

    WhitelistStore(const WhitelistStore&) = delete;
    WhitelistStore& operator=(const WhitelistStore&) = delete;

    [[nodiscard]] const PublicSuffixList& psl() const noexcept { return psl_; }

    // --- whitelist ---
    [[nodiscard]] std::optional<WhitelistEntry> lookup(const RegistrableDomain& domain) const;
    [[nodiscard]] bool contains(const RegistrableDomain& domain) const;
    [[nodiscard]] std::size_t size() const;
    [[nodiscard]] std::vector<WhitelistEntry> entries() const;
    [[nodiscard]] std::set<RegistrableDomain> domains() const;

    /// Adds a new entry; also drops the domain from the blocklist.
    /// Throws AlreadyPresent, NotAuthorized.
    WhitelistEntry add(const RegistrableDomain& domain, Origin origin, Timestamp now,
                       std::string_view session = {});
    /// Throws NotAuthorized.
    bool remove(const RegistrableDomain& domain, Timestamp now, std::string_view session = {});
    /// Records a visit. Throws NotFound.
    WhitelistEntry touch(const RegistrableDomain& domain, Timestamp now);
    /// Removes entries whose last visit is more than retention_days before
    /// `now`. With dry_run the store is left unchanged.
    std::vector<WhitelistEntry> evict(Timestamp now, bool dry_run = false);

    // --- blocklist ---
    /// Adds to the blocklist and drops any whitelist entry for the domain.
    BlocklistEntry block(const RegistrableDomain& domain, Timestamp now, std::string_view session = {});
    bool unblock(const RegistrableDomain& domain, Timestamp now, std::string_view session = {});
    [[nodiscard]] bool is_blocked(const RegistrableDomain& domain) const;
    [[nodiscard]] std::vector<BlocklistEntry> blocklist() const;

    // --- settings and password ---
    [[nodiscard]] Settings settings() const;
    /// Updates retention and auto-add thresholds; the password record in
    /// `updated` is ignored. Throws NotAuthorized, InvalidArgument.
    void update_settings(const Settings& updated, Timestamp now, std::string_view session = {});

    [[nodiscard]] bool password_protected() const;
    /// Sets or replaces the configuration password and returns a fresh
    /// session. Replacing requires a valid session. Existing sessions are
    /// revoked.
    std::string set_password(std::string_view passphrase, Timestamp now, std::string_view session = {});
    /// Removes the password. Throws NotAuthorized.
    void clear_password(Timestamp now, std::string_view session);
    [[nodiscard]] bool verify_password(std::string_view passphrase) const;
    /// Session token when the passphrase matches (any passphrase when no
    /// password is set).
    std::optional<std::string> open_session(std::string_view passphrase, Timestamp now);
    [[nodiscard]] bool authorized(std::string_view session, Timestamp now) const;

    // --- profiles ---
    [[nodiscard]] Profile snapshot(Timestamp now) const;
    /// Throws NotAuthorized, IoFailure.
    Profile export_profile(const std::filesystem::path& path, Timestamp now, std::string_view session = {});
    /// Replaces the whole store with the file contents. Throws
    /// NotAuthorized, UnsupportedVersion, CorruptProfile, IoFailure.
    Profile import_profile(const std::filesystem::path& path, Timestamp now, std::string_view session = {},
                           ImportMode mode = ImportMode::PreserveOrigin);
    /// Same as import_profile for an in-memory profile.
    void replace_with(const Profile& profile, Timestamp now, std::string_view session = {},
                      ImportMode mode = ImportMode::PreserveOrigin);

    /// True when the store changed since the last export.
    [[nodiscard]] bool dirty() const;

private:
    // An entry without its domain, which is the key. Small slots keep the
    // flat table cache-resident at tens of thousands of entries.
    struct EntryStats {
        Timestamp first_seen;
        Timestamp last_visited;
        std::uint64_t visit_count : 56;
        std::uint64_t origin : 8;
    };
    static EntryStats compact(const WhitelistEntry& e);
    static WhitelistEntry expand(const RegistrableDomain& domain, const EntryStats& s);

    struct State {
        Settings settings;
        absl::flat_hash_map<RegistrableDomain, EntryStats> whitelist;
        std::unordered_map<RegistrableDomain, Timestamp> blocklist;
        bool dirty = false;
    };

    void require_authorized(std::string_view session, Timestamp now) const;
    // Runs `mutate` on the state under the writer lock and commits it.
    template <typename F>
    auto mutate(F&& mutate);
    void persist_locked() const;
    Profile snapshot_locked(Timestamp now) const;

    const PublicSuffixList& psl_;
    Options options_;
    mutable std::shared_mutex mutex_;
    State state_;
    SessionRegistry sessions_;
};

}  // namespace papg
