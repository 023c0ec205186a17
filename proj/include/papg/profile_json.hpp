#pragma once

#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "papg/whitelist_store.hpp"

namespace papg {

// Profile file:  {"format_version","exported_at","settings","whitelist","blocklist"}
// Store snapshot: the same keys plus "dirty".
nlohmann::json profile_to_json(const Profile& profile);
nlohmann::json snapshot_to_json(const Profile& profile, bool dirty);

/// Strict decoding: unknown or missing keys, wrong types, invalid domains
/// and out-of-range settings throw Error(CorruptProfile); a format_version
/// other than 1 throws Error(UnsupportedVersion).
Profile profile_from_json(const nlohmann::json& doc, const PublicSuffixList& psl);

struct SnapshotDoc {
    Profile profile;
    bool dirty = false;
};
SnapshotDoc snapshot_from_json(const nlohmann::json& doc, const PublicSuffixList& psl);

/// Parses text, mapping syntax errors to Error(CorruptProfile).
nlohmann::json parse_profile_text(std::string_view text);

}  // namespace papg
