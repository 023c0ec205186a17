#include "papg/profile_json.hpp"

#include <algorithm>
#include <initializer_list>

#include "papg/error.hpp"

namespace papg {

using nlohmann::json;

namespace {

[[noreturn]] void corrupt(const std::string& why) { throw Error(Errc::CorruptProfile, "corrupt profile: " + why); }

void expect_keys(const json& obj, std::initializer_list<std::string_view> keys, const std::string& where) {
    if (!obj.is_object()) corrupt(where + " is not an object");
    for (auto key : keys) {
        if (!obj.contains(key)) corrupt(where + " lacks \"" + std::string(key) + "\"");
    }
    for (const auto& item : obj.items()) {
        if (std::find(keys.begin(), keys.end(), item.key()) == keys.end()) {
            corrupt(where + " has unknown key \"" + item.key() + "\"");
        }
    }
}

std::int64_t get_int(const json& obj, const char* key, const std::string& where) {
    const json& v = obj.at(key);
    if (!v.is_number_integer()) corrupt(where + "." + key + " is not an integer");
    return v.get<std::int64_t>();
}

std::uint64_t get_uint(const json& obj, const char* key, const std::string& where) {
    const json& v = obj.at(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
        corrupt(where + "." + key + " is not a non-negative integer");
    }
    return v.get<std::uint64_t>();
}

const std::string& get_string(const json& obj, const char* key, const std::string& where) {
    const json& v = obj.at(key);
    if (!v.is_string()) corrupt(where + "." + key + " is not a string");
    return v.get_ref<const std::string&>();
}

Timestamp get_time(const json& obj, const char* key, const std::string& where) {
    auto t = parse_rfc3339(get_string(obj, key, where));
    if (!t) corrupt(where + "." + key + " is not an RFC 3339 timestamp");
    return *t;
}

RegistrableDomain get_domain(const json& obj, const std::string& where, const PublicSuffixList& psl) {
    const std::string& text = get_string(obj, "domain", where);
    try {
        auto domain = psl.parse_domain(text);
        if (domain.value() != text) corrupt(where + ".domain \"" + text + "\" is not a registrable domain");
        return domain;
    } catch (const Error& e) {
        if (e.code() == Errc::CorruptProfile) throw;
        corrupt(where + ".domain \"" + text + "\": " + e.what());
    }
}

json settings_to_json(const Settings& s) {
    json out{{"retention_days", s.retention_days},
             {"auto_add_min_visits", s.auto_add_min_visits},
             {"auto_add_window_days", s.auto_add_window_days},
             {"password_record", nullptr}};
    if (s.password_record) {
        const auto& r = *s.password_record;
        out["password_record"] = json{{"kdf_salt", r.kdf_salt},
                                      {"kdf_params",
                                       {{"algorithm", r.kdf_params.algorithm},
                                        {"opslimit", r.kdf_params.opslimit},
                                        {"memlimit", r.kdf_params.memlimit}}},
                                      {"derived_key_digest", r.derived_key_digest}};
    }
    return out;
}

Settings settings_from_json(const json& obj) {
    const std::string where = "settings";
    expect_keys(obj, {"retention_days", "auto_add_min_visits", "auto_add_window_days", "password_record"}, where);
    Settings s;
    s.retention_days = static_cast<int>(get_int(obj, "retention_days", where));
    s.auto_add_min_visits = static_cast<int>(get_int(obj, "auto_add_min_visits", where));
    s.auto_add_window_days = static_cast<int>(get_int(obj, "auto_add_window_days", where));
    const json& pw = obj.at("password_record");
    if (!pw.is_null()) {
        const std::string pw_where = where + ".password_record";
        expect_keys(pw, {"kdf_salt", "kdf_params", "derived_key_digest"}, pw_where);
        const json& params = pw.at("kdf_params");
        const std::string params_where = pw_where + ".kdf_params";
        expect_keys(params, {"algorithm", "opslimit", "memlimit"}, params_where);
        PasswordRecord record;
        record.kdf_salt = get_string(pw, "kdf_salt", pw_where);
        record.derived_key_digest = get_string(pw, "derived_key_digest", pw_where);
        record.kdf_params.algorithm = get_string(params, "algorithm", params_where);
        record.kdf_params.opslimit = get_uint(params, "opslimit", params_where);
        record.kdf_params.memlimit = get_uint(params, "memlimit", params_where);
        s.password_record = std::move(record);
    }
    try {
        s.validate();
    } catch (const Error& e) {
        corrupt(e.what());
    }
    return s;
}

json profile_body(const Profile& p) {
    json whitelist = json::array();
    for (const auto& e : p.whitelist) {
        whitelist.push_back({{"domain", e.domain.value()},
                             {"first_seen", format_rfc3339(e.first_seen)},
                             {"last_visited", format_rfc3339(e.last_visited)},
                             {"visit_count", e.visit_count},
                             {"origin", to_string(e.origin)}});
    }
    json blocklist = json::array();
    for (const auto& b : p.blocklist) {
        blocklist.push_back({{"domain", b.domain.value()}, {"reported_at", format_rfc3339(b.reported_at)}});
    }
    return json{{"format_version", p.format_version},
                {"exported_at", format_rfc3339(p.exported_at)},
                {"settings", settings_to_json(p.settings)},
                {"whitelist", std::move(whitelist)},
                {"blocklist", std::move(blocklist)}};
}

Profile profile_fields(const json& doc, const PublicSuffixList& psl) {
    Profile p;
    p.exported_at = get_time(doc, "exported_at", "profile");
    p.settings = settings_from_json(doc.at("settings"));

    const json& whitelist = doc.at("whitelist");
    if (!whitelist.is_array()) corrupt("whitelist is not an array");
    for (std::size_t i = 0; i < whitelist.size(); ++i) {
        const std::string where = "whitelist[" + std::to_string(i) + "]";
        const json& item = whitelist[i];
        expect_keys(item, {"domain", "first_seen", "last_visited", "visit_count", "origin"}, where);
        auto origin = origin_from_string(get_string(item, "origin", where));
        if (!origin) corrupt(where + ".origin is not Manual, PromptAccepted or Imported");
        WhitelistEntry e{get_domain(item, where, psl), get_time(item, "first_seen", where),
                         get_time(item, "last_visited", where), get_uint(item, "visit_count", where), *origin};
        if (e.visit_count < 1) corrupt(where + ".visit_count must be at least 1");
        if (e.visit_count > kMaxVisitCount) corrupt(where + ".visit_count is too large");
        if (e.last_visited < e.first_seen) corrupt(where + ".last_visited precedes first_seen");
        p.whitelist.push_back(std::move(e));
    }

    const json& blocklist = doc.at("blocklist");
    if (!blocklist.is_array()) corrupt("blocklist is not an array");
    for (std::size_t i = 0; i < blocklist.size(); ++i) {
        const std::string where = "blocklist[" + std::to_string(i) + "]";
        const json& item = blocklist[i];
        expect_keys(item, {"domain", "reported_at"}, where);
        p.blocklist.push_back({get_domain(item, where, psl), get_time(item, "reported_at", where)});
    }

    auto by_domain = [](const auto& a, const auto& b) { return a.domain < b.domain; };
    auto same_domain = [](const auto& a, const auto& b) { return a.domain == b.domain; };
    std::sort(p.whitelist.begin(), p.whitelist.end(), by_domain);
    std::sort(p.blocklist.begin(), p.blocklist.end(), by_domain);
    if (std::adjacent_find(p.whitelist.begin(), p.whitelist.end(), same_domain) != p.whitelist.end()) {
        corrupt("duplicate whitelist domain");
    }
    if (std::adjacent_find(p.blocklist.begin(), p.blocklist.end(), same_domain) != p.blocklist.end()) {
        corrupt("duplicate blocklist domain");
    }
    for (const auto& b : p.blocklist) {
        if (std::binary_search(p.whitelist.begin(), p.whitelist.end(), b, by_domain)) {
            corrupt("domain " + b.domain.value() + " is both whitelisted and blocked");
        }
    }
    return p;
}

void check_version(const json& doc) {
    if (!doc.is_object()) corrupt("top level is not an object");
    if (!doc.contains("format_version")) corrupt("missing format_version");
    const json& v = doc.at("format_version");
    if (!v.is_number_integer()) corrupt("format_version is not an integer");
    if (v.get<std::int64_t>() != kProfileFormatVersion) {
        throw Error(Errc::UnsupportedVersion, "unsupported profile format_version " + v.dump());
    }
}

}  // namespace

json profile_to_json(const Profile& profile) { return profile_body(profile); }

json snapshot_to_json(const Profile& profile, bool dirty) {
    json out = profile_body(profile);
    out["dirty"] = dirty;
    return out;
}

Profile profile_from_json(const json& doc, const PublicSuffixList& psl) {
    check_version(doc);
    expect_keys(doc, {"format_version", "exported_at", "settings", "whitelist", "blocklist"}, "profile");
    return profile_fields(doc, psl);
}

SnapshotDoc snapshot_from_json(const json& doc, const PublicSuffixList& psl) {
    check_version(doc);
    expect_keys(doc, {"format_version", "exported_at", "settings", "whitelist", "blocklist", "dirty"}, "snapshot");
    if (!doc.at("dirty").is_boolean()) corrupt("dirty is not a boolean");
    return SnapshotDoc{profile_fields(doc, psl), doc.at("dirty").get<bool>()};
}

json parse_profile_text(std::string_view text) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        corrupt(e.what());
    }
}

}  // namespace papg
