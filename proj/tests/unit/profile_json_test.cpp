#include <gtest/gtest.h>

#include "papg/error.hpp"
#include "papg/profile_json.hpp"
#include "support.hpp"

using namespace papg;
using nlohmann::json;

namespace {

const PublicSuffixList& psl() { return PublicSuffixList::bundled(); }

json valid_doc() {
    return json::parse(R"({
      "format_version": 1,
      "exported_at": "2026-05-01T10:00:00Z",
      "settings": {"retention_days": 90, "auto_add_min_visits": 5, "auto_add_window_days": 14,
                   "password_record": null},
      "whitelist": [
        {"domain": "a.com", "first_seen": "2026-04-01T00:00:00Z", "last_visited": "2026-04-02T00:00:00Z",
         "visit_count": 3, "origin": "Manual"},
        {"domain": "b.co.uk", "first_seen": "2026-04-01T00:00:00Z", "last_visited": "2026-04-01T00:00:00Z",
         "visit_count": 1, "origin": "PromptAccepted"}
      ],
      "blocklist": [{"domain": "bad.com", "reported_at": "2026-04-03T00:00:00Z"}]
    })");
}

Errc decode_error(const json& doc) {
    try {
        profile_from_json(doc, psl());
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "accepted " << doc.dump();
    return Errc::InvalidArgument;
}

}  // namespace

TEST(ProfileJson, DecodesAndReencodesExactly) {
    const json doc = valid_doc();
    const Profile p = profile_from_json(doc, psl());
    EXPECT_EQ(p.whitelist.size(), 2u);
    EXPECT_EQ(p.whitelist[0].visit_count, 3u);
    EXPECT_EQ(p.whitelist[1].origin, Origin::PromptAccepted);
    EXPECT_EQ(p.blocklist.at(0).domain.value(), "bad.com");
    EXPECT_EQ(profile_to_json(p), doc);
    EXPECT_EQ(profile_from_json(profile_to_json(p), psl()), p);
}

TEST(ProfileJson, TopLevelKeysAreExact) {
    EXPECT_EQ(valid_doc().size(), 5u);
    auto extra = valid_doc();
    extra["comment"] = "hi";
    EXPECT_EQ(decode_error(extra), Errc::CorruptProfile);
    for (const char* key : {"exported_at", "settings", "whitelist", "blocklist"}) {
        auto missing = valid_doc();
        missing.erase(key);
        EXPECT_EQ(decode_error(missing), Errc::CorruptProfile) << key;
    }
    auto entry_extra = valid_doc();
    entry_extra["whitelist"][0]["note"] = 1;
    EXPECT_EQ(decode_error(entry_extra), Errc::CorruptProfile);
}

TEST(ProfileJson, VersionChecked) {
    auto v = valid_doc();
    v["format_version"] = 99;
    EXPECT_EQ(decode_error(v), Errc::UnsupportedVersion);
    v["format_version"] = "1";
    EXPECT_EQ(decode_error(v), Errc::CorruptProfile);
    v.erase("format_version");
    EXPECT_EQ(decode_error(v), Errc::CorruptProfile);
}

TEST(ProfileJson, RejectsInvalidContent) {
    auto mutate = [](auto&& f) {
        json d = valid_doc();
        f(d);
        return d;
    };
    EXPECT_EQ(decode_error(mutate([](json& d) { d["whitelist"][0]["domain"] = "www.a.com"; })), Errc::CorruptProfile);
    EXPECT_EQ(decode_error(mutate([](json& d) { d["whitelist"][0]["domain"] = "co.uk"; })), Errc::CorruptProfile);
    EXPECT_EQ(decode_error(mutate([](json& d) { d["whitelist"][0]["visit_count"] = 0; })), Errc::CorruptProfile);
    EXPECT_EQ(decode_error(mutate([](json& d) { d["whitelist"][0]["visit_count"] = -2; })), Errc::CorruptProfile);
    EXPECT_EQ(decode_error(mutate([](json& d) { d["whitelist"][0]["visit_count"] = kMaxVisitCount + 1; })),
              Errc::CorruptProfile);
    EXPECT_NO_THROW(profile_from_json(mutate([](json& d) { d["whitelist"][0]["visit_count"] = kMaxVisitCount; }), psl()));
    EXPECT_EQ(decode_error(mutate([](json& d) { d["whitelist"][0]["origin"] = "Friend"; })), Errc::CorruptProfile);
    EXPECT_EQ(decode_error(mutate([](json& d) { d["whitelist"][0]["last_visited"] = "2026-01-01T00:00:00Z"; })),
              Errc::CorruptProfile);
    EXPECT_EQ(decode_error(mutate([](json& d) { d["whitelist"][0]["first_seen"] = "yesterday"; })),
              Errc::CorruptProfile);
    EXPECT_EQ(decode_error(mutate([](json& d) { d["whitelist"][1]["domain"] = "a.com"; })), Errc::CorruptProfile);
    EXPECT_EQ(decode_error(mutate([](json& d) { d["blocklist"][0]["domain"] = "a.com"; })), Errc::CorruptProfile);
    EXPECT_EQ(decode_error(mutate([](json& d) { d["settings"]["retention_days"] = 45; })), Errc::CorruptProfile);
    EXPECT_EQ(decode_error(mutate([](json& d) { d["settings"]["password_record"] = "plain"; })),
              Errc::CorruptProfile);
    EXPECT_EQ(decode_error(mutate([](json& d) { d["whitelist"] = json::object(); })), Errc::CorruptProfile);
}

TEST(ProfileJson, PasswordRecordRoundTrips) {
    Profile p = profile_from_json(valid_doc(), psl());
    p.settings.password_record = make_password_record("pw", KdfParams::minimal());
    const json doc = profile_to_json(p);
    EXPECT_TRUE(doc["settings"]["password_record"].contains("kdf_salt"));
    EXPECT_TRUE(doc["settings"]["password_record"]["kdf_params"].contains("opslimit"));
    const Profile back = profile_from_json(doc, psl());
    EXPECT_EQ(back, p);
    EXPECT_TRUE(verify_password(*back.settings.password_record, "pw"));
}

TEST(ProfileJson, SnapshotCarriesDirtyMarker) {
    const Profile p = profile_from_json(valid_doc(), psl());
    const json snap = snapshot_to_json(p, true);
    EXPECT_EQ(snap["dirty"], true);
    const SnapshotDoc back = snapshot_from_json(snap, psl());
    EXPECT_TRUE(back.dirty);
    EXPECT_EQ(back.profile, p);
    // A profile file is not a snapshot, and vice versa.
    EXPECT_THROW(snapshot_from_json(valid_doc(), psl()), Error);
    EXPECT_THROW(profile_from_json(snap, psl()), Error);
}

TEST(ProfileJson, TextParsingErrorsAreCorruptProfile) {
    for (const char* text : {"", "{", "[1,2", "nul", "{\"format_version\": 1,}"}) {
        try {
            parse_profile_text(text);
            ADD_FAILURE() << text;
        } catch (const Error& e) {
            EXPECT_EQ(e.code(), Errc::CorruptProfile) << text;
        }
    }
}
