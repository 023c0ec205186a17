#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "papg/repo_client.hpp"
#include "papg/spoof.hpp"
#include "papg/url_canon.hpp"
#include "papg/whitelist_store.hpp"

namespace papg {

enum class Verdict { Safe, Phishing, Unknown };
enum class VerdictSource { Whitelist, LocalBlocklist, ExternalRepo, None };
enum class Judgement { Safe, Unsafe };

std::string_view to_string(Verdict v) noexcept;
std::string_view to_string(VerdictSource s) noexcept;

struct VerdictRecord {
    std::optional<CanonicalUrl> url;  // absent when the input was malformed
    std::string raw_url;
    std::optional<RegistrableDomain> domain;
    Verdict verdict = Verdict::Unknown;
    VerdictSource source = VerdictSource::None;
    SpoofReport spoof;
    Timestamp decided_at;
    bool pending_repo = false;
    bool malformed = false;

    /// Safe only from the whitelist, Phishing only from a blocklist or
    /// repository, and a pending lookup is always Unknown.
    [[nodiscard]] bool coherent() const;
};

enum class PromptKind { AutoAddOffer, UnknownFeedback };

std::string_view to_string(PromptKind k) noexcept;

struct PendingPrompt {
    std::uint64_t id = 0;
    PromptKind kind = PromptKind::AutoAddOffer;
    RegistrableDomain domain;
    // AutoAddOffer evidence: visits counted within the window.
    std::uint64_t visit_count = 0;
    int window_days = 0;
    Timestamp created_at;
};

/// Two-phase decision flow. Phase one consults the local blocklist and
/// whitelist; phase two hands unknown domains to the repository client in
/// the background and serves the eventual answer from a short-lived
/// verdict cache on follow-up checks.
class VerdictEngine {
public:
    static constexpr std::chrono::seconds kVerdictCacheTtl{60};

    VerdictEngine(WhitelistStore& store, RepoClient& repo);

    /// Never throws for bad input: malformed URLs come back Unknown with
    /// `malformed` set.
    VerdictRecord check(std::string_view raw_url, Timestamp now);

    /// Throws NotAuthorized.
    VerdictRecord feedback(const RegistrableDomain& domain, Judgement judgement, std::string_view session,
                           Timestamp now);

    /// Records a visit to a domain that is on neither list. Returns an
    /// AutoAddOffer the first time the visit count inside the window
    /// reaches the threshold; later visits in the same window stay quiet.
    std::optional<PendingPrompt> observe_visit(const RegistrableDomain& domain, Timestamp now);

    /// Accepting adds the domain to the whitelist; declining suppresses a
    /// new offer for one window. Throws NotFound for an unknown prompt id,
    /// Conflict when the domain was whitelisted or blocked meanwhile, and
    /// NotAuthorized.
    void resolve_prompt(std::uint64_t prompt_id, bool accept, std::string_view session, Timestamp now);

    [[nodiscard]] std::vector<PendingPrompt> prompts() const;

    /// Visits kept for `domain`; older ones are pruned on each new visit.
    [[nodiscard]] std::vector<Timestamp> recorded_visits(const RegistrableDomain& domain) const;

    [[nodiscard]] WhitelistStore& store() noexcept { return store_; }
    [[nodiscard]] RepoClient& repo() noexcept { return repo_; }

private:
    struct Shared;

    VerdictRecord evaluate(const CanonicalUrl& url, std::string_view raw, Timestamp now, bool side_effects);

    WhitelistStore& store_;
    RepoClient& repo_;
    // Shared with repository completion callbacks, which may outlive the engine.
    std::shared_ptr<Shared> shared_;
    // Serializes feedback and prompt resolution with each other.
    std::mutex feedback_mutex_;
};

}  // namespace papg
