#include "papg/verdict_engine.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <unordered_map>

#include "papg/error.hpp"

namespace papg {

std::string_view to_string(Verdict v) noexcept {
    switch (v) {
        case Verdict::Safe: return "Safe";
        case Verdict::Phishing: return "Phishing";
        case Verdict::Unknown: return "Unknown";
    }
    return "Unknown";
}

std::string_view to_string(VerdictSource s) noexcept {
    switch (s) {
        case VerdictSource::Whitelist: return "Whitelist";
        case VerdictSource::LocalBlocklist: return "LocalBlocklist";
        case VerdictSource::ExternalRepo: return "ExternalRepo";
        case VerdictSource::None: return "None";
    }
    return "None";
}

std::string_view to_string(PromptKind k) noexcept {
    return k == PromptKind::AutoAddOffer ? "AutoAddOffer" : "UnknownFeedback";
}

bool VerdictRecord::coherent() const {
    if (verdict == Verdict::Safe && source != VerdictSource::Whitelist) return false;
    if (verdict == Verdict::Phishing && source != VerdictSource::LocalBlocklist &&
        source != VerdictSource::ExternalRepo) {
        return false;
    }
    if (pending_repo && verdict != Verdict::Unknown) return false;
    return true;
}

struct VerdictEngine::Shared {
    struct CachedVerdict {
        Verdict verdict = Verdict::Unknown;
        VerdictSource source = VerdictSource::None;
        bool pending = true;
        Timestamp started_at;
        std::uint64_t generation = 0;
    };
    struct VisitLog {
        std::deque<Timestamp> visits;
        std::optional<Timestamp> offer_quiet_until;
        std::optional<Timestamp> feedback_quiet_until;
    };

    std::mutex mutex;
    std::unordered_map<RegistrableDomain, CachedVerdict> verdicts;
    std::unordered_map<RegistrableDomain, VisitLog> visits;
    std::map<std::uint64_t, PendingPrompt> prompts;
    std::uint64_t next_prompt_id = 1;
    std::uint64_t next_generation = 1;
    int feedback_quiet_days = 14;

    bool has_prompt(const RegistrableDomain& domain, PromptKind kind) const {
        return std::any_of(prompts.begin(), prompts.end(), [&](const auto& kv) {
            return kv.second.domain == domain && kv.second.kind == kind;
        });
    }

    void drop_prompts(const RegistrableDomain& domain) {
        std::erase_if(prompts, [&](const auto& kv) { return kv.second.domain == domain; });
    }

    // Called from repository worker threads.
    void complete(const RegistrableDomain& domain, std::uint64_t generation, const RepoResult& result) {
        std::lock_guard lock(mutex);
        auto it = verdicts.find(domain);
        if (it == verdicts.end() || it->second.generation != generation) return;
        CachedVerdict& v = it->second;
        v.pending = false;
        switch (result.status) {
            case RepoStatus::Listed:
                v.verdict = Verdict::Phishing;
                v.source = VerdictSource::ExternalRepo;
                break;
            case RepoStatus::NotListed:
                v.verdict = Verdict::Unknown;
                v.source = VerdictSource::ExternalRepo;
                break;
            case RepoStatus::Unavailable:
                v.verdict = Verdict::Unknown;
                v.source = VerdictSource::None;
                break;
        }
        if (v.verdict == Verdict::Unknown) {
            // Nobody could vouch for the domain: ask the user.
            VisitLog& log = visits[domain];
            const bool quiet = log.feedback_quiet_until && v.started_at < *log.feedback_quiet_until;
            if (!quiet && !has_prompt(domain, PromptKind::UnknownFeedback)) {
                const std::uint64_t id = next_prompt_id++;
                prompts.emplace(id, PendingPrompt{id, PromptKind::UnknownFeedback, domain, 0, 0, v.started_at});
                log.feedback_quiet_until = v.started_at + days(feedback_quiet_days);
            }
        }
    }
};

VerdictEngine::VerdictEngine(WhitelistStore& store, RepoClient& repo)
    : store_(store), repo_(repo), shared_(std::make_shared<Shared>()) {}

VerdictRecord VerdictEngine::check(std::string_view raw_url, Timestamp now) {
    CanonicalUrl url;
    try {
        url = canonicalize(raw_url);
    } catch (const Error&) {
        VerdictRecord record;
        record.raw_url = std::string(raw_url);
        record.decided_at = now;
        record.malformed = true;
        return record;
    }
    return evaluate(url, raw_url, now, true);
}

VerdictRecord VerdictEngine::evaluate(const CanonicalUrl& url, std::string_view raw, Timestamp now,
                                      bool side_effects) {
    VerdictRecord record;
    record.url = url;
    record.raw_url = std::string(raw);
    record.decided_at = now;
    if (url.host_kind == HostKind::RegisteredName) record.domain = store_.psl().registrable_domain_of(url.host);

    const std::set<RegistrableDomain> trusted = store_.domains();
    const auto& domain = record.domain;

    // Phase one: the user's own lists.
    if (domain && store_.is_blocked(*domain)) {
        record.verdict = Verdict::Phishing;
        record.source = VerdictSource::LocalBlocklist;
        record.spoof = spoof_signals(url, trusted, store_.psl());
        return record;
    }
    if (domain && trusted.contains(*domain)) {
        bool still_listed = true;
        if (side_effects) {
            try {
                store_.touch(*domain, now);
            } catch (const Error& e) {
                if (e.code() != Errc::NotFound) throw;
                still_listed = false;  // removed concurrently
            }
        }
        if (still_listed) {
            record.verdict = Verdict::Safe;
            record.source = VerdictSource::Whitelist;
            // The user trusts this host outright, so other trusted names
            // showing up in its URL are not impersonation.
            record.spoof = spoof_signals(url, {*domain}, store_.psl());
            return record;
        }
    }

    record.spoof = spoof_signals(url, trusted, store_.psl());
    if (!domain) return record;  // IP literal or bare public suffix

    if (side_effects) observe_visit(*domain, now);

    // Phase two: external repositories, in the background.
    std::uint64_t generation = 0;
    {
        std::lock_guard lock(shared_->mutex);
        auto it = shared_->verdicts.find(*domain);
        if (it != shared_->verdicts.end() && now - it->second.started_at < kVerdictCacheTtl &&
            now >= it->second.started_at) {
            record.verdict = it->second.verdict;
            record.source = it->second.source;
            record.pending_repo = it->second.pending;
            return record;
        }
        if (!side_effects) return record;
        generation = shared_->next_generation++;
        shared_->verdicts.insert_or_assign(*domain, Shared::CachedVerdict{Verdict::Unknown, VerdictSource::None,
                                                                           true, now, generation});
        shared_->feedback_quiet_days = store_.settings().auto_add_window_days;
    }

    const RepoHandle handle = repo_.query_async(*domain);
    std::weak_ptr<Shared> weak = shared_;
    handle.on_complete([weak, d = *domain, generation](const RepoResult& result) {
        if (auto shared = weak.lock()) shared->complete(d, generation, result);
    });

    std::lock_guard lock(shared_->mutex);
    const auto& cached = shared_->verdicts.at(*domain);
    record.verdict = cached.verdict;
    record.source = cached.source;
    record.pending_repo = cached.pending;
    return record;
}

VerdictRecord VerdictEngine::feedback(const RegistrableDomain& domain, Judgement judgement, std::string_view session,
                                      Timestamp now) {
    std::lock_guard serial(feedback_mutex_);
    if (judgement == Judgement::Safe) {
        try {
            store_.add(domain, Origin::Manual, now, session);
        } catch (const Error& e) {
            if (e.code() != Errc::AlreadyPresent) throw;
        }
    } else {
        store_.block(domain, now, session);
    }
    {
        std::lock_guard lock(shared_->mutex);
        shared_->verdicts.erase(domain);
        shared_->drop_prompts(domain);
    }
    return evaluate(canonicalize("https://" + domain.value() + "/"), domain.value(), now, false);
}

std::optional<PendingPrompt> VerdictEngine::observe_visit(const RegistrableDomain& domain, Timestamp now) {
    if (store_.contains(domain) || store_.is_blocked(domain)) return std::nullopt;
    const Settings settings = store_.settings();
    const auto window = days(settings.auto_add_window_days);

    std::lock_guard lock(shared_->mutex);
    Shared::VisitLog& log = shared_->visits[domain];
    log.visits.push_back(now);
    std::erase_if(log.visits, [&](Timestamp t) { return now - t > window; });
    const auto count = static_cast<std::uint64_t>(
        std::count_if(log.visits.begin(), log.visits.end(), [&](Timestamp t) { return t <= now; }));

    if (count < static_cast<std::uint64_t>(settings.auto_add_min_visits)) return std::nullopt;
    if (log.offer_quiet_until && now < *log.offer_quiet_until) return std::nullopt;
    if (shared_->has_prompt(domain, PromptKind::AutoAddOffer)) return std::nullopt;

    const std::uint64_t id = shared_->next_prompt_id++;
    PendingPrompt prompt{id, PromptKind::AutoAddOffer, domain, count, settings.auto_add_window_days, now};
    shared_->prompts.emplace(id, prompt);
    log.offer_quiet_until = now + window;
    return prompt;
}

void VerdictEngine::resolve_prompt(std::uint64_t prompt_id, bool accept, std::string_view session, Timestamp now) {
    std::lock_guard serial(feedback_mutex_);
    std::optional<PendingPrompt> prompt;
    {
        std::lock_guard lock(shared_->mutex);
        auto it = shared_->prompts.find(prompt_id);
        if (it == shared_->prompts.end()) {
            throw Error(Errc::NotFound, "no pending prompt " + std::to_string(prompt_id));
        }
        prompt = it->second;
    }
    if (!store_.authorized(session, now)) {
        throw Error(Errc::NotAuthorized, "a valid session is required while a configuration password is set");
    }
    if (store_.contains(prompt->domain) || store_.is_blocked(prompt->domain)) {
        std::lock_guard lock(shared_->mutex);
        shared_->prompts.erase(prompt_id);
        throw Error(Errc::Conflict, prompt->domain.value() + " was whitelisted or blocked since the prompt was raised");
    }
    if (accept) {
        const Origin origin = prompt->kind == PromptKind::AutoAddOffer ? Origin::PromptAccepted : Origin::Manual;
        store_.add(prompt->domain, origin, now, session);
    }

    std::lock_guard lock(shared_->mutex);
    shared_->prompts.erase(prompt_id);
    if (accept) {
        shared_->verdicts.erase(prompt->domain);
        shared_->visits.erase(prompt->domain);
    } else if (prompt->kind == PromptKind::AutoAddOffer) {
        shared_->visits[prompt->domain].offer_quiet_until = now + days(store_.settings().auto_add_window_days);
    }
}

std::vector<PendingPrompt> VerdictEngine::prompts() const {
    std::lock_guard lock(shared_->mutex);
    std::vector<PendingPrompt> out;
    for (const auto& [id, p] : shared_->prompts) out.push_back(p);
    return out;
}

std::vector<Timestamp> VerdictEngine::recorded_visits(const RegistrableDomain& domain) const {
    std::lock_guard lock(shared_->mutex);
    auto it = shared_->visits.find(domain);
    if (it == shared_->visits.end()) return {};
    return {it->second.visits.begin(), it->second.visits.end()};
}

}  // namespace papg
