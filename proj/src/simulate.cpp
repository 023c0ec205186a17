#include "papg/simulate.hpp"

#include <algorithm>
#include <string>

#include "papg/error.hpp"
#include "papg/whitelist_store.hpp"

namespace papg {

SimulationReport simulate_growth(const SimulationParams& params) {
    if (params.days < 1 || params.new_sites_per_day < 0) {
        throw Error(Errc::InvalidArgument, "simulate needs days >= 1 and rate >= 0");
    }
    const PublicSuffixList& psl = PublicSuffixList::bundled();
    WhitelistStore store(psl);
    Settings settings = store.settings();
    settings.retention_days = params.retention_days;
    store.update_settings(settings, Timestamp{});

    // Arbitrary fixed epoch keeps runs reproducible.
    const Timestamp start = std::chrono::sys_days{std::chrono::year{2026} / 1 / 1};
    SimulationReport report;
    report.size_after_eviction.reserve(static_cast<std::size_t>(params.days));
    std::size_t serial = 0;
    for (int day = 0; day < params.days; ++day) {
        const Timestamp morning = start + days(day);
        for (int i = 0; i < params.new_sites_per_day; ++i) {
            const auto domain = psl.parse_domain("site" + std::to_string(serial++) + ".example");
            store.add(domain, Origin::PromptAccepted, morning);
        }
        report.peak_size = std::max(report.peak_size, store.size());
        store.evict(start + days(day + 1));
        report.size_after_eviction.push_back(store.size());
    }

    const auto& sizes = report.size_after_eviction;
    int from = static_cast<int>(sizes.size()) - 1;
    while (from > 0 && sizes[static_cast<std::size_t>(from - 1)] == sizes.back()) --from;
    // Settled once the final value has held for more than one day.
    if (static_cast<int>(sizes.size()) - from > 1) {
        report.steady_state_size = sizes.back();
        report.steady_from_day = from;
    }
    return report;
}

}  // namespace papg
