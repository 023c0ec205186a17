#pragma once

#include <cstddef>
#include <vector>

namespace papg {

struct SimulationParams {
    int days = 180;
    int new_sites_per_day = 3;
    int retention_days = 90;
};

struct SimulationReport {
    // Store size right after each day's eviction pass, one value per day.
    std::vector<std::size_t> size_after_eviction;
    // Largest size seen, which occurs just after a day's new sites land.
    std::size_t peak_size = 0;
    // Size the post-eviction series settles on; 0 when it never settles.
    std::size_t steady_state_size = 0;
    // First day (0-based) from which the post-eviction size stays constant.
    int steady_from_day = -1;
};

/// Replays the whitelist growth model on a real store: every day
/// `new_sites_per_day` never-before-seen domains are added at the start of
/// the day and never revisited, and eviction runs once at the end of the
/// day.
SimulationReport simulate_growth(const SimulationParams& params);

}  // namespace papg
