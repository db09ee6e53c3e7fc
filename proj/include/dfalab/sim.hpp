#pragma once

// Seeded Monte Carlo engine for Dynamic Frame Aloha with Frame Restart.
//
// Backlogged tags draw a slot in the virtual frame [0, z); only slots below
// the real length r are executed. The reader always plays out the whole real
// frame, so every executed frame costs r slots. Runs stop on the ground-truth
// backlog reaching zero.

#include <cstdint>
#include <vector>

#include "dfalab/estimators.hpp"

namespace dfalab {

struct SimConfig {
    std::int64_t tags = 0;  // N
    EstimatorSpec estimator = Schoute{};
    std::int64_t r0 = 1;
    std::uint64_t seed = 1;
    std::int64_t max_frames = 1'000'000;
    std::int64_t runs = 1;
    unsigned threads = 0;  // 0: hardware concurrency
};

struct TrajectoryPoint {
    std::int64_t frame_index = 0;
    std::int64_t virtual_len = 0;
    std::int64_t real_len = 0;
    std::int64_t empties = 0;
    std::int64_t successes = 0;
    std::int64_t collisions = 0;
    std::int64_t backlog_before = 0;
    std::int64_t estimate_after = 0;
};

struct RunResult {
    std::int64_t total_slots = 0;
    std::int64_t frames = 0;
    bool terminated = true;
    double efficiency = 1.0;  // N / total_slots, 1 for N = 0
    std::vector<TrajectoryPoint> trajectory;  // filled on request
};

/// Splittable seed for replica `index` of a batch (splitmix64 finaliser over
/// both inputs).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

/// Single identification run seeded directly with `config.seed`.
RunResult run_identification(const SimConfig& config, bool record_trajectory = false);

struct EfficiencyPoint {
    std::int64_t tags = 0;
    double efficiency = 0.0;  // mean of per-run N / slots
    double ci_half_width = 0.0;  // 95 %, normal approximation
    std::int64_t runs = 0;
    double mean_slots = 0.0;
    double slots_std_error = 0.0;
    std::int64_t nonterminated = 0;

    /// N over the mean slot count, the ratio-of-means form of efficiency.
    double efficiency_of_mean() const {
        return mean_slots > 0.0 ? static_cast<double>(tags) / mean_slots : 1.0;
    }
};

/// Runs `config.runs` replicas seeded with derive_seed(config.seed, k).
/// Results are independent of the thread count.
EfficiencyPoint batch_efficiency(const SimConfig& config);

struct TrajectoryAverage {
    std::int64_t frame_index = 0;
    std::int64_t active_runs = 0;
    double slot_offset = 0.0;   // slots consumed before this frame
    double backlog = 0.0;       // n_i
    double estimate = 0.0;      // n-hat after the frame
    double traffic = 0.0;       // n_i / z_i
    double real_ratio = 0.0;    // r_i / z_i
    double real_len = 0.0;
    double virtual_len = 0.0;
};

/// Frame-indexed ensemble means over the runs still active at each frame.
/// Requires runs >= 100.
std::vector<TrajectoryAverage> mean_trajectory(const SimConfig& config);

}  // namespace dfalab
