#pragma once

// Search for approach-phase multiplier sequences of the optimized AE2
// estimator. The objective is the worst mean efficiency over a grid of
// population sizes; every candidate is scored with the same master seed so
// comparisons share random numbers.

#include <cstdint>
#include <vector>

namespace dfalab {

struct SearchSpace {
    double low = 1.5;
    double high = 2.5;
    double step = 0.1;
    std::int64_t length = 12;  // searched prefix; later frames use `tail`
    double tail = 1.7;

    std::vector<double> values() const;
};

struct SearchOptions {
    std::vector<std::int64_t> tag_grid;
    std::int64_t runs_per_point = 500;
    std::uint64_t seed = 1;
    std::int64_t restarts = 1;      // extra random starting points
    std::int64_t max_sweeps = 4;    // coordinate passes per start
    std::int64_t r0 = 1;
    unsigned threads = 0;
};

struct SequenceScore {
    std::vector<double> multipliers;
    double tail = 1.7;
    std::vector<double> efficiencies;  // one per tag_grid entry
    std::vector<double> ci_half_widths;
    double min_efficiency = 0.0;
    double ci_at_min = 0.0;
};

struct SearchReport {
    SearchSpace space;
    SearchOptions options;
    SequenceScore best;
    SequenceScore baseline;  // 2 2 2 2 1.8 1.7 ... 1.7
    std::int64_t evaluations = 0;
};

/// Scores a single multiplier sequence over the grid.
SequenceScore score_sequence(const std::vector<double>& multipliers, double tail, const SearchOptions& options);

/// Coordinate ascent over the discretised multiplier lattice. Starts include
/// the published sequence, so the best score is never below the baseline.
/// Throws std::invalid_argument for an empty grid or degenerate space.
SearchReport h_sequence_search(const SearchSpace& space, const SearchOptions& options);

}  // namespace dfalab
