#pragma once

// Exact and asymptotic performance analysis of DFA backlog estimators.

#include <cstdint>
#include <map>
#include <memory>
#include <utility>
#include <vector>

#include "dfalab/estimators.hpp"
#include "dfalab/occupancy.hpp"

namespace dfalab {

// --- exact expected identification length ----------------------------------

/// Solves L(N, r), the mean number of slots to identify N tags starting with
/// a frame of r slots, for a memoryless frame rule. L(0, r) = L(1, r) = r.
///
/// Outcomes with no success feed back into L(N, .) at the same N, so for each
/// N the set of frame lengths reachable through zero-success outcomes is
/// solved jointly by fixed-point iteration to a relative change below 1e-12.
/// Results and occupancy tables are memoised; an instance is not thread-safe.
class ExactLengthSolver {
public:
    explicit ExactLengthSolver(FrameRule rule, std::int64_t max_tags = 30);

    double expected_length(std::int64_t tags, std::int64_t first_frame);

    std::int64_t max_tags() const { return max_tags_; }

private:
    const OccupancyDistribution& occupancy(std::int64_t n, std::int64_t r);
    void solve_family(std::int64_t n, std::int64_t r);

    FrameRule rule_;
    std::int64_t max_tags_;
    std::map<std::pair<std::int64_t, std::int64_t>, double> lengths_;
    std::map<std::pair<std::int64_t, std::int64_t>, std::unique_ptr<OccupancyDistribution>> occupancy_;
};

/// Convenience wrapper. Throws std::invalid_argument for stateful estimators
/// (AE2 variants) or N above max_tags.
double exact_expected_length(std::int64_t tags, const EstimatorSpec& estimator, std::int64_t first_frame,
                             std::int64_t max_tags = 30);

// --- traffic recursions ----------------------------------------------------

struct TrafficTrajectory {
    std::vector<double> traffic;      // K_i
    std::vector<double> real_len;     // R_i
    std::vector<double> virtual_len;  // Z_i (equal to R_i for classic frames)
    std::vector<double> backlog;      // N_i
    std::vector<double> real_ratio;   // B_i = R_i / Z_i

    double total_slots() const;
};

/// One step of the expected-value traffic map for Schoute's estimate.
double schoute_traffic_map(double traffic);

/// One step of the AE2 traffic map with the multiplier chosen to pin the
/// fixed point at K = 1, for real/virtual ratio `ratio` in (0, 1].
double ae2_traffic_map(double traffic, double ratio);

struct SchouteTraffic {
    TrafficTrajectory trajectory;
    double efficiency = 0.0;
};

/// Iterates the expected-value recursion from R_0 = 1, N_0 = K0 until
/// N_i / N_0 < eps. Efficiency is K0 / sum(R_i). Throws std::runtime_error
/// when `max_frames` is exceeded.
SchouteTraffic schoute_traffic_recursion(double initial_traffic, double eps = 1e-12,
                                         std::int64_t max_frames = 100'000);

/// Same recursion from an arbitrary starting frame length and backlog.
TrafficTrajectory schoute_traffic_from(double real_len, double backlog, double eps = 1e-12,
                                       std::int64_t max_frames = 100'000);

struct PhaseBreakdown {
    double approach = 0.0;     // A = H / ((H - 1) K_u)
    double convergence = 0.0;  // B
    double surviving = 0.0;    // C
    double efficiency = 0.0;   // 1 / (A + B + C e)
    std::int64_t convergence_frames = 0;
};

/// Asymptotic efficiency of Schoute's estimate split into approach,
/// convergence and tracking phases, given the traffic K_u that closes the
/// approach phase. Requires K_u >= 10.
PhaseBreakdown phase_efficiency(double end_of_approach_traffic, double tolerance = 1e-6);

struct Ae2TrafficOptions {
    double b = 2.0;
    std::int64_t start_index = 0;
    double eps = 1e-9;
    std::int64_t max_frames = 100'000;
};

/// Expected-value AE2 recursion from Z = virtual_len, N = backlog at frame
/// `start_index`, with R_i = min(round((i+1)^b), Z_i).
TrafficTrajectory ae2_traffic_from(double virtual_len, double backlog, const Ae2TrafficOptions& options);

/// Starts from Z_0 = r0 and N_0 = K0 * r0.
TrafficTrajectory ae2_traffic_recursion(double initial_traffic, double r0, double b);

// --- approach-phase posterior traffic --------------------------------------

/// Likelihood that an estimate doubling every frame sees all-collided frames
/// at traffic s*2^k (k >= 1) and then a frame at traffic s with a non-collided
/// slot, with `frame_width` observed slots per frame.
double approach_stop_likelihood(double traffic, int frame_width);

/// Grid maximiser of approach_stop_likelihood over (0, 10] at step 1e-3.
double posterior_traffic(int frame_width);

// --- power-of-two constraint -----------------------------------------------

struct Pow2Efficiency {
    double integral = 0.0;      // composite Simpson quadrature
    double closed_form = 0.0;   // 2(e^-3/4 - e^-1) + (e^-1 - e^-3/2)
    double published = 0.3562;  // value quoted for the averaging argument
    double published_simulated = 0.357;
};

/// Mean of e^{-s} where s = n / 2^Q is uniform on [3/4, 1] or on [1, 3/2]
/// with probability 1/2 each.
Pow2Efficiency pow2_asymptotic_efficiency();

// --- rounding bracket ------------------------------------------------------

struct RoundingBracket {
    double lower = 0.0;
    double ratio = 0.0;
    double upper = 0.0;

    bool holds() const { return lower < ratio && ratio < upper; }
};

/// Ratio of the pure-collision frame sums with rounding, R_{i+1} =
/// round(H R_i), and without, over `horizon` frames from R_0 = r, with
/// bracket 1 -+ 1/(r(H-1)).
RoundingBracket rounding_ratio_bounds(std::int64_t first_frame, std::int64_t horizon);

}  // namespace dfalab
