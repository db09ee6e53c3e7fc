#pragma once

// Backlog estimators for Dynamic Frame Aloha.
//
// Every estimator sees the outcome of the frame just executed and chooses the
// next virtual frame (the range tags draw their slot from) and the next real
// frame (the prefix actually executed before the reader restarts). Classic
// DFA estimators always use real == virtual.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace dfalab {

/// Mean tags per collided slot at unit Poisson traffic: (1 - e^-1)/(1 - 2e^-1).
extern const double kSchouteH;

/// Pure-collision AE2 multiplier 1/(1 - 2e^-1), the limit of the AE2
/// multiplier as real/virtual -> 0.
extern const double kAe2HPrime;

/// Closest integer, halves away from zero.
std::int64_t round_nearest(double x);

struct FrameObservation {
    std::int64_t empties = 0;
    std::int64_t successes = 0;
    std::int64_t collisions = 0;
    std::int64_t real_len = 1;     // r_i
    std::int64_t virtual_len = 1;  // z_i

    bool consistent() const {
        return empties >= 0 && successes >= 0 && collisions >= 0 && real_len >= 1 &&
               empties + successes + collisions == real_len && real_len <= virtual_len;
    }
};

struct EstimatorDecision {
    std::int64_t next_virtual = 1;
    std::int64_t next_real = 1;
    bool done = false;
};

enum class Phase { approach, tracking };

/// Dynamic part of an estimator. Parameters (b, multiplier sequence) live in
/// the estimator spec.
struct EstimatorState {
    std::int64_t frame_index = 0;  // index of the frame the next observation comes from
    std::int64_t estimate = 0;     // n-hat for the current frame
    std::int64_t virtual_len = 1;  // z of the current frame
    std::int64_t real_len = 1;     // r of the current frame
    Phase phase = Phase::tracking;
};

struct EstimatorStep {
    EstimatorState state;
    EstimatorDecision decision;
};

// --- estimator specs -------------------------------------------------------

struct Schoute {};
struct LowerBound {};
struct Perfect {};
/// Schoute's estimate snapped to the nearest power of two.
struct SchoutePow2 {};

struct Ae2 {
    double b = 2.0;  // real frame ramps as round((i+1)^b)
};

/// AE2 with a one-slot approach phase driven by a multiplier sequence. The
/// first frame with a non-collided slot hands over to the plain AE2 laws
/// (real frame min(round((i+1)^b), z)). With `pow2` set, virtual frames are
/// powers of two.
struct Ae2Optimized {
    std::vector<double> multipliers = {2.0, 2.0, 2.0, 2.0, 1.8, 1.7};
    double tail = 1.7;
    bool pow2 = false;
    double b = 2.0;  // ramp exponent once tracking; frame index is not reset

    double multiplier(std::int64_t index) const;
};

using EstimatorSpec = std::variant<Schoute, LowerBound, Perfect, SchoutePow2, Ae2, Ae2Optimized>;

/// Multiplier sequence and tail for the standards-constrained variant.
Ae2Optimized ae2_pow2_spec();

/// Parses `schoute`, `lower_bound`, `perfect`, `schoute_pow2`, `ae2`, `ae2(b)`,
/// `ae2_opt`, `ae2_opt(h0 h1 ...;tail)`, `ae2_opt(h0 h1 ...;tail;b=B)` and
/// `ae2_pow2`. Values inside the
/// parentheses may be separated by spaces or commas. `default_b` is used for
/// a bare `ae2`. Throws std::invalid_argument on anything else.
EstimatorSpec parse_estimator(std::string_view text, double default_b = 2.0);

/// Canonical name, round-trips through parse_estimator and contains no commas.
std::string to_string(const EstimatorSpec& spec);

bool is_memoryless(const EstimatorSpec& spec);

// --- individual update laws ------------------------------------------------

EstimatorStep schoute_update(const EstimatorState& state, const FrameObservation& obs);
EstimatorStep lower_bound_update(const EstimatorState& state, const FrameObservation& obs);
EstimatorStep schoute_pow2_update(const EstimatorState& state, const FrameObservation& obs);

/// AE2 multiplier (1 - (r/z) e^-1)/(1 - 2e^-1).
double ae2_multiplier(std::int64_t real_len, std::int64_t virtual_len);

/// Real frame law min(round((i+1)^b), z).
std::int64_t ae2_real_length(std::int64_t frame_index, double b, std::int64_t virtual_len);

EstimatorStep ae2_update(const EstimatorState& state, const FrameObservation& obs, double b);
EstimatorStep optimized_ae2_update(const EstimatorState& state, const FrameObservation& obs,
                                   const Ae2Optimized& params);

/// Nearest 2^Q to n-hat with Q clamped to [1, 16]; ties go up.
std::int64_t pow2_quantize(std::int64_t estimate);

EstimatorDecision perfect_estimate(std::int64_t true_backlog);

// --- uniform driver --------------------------------------------------------

/// First frame for a fresh run. z_0 = r_0 = n-hat_0 = r0 except for the
/// optimized variants, which execute a single slot while approaching.
EstimatorStep start_estimator(const EstimatorSpec& spec, std::int64_t r0, std::int64_t true_backlog);

/// Feeds one observation. `true_backlog` (after the frame) is read only by
/// the perfect benchmark.
EstimatorStep advance_estimator(const EstimatorSpec& spec, const EstimatorState& state,
                                const FrameObservation& obs, std::int64_t true_backlog);

/// Next frame length as a function of (backlog before, frame length,
/// successes, collisions) for estimators whose choice depends only on the
/// last full frame.
using FrameRule = std::function<std::int64_t(std::int64_t backlog, std::int64_t frame,
                                             std::int64_t successes, std::int64_t collisions)>;

std::optional<FrameRule> memoryless_rule(const EstimatorSpec& spec);

}  // namespace dfalab
