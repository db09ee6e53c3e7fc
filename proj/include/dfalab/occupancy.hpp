#pragma once

// Occupancy combinatorics for framed slotted Aloha.
//
// n distinguishable tags each pick one of r equiprobable slots. A slot
// holding exactly one tag is a success, two or more a collision. The joint
// law of (successes, collisions) drives both the exact expected-length
// recursion and the Monte Carlo oracle checks.

#include <cstdint>
#include <vector>

namespace dfalab {

/// One support point of an occupancy distribution.
struct OutcomeMass {
    std::int64_t successes = 0;
    std::int64_t collisions = 0;
    double probability = 0.0;
};

/// Joint distribution of (success slots, collided slots) for n tags in r slots.
///
/// Support is kept sorted by (successes, collisions); masses below 1e-300
/// are dropped.
class OccupancyDistribution {
public:
    OccupancyDistribution(std::int64_t tags, std::int64_t slots, std::vector<OutcomeMass> support);

    std::int64_t tags() const { return tags_; }
    std::int64_t slots() const { return slots_; }

    const std::vector<OutcomeMass>& support() const { return support_; }

    /// Probability of exactly `s` successes and `c` collisions (0 off-support).
    double mass(std::int64_t s, std::int64_t c) const;

    double total_mass() const;
    double expected_successes() const;
    double expected_collisions() const;

private:
    std::int64_t tags_;
    std::int64_t slots_;
    std::vector<OutcomeMass> support_;
};

/// Exact distribution via a dynamic program over tags placed one at a time.
/// State (s, c) after k tags; the empty count is r - s - c. Throws
/// std::invalid_argument when r < 1 or n < 0.
OccupancyDistribution joint_outcome_distribution(std::int64_t n, std::int64_t r);

/// Raw integer counts from full enumeration of all r^n assignments.
struct OccupancyCounts {
    std::int64_t tags = 0;
    std::int64_t slots = 0;
    std::uint64_t assignments = 0;  // r^n
    // counts[s][c]
    std::vector<std::vector<std::uint64_t>> counts;
};

/// Largest r^n the enumerator accepts.
inline constexpr std::uint64_t kMaxEnumeratedAssignments = 16'777'216;  // 8^8

OccupancyCounts enumerate_occupancy(std::int64_t n, std::int64_t r);

/// Brute-force oracle: enumerates every assignment with integer counting and
/// divides once at the end. Throws std::invalid_argument past the bound.
OccupancyDistribution brute_force_distribution(std::int64_t n, std::int64_t r);

/// Per-slot outcome probabilities when the number of transmissions in a slot
/// is Poisson with mean `traffic`.
struct SlotProbabilities {
    double empty = 1.0;
    double success = 0.0;
    double collision = 0.0;
};

/// Throws std::invalid_argument for negative or non-finite traffic.
SlotProbabilities slot_probabilities(double traffic);

}  // namespace dfalab
