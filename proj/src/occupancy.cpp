#include "dfalab/occupancy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace dfalab {

namespace {

constexpr double kMassFloor = 1e-300;

void check_shape(std::int64_t n, std::int64_t r) {
    if (r < 1) {
        throw std::invalid_argument("slot count must be positive, got " + std::to_string(r));
    }
    if (n < 0) {
        throw std::invalid_argument("tag count must be non-negative, got " + std::to_string(n));
    }
}

}  // namespace

OccupancyDistribution::OccupancyDistribution(std::int64_t tags, std::int64_t slots,
                                             std::vector<OutcomeMass> support)
    : tags_(tags), slots_(slots), support_(std::move(support)) {
    std::sort(support_.begin(), support_.end(), [](const OutcomeMass& a, const OutcomeMass& b) {
        return a.successes != b.successes ? a.successes < b.successes : a.collisions < b.collisions;
    });
}

double OccupancyDistribution::mass(std::int64_t s, std::int64_t c) const {
    auto it = std::lower_bound(support_.begin(), support_.end(), std::pair{s, c},
                               [](const OutcomeMass& m, const std::pair<std::int64_t, std::int64_t>& key) {
                                   return m.successes != key.first ? m.successes < key.first
                                                                   : m.collisions < key.second;
                               });
    if (it != support_.end() && it->successes == s && it->collisions == c) {
        return it->probability;
    }
    return 0.0;
}

double OccupancyDistribution::total_mass() const {
    double sum = 0.0;
    for (const auto& m : support_) sum += m.probability;
    return sum;
}

double OccupancyDistribution::expected_successes() const {
    double sum = 0.0;
    for (const auto& m : support_) sum += static_cast<double>(m.successes) * m.probability;
    return sum;
}

double OccupancyDistribution::expected_collisions() const {
    double sum = 0.0;
    for (const auto& m : support_) sum += static_cast<double>(m.collisions) * m.probability;
    return sum;
}

OccupancyDistribution joint_outcome_distribution(std::int64_t n, std::int64_t r) {
    check_shape(n, r);

    const std::int64_t max_s = std::min(n, r);
    const std::int64_t max_c = std::min(n / 2, r);
    const std::int64_t width = max_c + 1;
    auto at = [width](std::int64_t s, std::int64_t c) { return static_cast<std::size_t>(s * width + c); };

    std::vector<double> cur(static_cast<std::size_t>((max_s + 1) * width), 0.0);
    std::vector<double> next(cur.size(), 0.0);
    cur[at(0, 0)] = 1.0;

    const double inv_r = 1.0 / static_cast<double>(r);
    for (std::int64_t k = 0; k < n; ++k) {
        std::fill(next.begin(), next.end(), 0.0);
        const std::int64_t s_hi = std::min(k, max_s);
        for (std::int64_t s = 0; s <= s_hi; ++s) {
            for (std::int64_t c = 0; c <= max_c && s + c <= r; ++c) {
                const double p = cur[at(s, c)];
                if (p == 0.0) continue;
                const std::int64_t empty = r - s - c;
                if (empty > 0) next[at(s + 1, c)] += p * static_cast<double>(empty) * inv_r;
                if (s > 0) next[at(s - 1, c + 1)] += p * static_cast<double>(s) * inv_r;
                if (c > 0) next[at(s, c)] += p * static_cast<double>(c) * inv_r;
            }
        }
        cur.swap(next);
    }

    std::vector<OutcomeMass> support;
    for (std::int64_t s = 0; s <= max_s; ++s) {
        for (std::int64_t c = 0; c <= max_c; ++c) {
            const double p = cur[at(s, c)];
            if (p > kMassFloor) support.push_back({s, c, p});
        }
    }
    return OccupancyDistribution(n, r, std::move(support));
}

OccupancyCounts enumerate_occupancy(std::int64_t n, std::int64_t r) {
    check_shape(n, r);

    std::uint64_t total = 1;
    for (std::int64_t k = 0; k < n; ++k) {
        total *= static_cast<std::uint64_t>(r);
        if (total > kMaxEnumeratedAssignments) {
            throw std::invalid_argument("r^n exceeds the enumeration bound for n=" + std::to_string(n) +
                                        ", r=" + std::to_string(r));
        }
    }

    OccupancyCounts out;
    out.tags = n;
    out.slots = r;
    out.assignments = total;
    out.counts.assign(static_cast<std::size_t>(n + 1), std::vector<std::uint64_t>(static_cast<std::size_t>(n / 2 + 1), 0));

    std::vector<std::int64_t> choice(static_cast<std::size_t>(n), 0);
    std::vector<std::int64_t> load(static_cast<std::size_t>(r), 0);
    for (std::uint64_t a = 0; a < total; ++a) {
        std::fill(load.begin(), load.end(), 0);
        for (auto slot : choice) ++load[static_cast<std::size_t>(slot)];
        std::int64_t s = 0, c = 0;
        for (auto l : load) {
            if (l == 1) ++s;
            else if (l > 1) ++c;
        }
        ++out.counts[static_cast<std::size_t>(s)][static_cast<std::size_t>(c)];

        // odometer increment
        for (std::size_t i = 0; i < choice.size(); ++i) {
            if (++choice[i] < r) break;
            choice[i] = 0;
        }
    }
    return out;
}

OccupancyDistribution brute_force_distribution(std::int64_t n, std::int64_t r) {
    const auto counts = enumerate_occupancy(n, r);
    const double denom = static_cast<double>(counts.assignments);
    std::vector<OutcomeMass> support;
    for (std::size_t s = 0; s < counts.counts.size(); ++s) {
        for (std::size_t c = 0; c < counts.counts[s].size(); ++c) {
            if (counts.counts[s][c] == 0) continue;
            support.push_back({static_cast<std::int64_t>(s), static_cast<std::int64_t>(c),
                               static_cast<double>(counts.counts[s][c]) / denom});
        }
    }
    return OccupancyDistribution(n, r, std::move(support));
}

SlotProbabilities slot_probabilities(double traffic) {
    if (!std::isfinite(traffic) || traffic < 0.0) {
        throw std::invalid_argument("traffic must be finite and non-negative");
    }
    const double empty = std::exp(-traffic);
    const double success = traffic * empty;
    // -expm1(-K) keeps 1 - e^{-K} accurate for small K
    const double collision = std::max(0.0, -std::expm1(-traffic) - success);
    return {empty, success, collision};
}

}  // namespace dfalab
