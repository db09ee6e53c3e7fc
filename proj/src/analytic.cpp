#include "dfalab/analytic.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <set>
#include <stdexcept>
#include <string>

namespace dfalab {

namespace {

const double kE = std::exp(1.0);
const double kInvE = std::exp(-1.0);

constexpr double kFixedPointTolerance = 1e-12;
constexpr std::int64_t kFixedPointIterationCap = 10'000'000;

}  // namespace

// --- exact expected length -------------------------------------------------

ExactLengthSolver::ExactLengthSolver(FrameRule rule, std::int64_t max_tags)
    : rule_(std::move(rule)), max_tags_(max_tags) {
    if (!rule_) throw std::invalid_argument("frame rule must be callable");
    if (max_tags_ < 0) throw std::invalid_argument("max_tags must be non-negative");
}

const OccupancyDistribution& ExactLengthSolver::occupancy(std::int64_t n, std::int64_t r) {
    auto& slot = occupancy_[{n, r}];
    if (!slot) slot = std::make_unique<OccupancyDistribution>(joint_outcome_distribution(n, r));
    return *slot;
}

double ExactLengthSolver::expected_length(std::int64_t tags, std::int64_t first_frame) {
    if (first_frame < 1) throw std::invalid_argument("frame length must be positive");
    if (tags < 0) throw std::invalid_argument("tag count must be non-negative");
    if (tags > max_tags_) {
        throw std::invalid_argument("tag count " + std::to_string(tags) + " exceeds exact-solver limit " +
                                    std::to_string(max_tags_));
    }
    if (tags <= 1) return static_cast<double>(first_frame);
    auto it = lengths_.find({tags, first_frame});
    if (it == lengths_.end()) {
        solve_family(tags, first_frame);
        it = lengths_.find({tags, first_frame});
    }
    return it->second;
}

void ExactLengthSolver::solve_family(std::int64_t n, std::int64_t r0) {
    // Frame lengths reachable from r0 through zero-success outcomes.
    std::vector<std::int64_t> family;
    std::set<std::int64_t> seen{r0};
    std::deque<std::int64_t> queue{r0};
    while (!queue.empty()) {
        const auto r = queue.front();
        queue.pop_front();
        family.push_back(r);
        for (const auto& m : occupancy(n, r).support()) {
            if (m.successes != 0) continue;
            const auto next = rule_(n, r, 0, m.collisions);
            if (next < 1) throw std::logic_error("frame rule produced a non-positive frame length");
            if (lengths_.count({n, next}) || !seen.insert(next).second) continue;
            queue.push_back(next);
        }
    }

    struct Coupling {
        std::size_t target;
        double probability;
    };
    std::vector<double> constant(family.size(), 0.0);
    std::vector<std::vector<Coupling>> couplings(family.size());
    auto index_of = [&](std::int64_t r) {
        return static_cast<std::size_t>(std::find(family.begin(), family.end(), r) - family.begin());
    };

    for (std::size_t k = 0; k < family.size(); ++k) {
        const auto r = family[k];
        double acc = static_cast<double>(r);
        for (const auto& m : occupancy(n, r).support()) {
            const auto remaining = n - m.successes;
            if (remaining == 0) continue;
            const auto next = rule_(n, r, m.successes, m.collisions);
            if (next < 1) throw std::logic_error("frame rule produced a non-positive frame length");
            if (remaining < n) {
                acc += m.probability * expected_length(remaining, next);
            } else if (auto known = lengths_.find({n, next}); known != lengths_.end()) {
                acc += m.probability * known->second;
            } else {
                couplings[k].push_back({index_of(next), m.probability});
            }
        }
        constant[k] = acc;
    }

    std::vector<double> value(family.size());
    for (std::size_t k = 0; k < family.size(); ++k) value[k] = static_cast<double>(family[k]) * kE;

    for (std::int64_t iter = 0;; ++iter) {
        if (iter >= kFixedPointIterationCap) {
            throw std::runtime_error("expected-length fixed point did not converge for N=" + std::to_string(n));
        }
        double worst = 0.0;
        for (std::size_t k = 0; k < family.size(); ++k) {
            double v = constant[k];
            for (const auto& c : couplings[k]) v += c.probability * value[c.target];
            worst = std::max(worst, std::abs(v - value[k]) / std::abs(v));
            value[k] = v;
        }
        if (worst < kFixedPointTolerance) break;
    }

    for (std::size_t k = 0; k < family.size(); ++k) lengths_[{n, family[k]}] = value[k];
}

double exact_expected_length(std::int64_t tags, const EstimatorSpec& estimator, std::int64_t first_frame,
                             std::int64_t max_tags) {
    auto rule = memoryless_rule(estimator);
    if (!rule) {
        throw std::invalid_argument("estimator '" + to_string(estimator) +
                                    "' is stateful; no exact expected length is available");
    }
    ExactLengthSolver solver(std::move(*rule), max_tags);
    return solver.expected_length(tags, first_frame);
}

// --- traffic recursions ----------------------------------------------------

double TrafficTrajectory::total_slots() const {
    double sum = 0.0;
    for (double r : real_len) sum += r;
    return sum;
}

double schoute_traffic_map(double traffic) {
    const auto p = slot_probabilities(traffic);
    return traffic / kSchouteH * (1.0 - p.empty) / p.collision;
}

double ae2_traffic_map(double traffic, double ratio) {
    const auto p = slot_probabilities(traffic);
    return traffic * (1.0 - 2.0 * kInvE) / (1.0 - ratio * kInvE) * (1.0 - ratio * p.empty) / p.collision;
}

TrafficTrajectory schoute_traffic_from(double real_len, double backlog, double eps, std::int64_t max_frames) {
    if (!(real_len > 0.0) || !(backlog > 0.0)) {
        throw std::invalid_argument("initial frame length and backlog must be positive");
    }
    TrafficTrajectory t;
    double r = real_len;
    double n = backlog;
    for (std::int64_t i = 0;; ++i) {
        if (i >= max_frames) throw std::runtime_error("traffic recursion exceeded its frame cap");
        const double k = n / r;
        if (n / backlog < eps) break;
        t.traffic.push_back(k);
        t.real_len.push_back(r);
        t.virtual_len.push_back(r);
        t.backlog.push_back(n);
        t.real_ratio.push_back(1.0);
        const auto p = slot_probabilities(k);
        r = kSchouteH * r * p.collision;
        n = n * (1.0 - p.empty);
    }
    return t;
}

SchouteTraffic schoute_traffic_recursion(double initial_traffic, double eps, std::int64_t max_frames) {
    if (!(initial_traffic > 0.0) || !std::isfinite(initial_traffic)) {
        throw std::invalid_argument("initial traffic must be positive");
    }
    SchouteTraffic out;
    out.trajectory = schoute_traffic_from(1.0, initial_traffic, eps, max_frames);
    out.efficiency = initial_traffic / out.trajectory.total_slots();
    return out;
}

PhaseBreakdown phase_efficiency(double end_of_approach_traffic, double tolerance) {
    const double ku = end_of_approach_traffic;
    if (!(ku >= 10.0) || !std::isfinite(ku)) {
        throw std::invalid_argument("end-of-approach traffic must be at least 10");
    }
    PhaseBreakdown out;
    out.approach = kSchouteH / ((kSchouteH - 1.0) * ku);

    // Normalised to N = 1: R_u = 1/K_u. B collects the convergence frames
    // strictly before the first frame with K ~ 1; that frame opens tracking.
    double r = 1.0 / ku;
    double n = 1.0;
    double k = ku;
    for (std::int64_t j = 1;; ++j) {
        if (j > 100'000) throw std::runtime_error("convergence phase did not reach K = 1");
        const auto p = slot_probabilities(k);
        r = kSchouteH * r * p.collision;
        n = n * (1.0 - p.empty);
        k = n / r;
        if (std::abs(k - 1.0) < tolerance) {
            out.surviving = n;
            out.convergence_frames = j - 1;
            break;
        }
        out.convergence += r;
    }
    out.efficiency = 1.0 / (out.approach + out.convergence + out.surviving * kE);
    return out;
}

TrafficTrajectory ae2_traffic_from(double virtual_len, double backlog, const Ae2TrafficOptions& options) {
    if (!(virtual_len > 0.0) || !(backlog > 0.0)) {
        throw std::invalid_argument("initial frame length and backlog must be positive");
    }
    if (!(options.b > 0.0)) throw std::invalid_argument("real-frame exponent b must be positive");
    TrafficTrajectory t;
    double z = virtual_len;
    double n = backlog;
    for (std::int64_t step = 0;; ++step) {
        if (step >= options.max_frames) throw std::runtime_error("AE2 recursion exceeded its frame cap");
        const auto i = options.start_index + step;
        const double ramp = static_cast<double>(round_nearest(std::pow(static_cast<double>(i + 1), options.b)));
        const double r = std::min(ramp, z);
        const double ratio = r / z;
        const double k = n / z;
        if (n / backlog < options.eps) break;
        t.traffic.push_back(k);
        t.real_len.push_back(r);
        t.virtual_len.push_back(z);
        t.backlog.push_back(n);
        t.real_ratio.push_back(ratio);
        const auto p = slot_probabilities(k);
        const double h = (1.0 - ratio * kInvE) / (1.0 - 2.0 * kInvE);
        z = z * h * p.collision;
        n = n * (1.0 - ratio * p.empty);
    }
    return t;
}

TrafficTrajectory ae2_traffic_recursion(double initial_traffic, double r0, double b) {
    if (!(initial_traffic > 0.0)) throw std::invalid_argument("initial traffic must be positive");
    Ae2TrafficOptions options;
    options.b = b;
    return ae2_traffic_from(r0, initial_traffic * r0, options);
}

// --- posterior traffic -----------------------------------------------------

double approach_stop_likelihood(double traffic, int frame_width) {
    if (frame_width != 1 && frame_width != 2) throw std::invalid_argument("frame width must be 1 or 2");
    if (!(traffic > 0.0)) return 0.0;
    double likelihood = 1.0;
    double k = traffic;
    for (int step = 0; step < 64; ++step) {
        k *= 2.0;
        const double all_collided = std::pow(slot_probabilities(k).collision, frame_width);
        likelihood *= all_collided;
        if (1.0 - all_collided < 1e-17) break;
    }
    return likelihood * (1.0 - std::pow(slot_probabilities(traffic).collision, frame_width));
}

double posterior_traffic(int frame_width) {
    double best_s = 0.0;
    double best = -1.0;
    for (int j = 1; j <= 10'000; ++j) {
        const double s = 1e-3 * j;
        const double l = approach_stop_likelihood(s, frame_width);
        if (l > best) {
            best = l;
            best_s = s;
        }
    }
    return best_s;
}

// --- power of two ----------------------------------------------------------

namespace {

template <class Fn>
double simpson(Fn f, double a, double b, int intervals) {
    const double h = (b - a) / intervals;
    double sum = f(a) + f(b);
    for (int i = 1; i < intervals; ++i) sum += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
    return sum * h / 3.0;
}

}  // namespace

Pow2Efficiency pow2_asymptotic_efficiency() {
    auto decay = [](double s) { return std::exp(-s); };
    Pow2Efficiency out;
    // density 2 on [3/4, 1] and 1 on [1, 3/2]
    out.integral = 2.0 * simpson(decay, 0.75, 1.0, 2000) + simpson(decay, 1.0, 1.5, 2000);
    out.closed_form = 2.0 * (std::exp(-0.75) - kInvE) + (kInvE - std::exp(-1.5));
    return out;
}

// --- rounding bracket ------------------------------------------------------

RoundingBracket rounding_ratio_bounds(std::int64_t first_frame, std::int64_t horizon) {
    if (first_frame < 1) throw std::invalid_argument("initial frame length must be positive");
    if (horizon < 1) throw std::invalid_argument("horizon must be at least one frame");
    constexpr double kExactIntegerLimit = 9007199254740992.0;  // 2^53

    double rounded = static_cast<double>(first_frame);
    double exact = rounded;
    double rounded_sum = 0.0;
    double exact_sum = 0.0;
    for (std::int64_t i = 0; i < horizon; ++i) {
        if (rounded >= kExactIntegerLimit) throw std::invalid_argument("horizon too long for exact rounding");
        rounded_sum += rounded;
        exact_sum += exact;
        rounded = std::round(kSchouteH * rounded);
        exact = kSchouteH * exact;
    }
    const double width = 1.0 / (static_cast<double>(first_frame) * (kSchouteH - 1.0));
    return {1.0 - width, rounded_sum / exact_sum, 1.0 + width};
}

}  // namespace dfalab
