#include "dfalab/search.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <stdexcept>

#include "dfalab/estimators.hpp"
#include "dfalab/sim.hpp"

namespace dfalab {

std::vector<double> SearchSpace::values() const {
    if (!(step > 0.0) || !(high >= low)) throw std::invalid_argument("degenerate multiplier lattice");
    std::vector<double> out;
    const auto count = static_cast<std::int64_t>(std::floor((high - low) / step + 1e-9));
    for (std::int64_t k = 0; k <= count; ++k) {
        // snap to one decimal more than the step to keep 1.7 printing as 1.7
        out.push_back(std::round((low + static_cast<double>(k) * step) * 1e6) / 1e6);
    }
    return out;
}

SequenceScore score_sequence(const std::vector<double>& multipliers, double tail, const SearchOptions& options) {
    if (options.tag_grid.empty()) throw std::invalid_argument("search needs a non-empty population grid");
    SequenceScore score;
    score.multipliers = multipliers;
    score.tail = tail;
    score.min_efficiency = 2.0;
    for (auto n : options.tag_grid) {
        SimConfig config;
        config.tags = n;
        config.estimator = Ae2Optimized{multipliers, tail, false};
        config.r0 = options.r0;
        config.seed = options.seed;
        config.runs = options.runs_per_point;
        config.threads = options.threads;
        const auto point = batch_efficiency(config);
        score.efficiencies.push_back(point.efficiency);
        score.ci_half_widths.push_back(point.ci_half_width);
        if (point.efficiency < score.min_efficiency) {
            score.min_efficiency = point.efficiency;
            score.ci_at_min = point.ci_half_width;
        }
    }
    return score;
}

SearchReport h_sequence_search(const SearchSpace& space, const SearchOptions& options) {
    if (options.tag_grid.empty()) throw std::invalid_argument("search needs a non-empty population grid");
    if (space.length < 1 || space.length > 12) throw std::invalid_argument("sequence length must be in [1, 12]");
    if (options.runs_per_point < 2) throw std::invalid_argument("need at least 2 runs per grid point");
    const auto lattice = space.values();

    SearchReport report;
    report.space = space;
    report.options = options;

    auto nearest = [&](double h) {
        std::size_t best = 0;
        for (std::size_t k = 1; k < lattice.size(); ++k) {
            if (std::abs(lattice[k] - h) < std::abs(lattice[best] - h)) best = k;
        }
        return best;
    };
    auto to_values = [&](const std::vector<std::size_t>& idx) {
        std::vector<double> v;
        for (auto k : idx) v.push_back(lattice[k]);
        return v;
    };

    std::map<std::vector<std::size_t>, SequenceScore> cache;
    auto evaluate = [&](const std::vector<std::size_t>& idx) -> const SequenceScore& {
        auto it = cache.find(idx);
        if (it == cache.end()) {
            ++report.evaluations;
            it = cache.emplace(idx, score_sequence(to_values(idx), space.tail, options)).first;
        }
        return it->second;
    };

    const std::vector<double> published = {2.0, 2.0, 2.0, 2.0, 1.8, 1.7};
    std::vector<std::size_t> baseline_idx;
    for (std::int64_t p = 0; p < space.length; ++p) {
        baseline_idx.push_back(
            nearest(static_cast<std::size_t>(p) < published.size() ? published[static_cast<std::size_t>(p)] : 1.7));
    }
    report.baseline = evaluate(baseline_idx);

    std::vector<std::vector<std::size_t>> starts{baseline_idx,
                                                 std::vector<std::size_t>(static_cast<std::size_t>(space.length), nearest(2.0))};
    std::mt19937_64 rng(derive_seed(options.seed, 0x5eedULL));
    std::uniform_int_distribution<std::size_t> pick(0, lattice.size() - 1);
    for (std::int64_t k = 0; k < options.restarts; ++k) {
        std::vector<std::size_t> idx(static_cast<std::size_t>(space.length));
        for (auto& v : idx) v = pick(rng);
        starts.push_back(std::move(idx));
    }

    std::vector<std::size_t> best_idx = baseline_idx;
    double best_value = report.baseline.min_efficiency;
    for (auto current : starts) {
        double current_value = evaluate(current).min_efficiency;
        for (std::int64_t sweep = 0; sweep < options.max_sweeps; ++sweep) {
            bool improved = false;
            for (std::size_t p = 0; p < current.size(); ++p) {
                for (std::size_t v = 0; v < lattice.size(); ++v) {
                    if (v == current[p]) continue;
                    auto trial = current;
                    trial[p] = v;
                    const double value = evaluate(trial).min_efficiency;
                    if (value > current_value) {
                        current = std::move(trial);
                        current_value = value;
                        improved = true;
                    }
                }
            }
            if (!improved) break;
        }
        if (current_value > best_value) {
            best_value = current_value;
            best_idx = current;
        }
    }
    report.best = evaluate(best_idx);
    return report;
}

}  // namespace dfalab
