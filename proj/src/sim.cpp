#include "dfalab/sim.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <thread>

namespace dfalab {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Neumaier-compensated running sum; order-fixed reductions stay reproducible.
class CompensatedSum {
public:
    void add(double v) {
        const double t = sum_ + v;
        if (std::abs(sum_) >= std::abs(v)) comp_ += (sum_ - t) + v;
        else comp_ += (v - t) + sum_;
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

template <class Fn>
void parallel_for(std::int64_t count, unsigned threads, Fn&& fn) {
    unsigned workers = threads ? threads : std::max(1u, std::thread::hardware_concurrency());
    workers = static_cast<unsigned>(std::min<std::int64_t>(workers, std::max<std::int64_t>(count, 1)));
    if (workers <= 1) {
        for (std::int64_t k = 0; k < count; ++k) fn(k);
        return;
    }
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            for (std::int64_t k = w; k < count; k += workers) fn(k);
        });
    }
}

void validate(const SimConfig& config) {
    if (config.tags < 0) throw std::invalid_argument("tag population must be non-negative");
    if (config.r0 < 1) throw std::invalid_argument("initial frame length must be positive");
    if (config.max_frames < 1) throw std::invalid_argument("max_frames must be at least 1");
    if (config.runs < 1) throw std::invalid_argument("runs must be at least 1");
}

RunResult simulate(const SimConfig& config, std::uint64_t seed, bool record) {
    RunResult result;
    if (config.tags == 0) return result;

    std::mt19937_64 rng(seed);
    std::vector<std::uint32_t> load;

    std::int64_t backlog = config.tags;
    auto step = start_estimator(config.estimator, config.r0, backlog);

    while (backlog > 0) {
        if (result.frames >= config.max_frames) {
            result.terminated = false;
            break;
        }
        const auto z = step.decision.next_virtual;
        const auto r = std::min(step.decision.next_real, z);

        // Tags whose slot falls in the executed prefix; each lands uniformly there.
        std::int64_t transmitting = backlog;
        if (r < z) {
            std::binomial_distribution<std::int64_t> thin(backlog, static_cast<double>(r) / static_cast<double>(z));
            transmitting = thin(rng);
        }
        load.assign(static_cast<std::size_t>(r), 0);
        std::uniform_int_distribution<std::int64_t> pick(0, r - 1);
        for (std::int64_t t = 0; t < transmitting; ++t) ++load[static_cast<std::size_t>(pick(rng))];

        FrameObservation obs;
        obs.real_len = r;
        obs.virtual_len = z;
        for (auto l : load) {
            if (l == 0) ++obs.empties;
            else if (l == 1) ++obs.successes;
            else ++obs.collisions;
        }

        const auto backlog_before = backlog;
        backlog -= obs.successes;
        result.total_slots += r;

        step = advance_estimator(config.estimator, step.state, obs, backlog);
        if (step.decision.done && backlog > 0) {
            // Estimator believes the population is exhausted; probe with one slot.
            step.decision = {1, 1, false};
            step.state.virtual_len = 1;
            step.state.real_len = 1;
        }
        if (record) {
            result.trajectory.push_back({result.frames, z, r, obs.empties, obs.successes, obs.collisions,
                                         backlog_before, step.state.estimate});
        }
        ++result.frames;
    }

    result.efficiency = static_cast<double>(config.tags) / static_cast<double>(result.total_slots);
    return result;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
    return splitmix64(splitmix64(master) ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

RunResult run_identification(const SimConfig& config, bool record_trajectory) {
    validate(config);
    return simulate(config, config.seed, record_trajectory);
}

EfficiencyPoint batch_efficiency(const SimConfig& config) {
    validate(config);
    if (config.runs < 2) throw std::invalid_argument("batch_efficiency needs at least 2 runs");

    struct Sample {
        double efficiency;
        double slots;
        bool terminated;
    };
    std::vector<Sample> samples(static_cast<std::size_t>(config.runs));
    parallel_for(config.runs, config.threads, [&](std::int64_t k) {
        const auto run = simulate(config, derive_seed(config.seed, static_cast<std::uint64_t>(k)), false);
        samples[static_cast<std::size_t>(k)] = {run.efficiency, static_cast<double>(run.total_slots), run.terminated};
    });

    CompensatedSum eff, eff2, slots, slots2;
    EfficiencyPoint point;
    point.tags = config.tags;
    point.runs = config.runs;
    for (const auto& s : samples) {
        eff.add(s.efficiency);
        slots.add(s.slots);
        if (!s.terminated) ++point.nonterminated;
    }
    const double n = static_cast<double>(config.runs);
    point.efficiency = eff.value() / n;
    point.mean_slots = slots.value() / n;
    for (const auto& s : samples) {
        eff2.add((s.efficiency - point.efficiency) * (s.efficiency - point.efficiency));
        slots2.add((s.slots - point.mean_slots) * (s.slots - point.mean_slots));
    }
    point.ci_half_width = 1.959963984540054 * std::sqrt(eff2.value() / (n - 1.0) / n);
    point.slots_std_error = std::sqrt(slots2.value() / (n - 1.0) / n);
    return point;
}

std::vector<TrajectoryAverage> mean_trajectory(const SimConfig& config) {
    validate(config);
    if (config.runs < 100) throw std::invalid_argument("mean_trajectory needs at least 100 runs");

    std::vector<std::vector<TrajectoryPoint>> runs(static_cast<std::size_t>(config.runs));
    parallel_for(config.runs, config.threads, [&](std::int64_t k) {
        runs[static_cast<std::size_t>(k)] =
            simulate(config, derive_seed(config.seed, static_cast<std::uint64_t>(k)), true).trajectory;
    });

    std::size_t longest = 0;
    for (const auto& t : runs) longest = std::max(longest, t.size());

    std::vector<TrajectoryAverage> out;
    out.reserve(longest);
    std::vector<double> offset(runs.size(), 0.0);
    for (std::size_t i = 0; i < longest; ++i) {
        CompensatedSum off, backlog, estimate, traffic, ratio, real, virt;
        std::int64_t active = 0;
        for (std::size_t k = 0; k < runs.size(); ++k) {
            if (i >= runs[k].size()) continue;
            const auto& p = runs[k][i];
            ++active;
            off.add(offset[k]);
            backlog.add(static_cast<double>(p.backlog_before));
            estimate.add(static_cast<double>(p.estimate_after));
            traffic.add(static_cast<double>(p.backlog_before) / static_cast<double>(p.virtual_len));
            ratio.add(static_cast<double>(p.real_len) / static_cast<double>(p.virtual_len));
            real.add(static_cast<double>(p.real_len));
            virt.add(static_cast<double>(p.virtual_len));
            offset[k] += static_cast<double>(p.real_len);
        }
        const double a = static_cast<double>(active);
        out.push_back({static_cast<std::int64_t>(i), active, off.value() / a, backlog.value() / a,
                       estimate.value() / a, traffic.value() / a, ratio.value() / a, real.value() / a,
                       virt.value() / a});
    }
    return out;
}

}  // namespace dfalab
