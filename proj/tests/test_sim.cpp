#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "dfalab/analytic.hpp"
#include "dfalab/sim.hpp"

using namespace dfalab;

namespace {

SimConfig config_for(std::int64_t tags, EstimatorSpec est, std::int64_t r0, std::uint64_t seed, std::int64_t runs) {
    SimConfig c;
    c.tags = tags;
    c.estimator = std::move(est);
    c.r0 = r0;
    c.seed = seed;
    c.runs = runs;
    return c;
}

}  // namespace

TEST_CASE("trivial populations") {
    const auto none = run_identification(config_for(0, Schoute{}, 4, 1, 1));
    CHECK(none.frames == 0);
    CHECK(none.total_slots == 0);
    CHECK(none.efficiency == 1.0);

    // Power-of-two frames cannot be shorter than 2 slots.
    CHECK(run_identification(config_for(1, SchoutePow2{}, 1, 1, 1)).total_slots == 2);

    for (const auto& est : std::vector<EstimatorSpec>{Schoute{}, LowerBound{}, Perfect{}, Ae2{}, Ae2Optimized{}}) {
        for (std::uint64_t seed = 1; seed <= 20; ++seed) {
            const auto one = run_identification(config_for(1, est, 1, seed, 1));
            CHECK(one.total_slots == 1);
            CHECK(one.terminated);
        }
    }
}

TEST_CASE("two tags in two slots take four slots on average") {
    const auto point = batch_efficiency(config_for(2, Schoute{}, 2, 17, 100'000));
    CHECK(point.mean_slots == doctest::Approx(4.0).epsilon(0.05 / 4.0));
    CHECK(std::abs(point.mean_slots - 4.0) < 4.0 * point.slots_std_error);
}

TEST_CASE("runs are reproducible and independent of thread count") {
    for (const auto& est : std::vector<EstimatorSpec>{Schoute{}, Ae2{2.0}, Ae2Optimized{}, ae2_pow2_spec()}) {
        auto c = config_for(300, est, 1, 1234, 1);
        const auto a = run_identification(c, true);
        const auto b = run_identification(c, true);
        CHECK(a.total_slots == b.total_slots);
        CHECK(a.frames == b.frames);
        REQUIRE(a.trajectory.size() == b.trajectory.size());
        for (std::size_t i = 0; i < a.trajectory.size(); ++i) {
            CHECK(a.trajectory[i].successes == b.trajectory[i].successes);
            CHECK(a.trajectory[i].estimate_after == b.trajectory[i].estimate_after);
        }

        auto batch = config_for(200, est, 1, 99, 64);
        batch.threads = 1;
        const auto single = batch_efficiency(batch);
        batch.threads = 4;
        const auto multi = batch_efficiency(batch);
        CHECK(single.efficiency == multi.efficiency);
        CHECK(single.mean_slots == multi.mean_slots);
        CHECK(single.ci_half_width == multi.ci_half_width);
    }
    CHECK(derive_seed(1, 0) != derive_seed(1, 1));
    CHECK(derive_seed(1, 0) != derive_seed(2, 0));
}

TEST_CASE("slot accounting and conservation along every frame") {
    for (const auto& est : std::vector<EstimatorSpec>{Schoute{}, LowerBound{}, Perfect{}, SchoutePow2{}, Ae2{1.0},
                                                      Ae2{2.0}, Ae2Optimized{}, ae2_pow2_spec()}) {
        for (std::uint64_t seed = 1; seed <= 5; ++seed) {
            const std::int64_t n = 257;
            const auto run = run_identification(config_for(n, est, 3, seed, 1), true);
            REQUIRE(run.terminated);
            std::int64_t identified = 0;
            std::int64_t slots = 0;
            for (const auto& f : run.trajectory) {
                CHECK(f.empties + f.successes + f.collisions == f.real_len);
                CHECK(f.real_len >= 1);
                CHECK(f.real_len <= f.virtual_len);
                CHECK(identified + f.backlog_before == n);
                CHECK(f.successes + 2 * f.collisions <= f.backlog_before);
                identified += f.successes;
                slots += f.real_len;
            }
            CHECK(identified == n);
            CHECK(slots == run.total_slots);
            CHECK(run.frames == static_cast<std::int64_t>(run.trajectory.size()));
            CHECK(run.efficiency == doctest::Approx(static_cast<double>(n) / static_cast<double>(slots)));
        }
    }
}

TEST_CASE("simulated mean length matches the exact length for small populations") {
    for (std::int64_t n = 2; n <= 6; ++n) {
        for (std::int64_t r0 : {std::int64_t{1}, n, 2 * n}) {
            const auto point = batch_efficiency(config_for(n, Schoute{}, r0, 7 + static_cast<std::uint64_t>(n), 20'000));
            const double exact = exact_expected_length(n, Schoute{}, r0);
            CHECK(std::abs(point.mean_slots - exact) < 4.0 * point.slots_std_error);
        }
        const auto lb = batch_efficiency(config_for(n, LowerBound{}, n, 3, 20'000));
        CHECK(std::abs(lb.mean_slots - exact_expected_length(n, LowerBound{}, n)) < 4.0 * lb.slots_std_error);
    }
}

TEST_CASE("collision counts concentrate") {
    // Group first-tracking frames with n_i, r_i >= 100 by (n_i, r_i) and
    // compare the spread of c_i with r_i.
    std::map<std::pair<std::int64_t, std::int64_t>, std::vector<double>> groups;
    for (std::uint64_t seed = 0; seed < 1500; ++seed) {
        const auto run = run_identification(config_for(400, Perfect{}, 1, seed, 1), true);
        for (const auto& f : run.trajectory) {
            if (f.backlog_before >= 100 && f.real_len >= 100) {
                groups[{f.backlog_before, f.real_len}].push_back(static_cast<double>(f.collisions));
            }
        }
    }
    int checked = 0;
    for (const auto& [key, values] : groups) {
        if (values.size() < 50) continue;
        double mean = 0.0;
        for (double v : values) mean += v;
        mean /= static_cast<double>(values.size());
        double var = 0.0;
        for (double v : values) var += (v - mean) * (v - mean);
        var /= static_cast<double>(values.size() - 1);
        CHECK(var <= static_cast<double>(key.second));
        ++checked;
    }
    CHECK(checked >= 1);
}

TEST_CASE("efficiency levels at N = 1000") {
    const auto schoute = batch_efficiency(config_for(1000, Schoute{}, 1, 21, 400));
    CHECK(std::abs(schoute.efficiency - 0.311) < 0.01);

    const auto perfect = batch_efficiency(config_for(1000, Perfect{}, 1, 21, 400));
    CHECK(perfect.efficiency > 0.354);
    CHECK(perfect.efficiency < 0.372);

    const auto optimized = batch_efficiency(config_for(1000, Ae2Optimized{}, 1, 21, 400));
    CHECK(optimized.efficiency > 0.35);

    CHECK(schoute.nonterminated == 0);
    CHECK(schoute.ci_half_width > 0.0);
    CHECK(schoute.ci_half_width < 0.005);
}

TEST_CASE("mean trajectories") {
    auto schoute_cfg = config_for(1000, Schoute{}, 1, 5, 1000);
    const auto schoute = mean_trajectory(schoute_cfg);
    auto ae2_cfg = config_for(1000, Ae2{2.0}, 1, 5, 1000);
    const auto ae2 = mean_trajectory(ae2_cfg);

    auto peak = [](const std::vector<TrajectoryAverage>& t) {
        return std::max_element(t.begin(), t.end(),
                                [](const auto& a, const auto& b) { return a.estimate < b.estimate; });
    };
    const auto sp = peak(schoute);
    const auto ap = peak(ae2);
    CHECK(ap->estimate > sp->estimate);
    CHECK(ap->slot_offset < sp->slot_offset);

    // Once K ~ 1 the backlog shrinks by a factor 1 - e^-1 per frame.
    int checked = 0;
    for (std::size_t i = static_cast<std::size_t>(sp - schoute.begin()) + 1; i + 1 < schoute.size(); ++i) {
        if (schoute[i].backlog < 500.0 && schoute[i + 1].backlog > 50.0) {
            CHECK(schoute[i + 1].backlog / schoute[i].backlog == doctest::Approx(1.0 - std::exp(-1.0)).epsilon(0.03));
            ++checked;
        }
    }
    CHECK(checked >= 3);

    for (const auto& t : {schoute, ae2}) {
        CHECK(t.front().active_runs == 1000);
        for (std::size_t i = 1; i < t.size(); ++i) {
            CHECK(t[i].active_runs <= t[i - 1].active_runs);
            // averages over surviving runs only, so monotone while none has finished
            if (t[i].active_runs == t.front().active_runs) CHECK(t[i].slot_offset > t[i - 1].slot_offset);
        }
    }

    // AE2 traffic settles at 1
    for (const auto& a : ae2) {
        if (a.backlog < 800.0 && a.backlog > 50.0) CHECK(std::abs(a.traffic - 1.0) < 0.05);
    }

    auto few = schoute_cfg;
    few.runs = 10;
    CHECK_THROWS_AS(mean_trajectory(few), std::invalid_argument);
    few.runs = 1;
    CHECK_THROWS_AS(batch_efficiency(few), std::invalid_argument);
}
