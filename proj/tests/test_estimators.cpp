#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>

#include "dfalab/estimators.hpp"

using namespace dfalab;

namespace {

FrameObservation frame(std::int64_t e, std::int64_t s, std::int64_t c, std::int64_t z = -1) {
    FrameObservation o{e, s, c, e + s + c, z < 0 ? e + s + c : z};
    REQUIRE(o.consistent());
    return o;
}

FrameObservation random_frame(std::mt19937_64& rng, std::int64_t max_len) {
    std::uniform_int_distribution<std::int64_t> len(1, max_len);
    const auto r = len(rng);
    std::uniform_int_distribution<std::int64_t> pick(0, r);
    const auto c = pick(rng);
    std::uniform_int_distribution<std::int64_t> pick_s(0, r - c);
    const auto s = pick_s(rng);
    return {r - c - s, s, c, r, r};
}

}  // namespace

TEST_CASE("constants") {
    CHECK(kSchouteH == doctest::Approx(2.3922).epsilon(1e-4));
    CHECK(kAe2HPrime == doctest::Approx(3.7844).epsilon(1e-4));
    CHECK(round_nearest(2.5) == 3);
    CHECK(round_nearest(-2.5) == -3);
    CHECK(round_nearest(2.49) == 2);
}

TEST_CASE("Schoute update") {
    EstimatorState st;
    CHECK(schoute_update(st, frame(0, 0, 1)).state.estimate == 2);
    auto ten = schoute_update(st, frame(5, 3, 10));
    CHECK(ten.state.estimate == 24);
    CHECK(ten.decision.next_virtual == 24);
    CHECK(ten.decision.next_real == 24);
    CHECK_FALSE(ten.decision.done);
    CHECK(ten.state.frame_index == 1);
    CHECK(schoute_update(st, frame(3, 4, 0)).decision.done);
}

TEST_CASE("lower bound update") {
    EstimatorState st;
    CHECK(lower_bound_update(st, frame(0, 0, 1)).state.estimate == 2);
    CHECK(lower_bound_update(st, frame(2, 1, 7)).state.estimate == 14);
    CHECK(lower_bound_update(st, frame(1, 1, 0)).decision.done);
}

TEST_CASE("AE2 multiplier limits and zero-collision law") {
    CHECK(ae2_multiplier(10, 10) == doctest::Approx(kSchouteH).epsilon(1e-15));
    CHECK(ae2_multiplier(1, 1'000'000'000) == doctest::Approx(kAe2HPrime).epsilon(1e-8));

    EstimatorState st;
    st.virtual_len = 10;
    auto step = ae2_update(st, frame(1, 3, 0, 10), 2.0);
    CHECK(step.decision.next_virtual == 7);
    CHECK_FALSE(step.decision.done);

    auto all_done = ae2_update(st, frame(0, 4, 0, 4), 2.0);
    CHECK(all_done.decision.done);
}

TEST_CASE("AE2 real frame ramp") {
    CHECK(ae2_real_length(0, 2.0, 100) == 1);
    CHECK(ae2_real_length(1, 2.0, 100) == 4);
    CHECK(ae2_real_length(4, 2.0, 100) == 25);
    CHECK(ae2_real_length(20, 2.0, 100) == 100);
    CHECK(ae2_real_length(3, 1.0, 100) == 4);
    CHECK(ae2_real_length(5, 2.0, 0) == 1);
}

TEST_CASE("AE2 with full frames reproduces Schoute on collided frames") {
    std::mt19937_64 rng(11);
    EstimatorState st;
    for (int k = 0; k < 5000; ++k) {
        auto obs = random_frame(rng, 500);
        if (obs.collisions == 0) continue;
        st.frame_index = k;
        CHECK(ae2_update(st, obs, 2.0).decision.next_virtual == schoute_update(st, obs).decision.next_virtual);
    }
}

TEST_CASE("Schoute and lower bound are memoryless") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 500; ++trial) {
        EstimatorState a, b;
        for (int k = 0; k < 4; ++k) a = schoute_update(a, random_frame(rng, 60)).state;
        for (int k = 0; k < 7; ++k) b = lower_bound_update(b, random_frame(rng, 60)).state;
        const auto last = random_frame(rng, 60);
        const auto sa = schoute_update(a, last).decision;
        const auto sb = schoute_update(b, last).decision;
        CHECK(sa.next_virtual == sb.next_virtual);
        CHECK(sa.done == sb.done);
        const auto la = lower_bound_update(a, last).decision;
        const auto lb = lower_bound_update(b, last).decision;
        CHECK(la.next_virtual == lb.next_virtual);
    }
}

TEST_CASE("optimized AE2 multiplier sequence and phase switch") {
    Ae2Optimized p;
    for (int i = 0; i <= 3; ++i) CHECK(p.multiplier(i) == 2.0);
    CHECK(p.multiplier(4) == 1.8);
    for (int i = 5; i < 40; ++i) CHECK(p.multiplier(i) == 1.7);

    auto start = start_estimator(p, 1, 500);
    CHECK(start.state.phase == Phase::approach);
    CHECK(start.decision.next_real == 1);

    // All-collided one-slot frames keep approaching with a non-decreasing estimate.
    auto st = start.state;
    std::int64_t previous = st.estimate;
    for (int i = 0; i < 12; ++i) {
        auto step = optimized_ae2_update(st, frame(0, 0, 1, st.virtual_len), p);
        CHECK(step.state.phase == Phase::approach);
        CHECK(step.state.estimate >= previous);
        CHECK(step.decision.next_real == 1);
        previous = step.state.estimate;
        st = step.state;
    }

    auto empty_slot = optimized_ae2_update(st, frame(1, 0, 0, st.virtual_len), p);
    CHECK(empty_slot.state.phase == Phase::tracking);
    CHECK(empty_slot.decision.next_virtual == st.virtual_len);
    CHECK(empty_slot.decision.next_real == ae2_real_length(st.frame_index + 1, p.b, st.virtual_len));

    auto success = optimized_ae2_update(st, frame(0, 1, 0, st.virtual_len), p);
    CHECK(success.state.phase == Phase::tracking);
}

TEST_CASE("power-of-two quantization") {
    CHECK(pow2_quantize(1000) == 1024);
    CHECK(pow2_quantize(3) == 4);
    CHECK(pow2_quantize(200000) == 65536);
    CHECK(pow2_quantize(1) == 2);
    CHECK(pow2_quantize(47) == 32);
    CHECK(pow2_quantize(48) == 64);

    // Closest in linear distance: worst log-distance is log2(1.5).
    const double bound = std::log2(1.5) + 1e-12;
    for (std::int64_t n = 1; n <= 200000; ++n) {
        const auto q = pow2_quantize(n);
        CHECK((q & (q - 1)) == 0);
        CHECK(q >= 2);
        CHECK(q <= 65536);
        if (n >= 2 && n <= 65536) CHECK(std::abs(std::log2(static_cast<double>(q)) - std::log2(static_cast<double>(n))) <= bound);
    }
}

TEST_CASE("perfect estimate") {
    CHECK(perfect_estimate(7).next_virtual == 7);
    CHECK(perfect_estimate(0).done);
    CHECK(perfect_estimate(1).next_real == 1);
}

TEST_CASE("every estimator always asks for a non-empty frame") {
    std::mt19937_64 rng(99);
    const std::vector<EstimatorSpec> specs = {Schoute{}, LowerBound{}, Perfect{}, SchoutePow2{},
                                              Ae2{1.0},  Ae2{2.0},     Ae2Optimized{}, ae2_pow2_spec()};
    for (const auto& spec : specs) {
        auto step = start_estimator(spec, 3, 40);
        for (int k = 0; k < 300; ++k) {
            CHECK(step.decision.next_real >= 1);
            CHECK(step.decision.next_virtual >= step.decision.next_real);
            std::uniform_int_distribution<std::int64_t> pick(0, step.decision.next_real);
            const auto c = pick(rng);
            std::uniform_int_distribution<std::int64_t> pick_s(0, step.decision.next_real - c);
            const auto s = pick_s(rng);
            FrameObservation obs{step.decision.next_real - c - s, s, c, step.decision.next_real,
                                 step.decision.next_virtual};
            step = advance_estimator(spec, step.state, obs, 40);
            if (step.decision.done) step = start_estimator(spec, 1 + k % 9, 40);
        }
    }
}

TEST_CASE("start frame conventions") {
    CHECK(start_estimator(Schoute{}, 16, 100).decision.next_real == 16);
    CHECK(start_estimator(Perfect{}, 16, 100).decision.next_real == 100);
    CHECK(start_estimator(SchoutePow2{}, 5, 100).decision.next_virtual == 4);
    CHECK(start_estimator(ae2_pow2_spec(), 1, 100).decision.next_virtual == 2);
    CHECK_THROWS_AS(start_estimator(Schoute{}, 0, 1), std::invalid_argument);
}

TEST_CASE("memoryless frame rules agree with the update laws") {
    auto rule = *memoryless_rule(Schoute{});
    CHECK(rule(10, 10, 2, 1) == 2);
    CHECK(rule(10, 10, 10, 0) == 1);
    CHECK((*memoryless_rule(LowerBound{}))(9, 9, 1, 3) == 6);
    CHECK((*memoryless_rule(Perfect{}))(9, 9, 4, 2) == 5);
    CHECK((*memoryless_rule(SchoutePow2{}))(9, 9, 0, 10) == 32);
    CHECK_FALSE(memoryless_rule(Ae2{}).has_value());
    CHECK_FALSE(memoryless_rule(Ae2Optimized{}).has_value());
    CHECK(is_memoryless(Schoute{}));
    CHECK_FALSE(is_memoryless(Ae2{}));
}

TEST_CASE("estimator names round-trip") {
    for (const char* name : {"schoute", "lower_bound", "perfect", "schoute_pow2", "ae2_pow2", "ae2(1)", "ae2(2.5)",
                             "ae2_opt(2 2 2 2 1.8 1.7;1.7)", "ae2_opt(2 1.9;1.6;b=1)"}) {
        const auto spec = parse_estimator(name);
        CHECK(to_string(spec) == name);
        CHECK(to_string(parse_estimator(to_string(spec))) == name);
    }
    CHECK(std::get<Ae2>(parse_estimator("ae2", 3.0)).b == 3.0);
    CHECK(std::get<Ae2>(parse_estimator("ae2(b=1)")).b == 1.0);
    CHECK(to_string(parse_estimator("ae2_opt")) == "ae2_opt(2 2 2 2 1.8 1.7;1.7)");
    CHECK(to_string(parse_estimator("ae2_opt(2,2,1.8;1.7)")) == "ae2_opt(2 2 1.8;1.7)");
    CHECK(to_string(parse_estimator(" Schoute ")) == "schoute");

    for (const char* bad : {"", "vogt", "ae2(", "ae2(x)", "ae2(-1)", "schoute(2)", "ae2_opt(0.5;1.7)",
                            "ae2_opt(2;1;2;3)"}) {
        CHECK_THROWS_AS(parse_estimator(bad), std::invalid_argument);
    }
    CHECK(to_string(parse_estimator("ae2_opt(2 2 2 2 1.8 1.7;1.7)")).find(',') == std::string::npos);
}
