#include "dfalab/estimators.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace dfalab {

const double kSchouteH = (1.0 - std::exp(-1.0)) / (1.0 - 2.0 * std::exp(-1.0));
const double kAe2HPrime = 1.0 / (1.0 - 2.0 * std::exp(-1.0));

std::int64_t round_nearest(double x) { return std::llround(x); }

double Ae2Optimized::multiplier(std::int64_t index) const {
    if (index >= 0 && static_cast<std::size_t>(index) < multipliers.size()) {
        return multipliers[static_cast<std::size_t>(index)];
    }
    return tail;
}

Ae2Optimized ae2_pow2_spec() { return Ae2Optimized{{}, 2.0, true}; }

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

EstimatorState advanced(const EstimatorState& state, std::int64_t estimate, const EstimatorDecision& d) {
    EstimatorState next = state;
    next.frame_index = state.frame_index + 1;
    next.estimate = estimate;
    next.virtual_len = d.next_virtual;
    next.real_len = d.next_real;
    return next;
}

EstimatorDecision full_frame(std::int64_t length) {
    const auto n = std::max<std::int64_t>(length, 1);
    return {n, n, false};
}

EstimatorDecision finished() { return {1, 1, true}; }

// Shared by the memoryless classic-frame estimators: n-hat from collisions,
// done on a collision-free frame.
EstimatorStep classic_update(const EstimatorState& state, const FrameObservation& obs,
                             std::int64_t (*estimate_of)(std::int64_t), bool pow2) {
    if (obs.collisions == 0) {
        return {advanced(state, 0, finished()), finished()};
    }
    const auto estimate = estimate_of(obs.collisions);
    const auto frame = pow2 ? pow2_quantize(std::max<std::int64_t>(estimate, 1)) : estimate;
    const auto d = full_frame(frame);
    return {advanced(state, estimate, d), d};
}

std::int64_t schoute_estimate(std::int64_t c) { return round_nearest(kSchouteH * static_cast<double>(c)); }
std::int64_t lower_bound_estimate(std::int64_t c) { return 2 * c; }

// AE2 virtual-frame law with the zero-collision clamp.
struct VirtualUpdate {
    std::int64_t estimate;
    bool done;
};

VirtualUpdate ae2_virtual_update(const FrameObservation& obs) {
    if (obs.collisions > 0) {
        const double h = ae2_multiplier(obs.real_len, obs.virtual_len);
        const double scaled = static_cast<double>(obs.virtual_len) / static_cast<double>(obs.real_len) *
                              static_cast<double>(obs.collisions);
        return {round_nearest(h * scaled), false};
    }
    const auto left = obs.virtual_len - obs.successes;
    return {std::max<std::int64_t>(left, 1), left <= 0};
}

std::string format_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

std::string trim(std::string_view s) {
    auto b = s.find_first_not_of(" \t");
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(" \t");
    return std::string(s.substr(b, e - b + 1));
}

double parse_number(std::string_view token, std::string_view whole) {
    const auto t = trim(token);
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
    if (t.empty() || ec != std::errc{} || ptr != t.data() + t.size() || !std::isfinite(value)) {
        throw std::invalid_argument("bad number '" + t + "' in estimator '" + std::string(whole) + "'");
    }
    return value;
}

std::vector<double> parse_list(std::string_view body, std::string_view whole) {
    std::vector<double> out;
    std::string token;
    for (char ch : body) {
        if (ch == ',' || ch == ' ' || ch == '\t') {
            if (!token.empty()) out.push_back(parse_number(token, whole));
            token.clear();
        } else {
            token.push_back(ch);
        }
    }
    if (!token.empty()) out.push_back(parse_number(token, whole));
    return out;
}

}  // namespace

double ae2_multiplier(std::int64_t real_len, std::int64_t virtual_len) {
    const double ratio = static_cast<double>(real_len) / static_cast<double>(virtual_len);
    return (1.0 - ratio * std::exp(-1.0)) / (1.0 - 2.0 * std::exp(-1.0));
}

std::int64_t ae2_real_length(std::int64_t frame_index, double b, std::int64_t virtual_len) {
    const auto ramp = round_nearest(std::pow(static_cast<double>(frame_index + 1), b));
    return std::clamp<std::int64_t>(ramp, 1, std::max<std::int64_t>(virtual_len, 1));
}

EstimatorStep schoute_update(const EstimatorState& state, const FrameObservation& obs) {
    return classic_update(state, obs, schoute_estimate, false);
}

EstimatorStep lower_bound_update(const EstimatorState& state, const FrameObservation& obs) {
    return classic_update(state, obs, lower_bound_estimate, false);
}

EstimatorStep schoute_pow2_update(const EstimatorState& state, const FrameObservation& obs) {
    return classic_update(state, obs, schoute_estimate, true);
}

EstimatorStep ae2_update(const EstimatorState& state, const FrameObservation& obs, double b) {
    const auto v = ae2_virtual_update(obs);
    if (v.done) return {advanced(state, 0, finished()), finished()};
    EstimatorDecision d;
    d.next_virtual = std::max<std::int64_t>(v.estimate, 1);
    d.next_real = ae2_real_length(state.frame_index + 1, b, d.next_virtual);
    return {advanced(state, v.estimate, d), d};
}

EstimatorStep optimized_ae2_update(const EstimatorState& state, const FrameObservation& obs,
                                   const Ae2Optimized& params) {
    auto frame_for = [&](std::int64_t estimate) {
        const auto n = std::max<std::int64_t>(estimate, 1);
        return params.pow2 ? pow2_quantize(n) : n;
    };

    if (state.phase == Phase::approach && obs.collisions == obs.real_len) {
        const auto estimate =
            round_nearest(params.multiplier(state.frame_index) * static_cast<double>(state.estimate));
        EstimatorDecision d{frame_for(estimate), 1, false};
        auto next = advanced(state, estimate, d);
        next.phase = Phase::approach;
        return {next, d};
    }

    // First non-collided slot ends the approach; from then on the AE2 laws.
    const auto v = ae2_virtual_update(obs);
    if (v.done) {
        auto next = advanced(state, 0, finished());
        next.phase = Phase::tracking;
        return {next, finished()};
    }
    const auto z = frame_for(v.estimate);
    EstimatorDecision d{z, ae2_real_length(state.frame_index + 1, params.b, z), false};
    auto next = advanced(state, v.estimate, d);
    next.phase = Phase::tracking;
    return {next, d};
}

std::int64_t pow2_quantize(std::int64_t estimate) {
    std::int64_t best = 2;
    for (int q = 1; q <= 16; ++q) {
        const std::int64_t candidate = std::int64_t{1} << q;
        if (std::llabs(candidate - estimate) <= std::llabs(best - estimate)) best = candidate;
    }
    return best;
}

EstimatorDecision perfect_estimate(std::int64_t true_backlog) {
    if (true_backlog <= 0) return finished();
    return full_frame(true_backlog);
}

EstimatorStep start_estimator(const EstimatorSpec& spec, std::int64_t r0, std::int64_t true_backlog) {
    if (r0 < 1) throw std::invalid_argument("initial frame length must be positive");
    EstimatorState state;
    state.frame_index = 0;
    state.estimate = r0;
    state.phase = Phase::tracking;
    EstimatorDecision d = full_frame(r0);

    std::visit(overloaded{
                   [&](const Perfect&) {
                       d = perfect_estimate(true_backlog);
                       state.estimate = true_backlog;
                   },
                   [&](const SchoutePow2&) { d = full_frame(pow2_quantize(r0)); },
                   [&](const Ae2Optimized& p) {
                       state.phase = Phase::approach;
                       d.next_virtual = p.pow2 ? pow2_quantize(r0) : r0;
                       d.next_real = 1;
                   },
                   [](const auto&) {},
               },
               spec);
    state.virtual_len = d.next_virtual;
    state.real_len = d.next_real;
    return {state, d};
}

EstimatorStep advance_estimator(const EstimatorSpec& spec, const EstimatorState& state,
                                const FrameObservation& obs, std::int64_t true_backlog) {
    return std::visit(overloaded{
                          [&](const Schoute&) { return schoute_update(state, obs); },
                          [&](const LowerBound&) { return lower_bound_update(state, obs); },
                          [&](const SchoutePow2&) { return schoute_pow2_update(state, obs); },
                          [&](const Perfect&) {
                              const auto d = perfect_estimate(true_backlog);
                              return EstimatorStep{advanced(state, std::max<std::int64_t>(true_backlog, 0), d), d};
                          },
                          [&](const Ae2& p) { return ae2_update(state, obs, p.b); },
                          [&](const Ae2Optimized& p) { return optimized_ae2_update(state, obs, p); },
                      },
                      spec);
}

bool is_memoryless(const EstimatorSpec& spec) {
    return std::holds_alternative<Schoute>(spec) || std::holds_alternative<LowerBound>(spec) ||
           std::holds_alternative<SchoutePow2>(spec) || std::holds_alternative<Perfect>(spec);
}

std::optional<FrameRule> memoryless_rule(const EstimatorSpec& spec) {
    return std::visit(
        overloaded{
            [](const Schoute&) -> std::optional<FrameRule> {
                return FrameRule{[](std::int64_t, std::int64_t, std::int64_t, std::int64_t c) {
                    return std::max<std::int64_t>(schoute_estimate(c), 1);
                }};
            },
            [](const LowerBound&) -> std::optional<FrameRule> {
                return FrameRule{[](std::int64_t, std::int64_t, std::int64_t, std::int64_t c) {
                    return std::max<std::int64_t>(2 * c, 1);
                }};
            },
            [](const SchoutePow2&) -> std::optional<FrameRule> {
                return FrameRule{[](std::int64_t, std::int64_t, std::int64_t, std::int64_t c) {
                    return pow2_quantize(std::max<std::int64_t>(schoute_estimate(c), 1));
                }};
            },
            [](const Perfect&) -> std::optional<FrameRule> {
                return FrameRule{[](std::int64_t n, std::int64_t, std::int64_t s, std::int64_t) {
                    return std::max<std::int64_t>(n - s, 1);
                }};
            },
            [](const auto&) -> std::optional<FrameRule> { return std::nullopt; },
        },
        spec);
}

EstimatorSpec parse_estimator(std::string_view text, double default_b) {
    const auto whole = trim(text);
    std::string name = whole;
    std::string args;
    bool has_args = false;
    if (auto open = whole.find('('); open != std::string::npos) {
        if (whole.back() != ')') throw std::invalid_argument("unbalanced parentheses in estimator '" + whole + "'");
        name = trim(std::string_view(whole).substr(0, open));
        args = whole.substr(open + 1, whole.size() - open - 2);
        has_args = true;
    }
    for (auto& ch : name) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));

    auto no_args = [&](EstimatorSpec s) -> EstimatorSpec {
        if (has_args && !trim(args).empty()) {
            throw std::invalid_argument("estimator '" + name + "' takes no parameters");
        }
        return s;
    };

    if (name == "schoute") return no_args(Schoute{});
    if (name == "lower_bound") return no_args(LowerBound{});
    if (name == "perfect") return no_args(Perfect{});
    if (name == "schoute_pow2") return no_args(SchoutePow2{});
    if (name == "ae2_pow2") return no_args(ae2_pow2_spec());
    if (name == "ae2") {
        double b = default_b;
        if (has_args) {
            auto a = trim(args);
            if (a.rfind("b=", 0) == 0) a = a.substr(2);
            b = parse_number(a, whole);
        }
        if (!(b > 0.0)) throw std::invalid_argument("ae2 exponent b must be positive");
        return Ae2{b};
    }
    if (name == "ae2_opt") {
        Ae2Optimized p;
        if (has_args) {
            std::vector<std::string> sections;
            std::string_view rest = args;
            for (auto semi = rest.find(';');; semi = rest.find(';')) {
                sections.emplace_back(rest.substr(0, semi));
                if (semi == std::string_view::npos) break;
                rest.remove_prefix(semi + 1);
            }
            if (sections.size() > 3) throw std::invalid_argument("too many sections in '" + whole + "'");
            p.multipliers = parse_list(sections[0], whole);
            if (sections.size() > 1) {
                auto t = trim(sections[1]);
                if (t.rfind("tail=", 0) == 0) t = t.substr(5);
                p.tail = parse_number(t, whole);
            } else if (!p.multipliers.empty()) {
                p.tail = p.multipliers.back();
            }
            if (sections.size() > 2) {
                auto t = trim(sections[2]);
                if (t.rfind("b=", 0) == 0) t = t.substr(2);
                p.b = parse_number(t, whole);
            }
        }
        if (!(p.b > 0.0)) throw std::invalid_argument("ae2_opt exponent b must be positive");
        for (double h : p.multipliers) {
            if (!(h >= 1.0)) throw std::invalid_argument("ae2_opt multipliers must be >= 1");
        }
        if (!(p.tail >= 1.0)) throw std::invalid_argument("ae2_opt tail must be >= 1");
        return p;
    }
    throw std::invalid_argument("unknown estimator '" + whole + "'");
}

std::string to_string(const EstimatorSpec& spec) {
    return std::visit(overloaded{
                          [](const Schoute&) -> std::string { return "schoute"; },
                          [](const LowerBound&) -> std::string { return "lower_bound"; },
                          [](const Perfect&) -> std::string { return "perfect"; },
                          [](const SchoutePow2&) -> std::string { return "schoute_pow2"; },
                          [](const Ae2& p) -> std::string { return "ae2(" + format_number(p.b) + ")"; },
                          [](const Ae2Optimized& p) -> std::string {
                              const auto pow2 = ae2_pow2_spec();
                              if (p.pow2 && p.multipliers == pow2.multipliers && p.tail == pow2.tail && p.b == pow2.b) {
                                  return "ae2_pow2";
                              }
                              std::string out = "ae2_opt(";
                              for (std::size_t i = 0; i < p.multipliers.size(); ++i) {
                                  if (i) out += ' ';
                                  out += format_number(p.multipliers[i]);
                              }
                              out += ";" + format_number(p.tail);
                              if (p.b != Ae2Optimized{}.b) out += ";b=" + format_number(p.b);
                              out += ")";
                              return out;
                          },
                      },
                      spec);
}

}  // namespace dfalab
