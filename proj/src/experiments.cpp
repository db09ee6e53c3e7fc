#include "dfalab/experiments.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <optional>
#include <ostream>
#include <stdexcept>

#include "dfalab/analytic.hpp"
#include "dfalab/estimators.hpp"
#include "dfalab/search.hpp"
#include "dfalab/sim.hpp"

namespace dfalab {

namespace {

constexpr std::int64_t kExactTagLimit = 30;
// Trajectory analytic counterparts start at the first frame whose mean
// virtual length reaches this many slots; below it rounding dominates.
constexpr double kRoundingFreeFrame = 100.0;

std::vector<EstimatorSpec> resolve_estimators(const ExperimentSpec& spec) {
    if (spec.estimators.empty()) throw std::invalid_argument("no estimator given");
    std::vector<EstimatorSpec> out;
    for (const auto& name : spec.estimators) out.push_back(parse_estimator(name, spec.b));
    return out;
}

void require_tags(const ExperimentSpec& spec) {
    if (spec.n_list.empty()) throw std::invalid_argument("N list must not be empty");
    for (auto n : spec.n_list) {
        if (n < 0) throw std::invalid_argument("N values must be non-negative");
    }
}

std::int64_t first_frame_for(const ExperimentSpec& spec, std::int64_t tags) {
    if (spec.r0_equals_n) return std::max<std::int64_t>(tags, 1);
    if (spec.r0 < 1) throw std::invalid_argument("r0 must be positive");
    return spec.r0;
}

std::string cell(std::optional<double> v) { return v ? format_real(*v) : std::string(); }

}  // namespace

std::vector<std::int64_t> default_tag_grid() { return {1, 2, 5, 10, 20, 50, 100, 200, 500, 1000, 2000, 5000, 10000}; }

std::vector<std::int64_t> default_search_grid() { return {10, 20, 50, 100, 200, 500, 1000}; }

std::string format_real(double value) {
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", value);
    return buf;
}

ExperimentSpec spec_from_json(const nlohmann::json& config, ExperimentSpec base) {
    if (!config.is_object()) throw std::invalid_argument("config must be a JSON object");
    for (const auto& [key, value] : config.items()) {
        if (key == "command") base.command = value.get<std::string>();
        else if (key == "estimators" || key == "estimator") {
            base.estimators = value.is_array() ? value.get<std::vector<std::string>>()
                                               : std::vector<std::string>{value.get<std::string>()};
        } else if (key == "n_list") base.n_list = value.get<std::vector<std::int64_t>>();
        else if (key == "k_list") base.k_list = value.get<std::vector<double>>();
        else if (key == "r0") {
            if (value.is_string()) {
                if (value.get<std::string>() != "N") throw std::invalid_argument("r0 must be an integer or \"N\"");
                base.r0_equals_n = true;
            } else {
                base.r0 = value.get<std::int64_t>();
                base.r0_equals_n = false;
            }
        } else if (key == "b") base.b = value.get<double>();
        else if (key == "runs") base.runs = value.get<std::int64_t>();
        else if (key == "seed") base.seed = value.get<std::uint64_t>();
        else if (key == "out") base.out = value.get<std::string>();
        else if (key == "threads") base.threads = value.get<unsigned>();
        else if (key == "search_length") base.search_length = value.get<std::int64_t>();
        else if (key == "search_restarts") base.search_restarts = value.get<std::int64_t>();
        else if (key == "search_sweeps") base.search_sweeps = value.get<std::int64_t>();
        else if (key == "timing") base.timing = value.get<bool>();
        else throw std::invalid_argument("unknown config key '" + key + "'");
    }
    return base;
}

nlohmann::json spec_to_json(const ExperimentSpec& spec) {
    nlohmann::json j;
    j["command"] = spec.command;
    j["estimators"] = spec.estimators;
    j["n_list"] = spec.n_list;
    if (!spec.k_list.empty()) j["k_list"] = spec.k_list;
    if (spec.r0_equals_n) j["r0"] = "N";
    else j["r0"] = spec.r0;
    j["b"] = spec.b;
    j["runs"] = spec.runs;
    j["seed"] = spec.seed;
    return j;
}

void write_table1(std::ostream& out) {
    out << "K_u,A,B,C,efficiency\n";
    for (double ku : {20.0, 25.0, 30.0, 35.0, 40.0, 45.0, 47.8}) {
        const auto p = phase_efficiency(ku);
        out << format_real(ku) << ',' << format_real(p.approach) << ',' << format_real(p.convergence) << ','
            << format_real(p.surviving) << ',' << format_real(p.efficiency) << '\n';
    }
}

CommandOutcome run_sweep(const ExperimentSpec& spec, std::ostream& out) {
    require_tags(spec);
    const auto estimators = resolve_estimators(spec);
    CommandOutcome outcome;

    out << "N,estimator,r0,method,efficiency,ci_half_width,runs,seed,mean_slots,efficiency_of_mean\n";
    for (const auto& est : estimators) {
        const auto name = to_string(est);
        std::optional<ExactLengthSolver> exact;
        if (auto rule = memoryless_rule(est)) exact.emplace(std::move(*rule), kExactTagLimit);

        for (auto n : spec.n_list) {
            const auto r0 = first_frame_for(spec, n);
            if (exact && n <= kExactTagLimit && n >= 1) {
                const double slots = exact->expected_length(n, r0);
                const double eff = static_cast<double>(n) / slots;
                out << n << ',' << name << ',' << r0 << ",exact," << format_real(eff) << ",0,0," << spec.seed << ','
                    << format_real(slots) << ',' << format_real(eff) << '\n';
                continue;
            }
            SimConfig config;
            config.tags = n;
            config.estimator = est;
            config.r0 = r0;
            config.seed = spec.seed;
            config.runs = spec.runs;
            config.threads = spec.threads;
            const auto point = batch_efficiency(config);
            if (point.nonterminated > 0) outcome.all_terminated = false;
            out << n << ',' << name << ',' << r0 << ",sim," << format_real(point.efficiency) << ','
                << format_real(point.ci_half_width) << ',' << point.runs << ',' << spec.seed << ','
                << format_real(point.mean_slots) << ',' << format_real(point.efficiency_of_mean()) << '\n';
        }
    }
    return outcome;
}

CommandOutcome run_trajectory(const ExperimentSpec& spec, std::ostream& out) {
    require_tags(spec);
    const auto est = resolve_estimators(spec).front();
    const auto tags = spec.n_list.front();

    SimConfig config;
    config.tags = tags;
    config.estimator = est;
    config.r0 = first_frame_for(spec, tags);
    config.seed = spec.seed;
    config.runs = spec.runs;
    config.threads = spec.threads;
    const auto avg = mean_trajectory(config);

    // Analytic counterpart from the first rounding-free frame onward.
    std::size_t start = 0;
    while (start < avg.size() && avg[start].virtual_len < kRoundingFreeFrame) ++start;
    if (start == avg.size()) start = 0;

    std::optional<TrafficTrajectory> analytic;
    if (!avg.empty() && avg[start].backlog > 0.0) {
        if (std::holds_alternative<Schoute>(est)) {
            analytic = schoute_traffic_from(avg[start].real_len, avg[start].backlog, 1e-9);
        } else if (const auto* ae2 = std::get_if<Ae2>(&est)) {
            Ae2TrafficOptions options;
            options.b = ae2->b;
            options.start_index = static_cast<std::int64_t>(start);
            analytic = ae2_traffic_from(avg[start].virtual_len, avg[start].backlog, options);
        }
    }

    out << "frame_index,active_runs,slot_offset,mean_backlog,mean_estimate,mean_K,mean_B,mean_real_len,"
           "mean_virtual_len,analytic_backlog,analytic_estimate,rel_err_x1000\n";
    for (std::size_t i = 0; i < avg.size(); ++i) {
        const auto& a = avg[i];
        std::optional<double> an_backlog, an_estimate, rel;
        if (analytic && i >= start) {
            const auto j = i - start;
            if (j < analytic->backlog.size()) an_backlog = analytic->backlog[j];
            if (j + 1 < analytic->virtual_len.size()) {
                an_estimate = analytic->virtual_len[j + 1];
                if (a.estimate > 0.0) rel = (a.estimate - *an_estimate) / a.estimate * 1000.0;
            }
        }
        out << a.frame_index << ',' << a.active_runs << ',' << format_real(a.slot_offset) << ','
            << format_real(a.backlog) << ',' << format_real(a.estimate) << ',' << format_real(a.traffic) << ','
            << format_real(a.real_ratio) << ',' << format_real(a.real_len) << ',' << format_real(a.virtual_len)
            << ',' << cell(an_backlog) << ',' << cell(an_estimate) << ',' << cell(rel) << '\n';
    }
    return {};
}

std::vector<double> default_traffic_grid() {
    std::vector<double> grid;
    for (int i = 0; i <= 400; ++i) grid.push_back(std::pow(10.0, 4.0 * i / 400.0));
    return grid;
}

double mean_ktrace_efficiency(double low, double high, int points) {
    if (!(low > 0.0) || !(high > low) || points < 1) throw std::invalid_argument("bad traffic window");
    double sum = 0.0;
    for (int i = 0; i < points; ++i) {
        const double k = low * std::pow(high / low, static_cast<double>(i) / points);
        sum += schoute_traffic_recursion(k).efficiency;
    }
    return sum / points;
}

void run_ktrace(const ExperimentSpec& spec, std::ostream& out) {
    const auto grid = spec.k_list.empty() ? default_traffic_grid() : spec.k_list;
    out << "K,efficiency,frames\n";
    for (double k : grid) {
        const auto t = schoute_traffic_recursion(k);
        out << format_real(k) << ',' << format_real(t.efficiency) << ',' << t.trajectory.real_len.size() << '\n';
    }
}

CommandOutcome run_search(const ExperimentSpec& spec, std::ostream& out) {
    require_tags(spec);
    SearchSpace space;
    space.length = spec.search_length;
    SearchOptions options;
    options.tag_grid = spec.n_list;
    options.runs_per_point = spec.runs;
    options.seed = spec.seed;
    options.restarts = spec.search_restarts;
    options.max_sweeps = spec.search_sweeps;
    options.r0 = first_frame_for(spec, 1);
    options.threads = spec.threads;

    const auto started = std::chrono::steady_clock::now();
    const auto report = h_sequence_search(space, options);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

    auto score_json = [&](const SequenceScore& s) {
        nlohmann::json per_n = nlohmann::json::array();
        for (std::size_t k = 0; k < options.tag_grid.size(); ++k) {
            per_n.push_back({{"n", options.tag_grid[k]},
                             {"efficiency", s.efficiencies[k]},
                             {"ci_half_width", s.ci_half_widths[k]}});
        }
        return nlohmann::json{{"multipliers", s.multipliers},
                              {"tail", s.tail},
                              {"min_efficiency", s.min_efficiency},
                              {"ci_at_min", s.ci_at_min},
                              {"per_n", per_n}};
    };

    nlohmann::json j;
    j["command"] = "search";
    j["seed"] = options.seed;
    j["runs_per_point"] = options.runs_per_point;
    j["r0"] = options.r0;
    j["n_grid"] = options.tag_grid;
    j["space"] = {{"low", space.low}, {"high", space.high}, {"step", space.step},
                  {"length", space.length}, {"tail", space.tail}};
    j["restarts"] = options.restarts;
    j["max_sweeps"] = options.max_sweeps;
    j["evaluations"] = report.evaluations;
    j["baseline"] = score_json(report.baseline);
    j["best"] = score_json(report.best);
    j["best_minus_baseline"] = report.best.min_efficiency - report.baseline.min_efficiency;
    if (spec.timing) j["wall_time_s"] = wall;
    out << j.dump(2) << '\n';
    return {};
}

CommandOutcome run_command(const ExperimentSpec& spec, std::ostream& out) {
    if (spec.command == "table1") {
        write_table1(out);
        return {};
    }
    if (spec.command == "sweep") return run_sweep(spec, out);
    if (spec.command == "trajectory") return run_trajectory(spec, out);
    if (spec.command == "ktrace") {
        run_ktrace(spec, out);
        return {};
    }
    if (spec.command == "search") return run_search(spec, out);
    throw std::invalid_argument("unknown command '" + spec.command + "'");
}

}  // namespace dfalab
