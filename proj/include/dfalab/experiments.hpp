#pragma once

// Experiment drivers behind the `dfalab` command line: each command writes a
// CSV table (or a JSON report for `search`) to a stream.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

namespace dfalab {

/// Default population grid for sweeps.
std::vector<std::int64_t> default_tag_grid();

/// Default grid for the multiplier search: 10 .. 1000, where the optimized
/// estimator has its efficiency minimum.
std::vector<std::int64_t> default_search_grid();

struct ExperimentSpec {
    std::string command;
    std::vector<std::string> estimators = {"schoute"};
    std::vector<std::int64_t> n_list = default_tag_grid();
    std::vector<double> k_list;  // ktrace; empty selects the default log grid
    std::int64_t r0 = 1;
    bool r0_equals_n = false;  // `--r0 N`
    double b = 2.0;
    std::int64_t runs = 2000;
    std::uint64_t seed = 1;
    std::string out;  // empty: stdout
    unsigned threads = 0;

    // search only
    std::int64_t search_length = 12;
    std::int64_t search_restarts = 1;
    std::int64_t search_sweeps = 4;
    bool timing = false;
};

/// Reads fields present in `config` over `base`; unknown keys are rejected.
ExperimentSpec spec_from_json(const nlohmann::json& config, ExperimentSpec base = {});
nlohmann::json spec_to_json(const ExperimentSpec& spec);

/// %.12g, or "nan"/"inf" spelled out.
std::string format_real(double value);

struct CommandOutcome {
    bool all_terminated = true;
};

/// K_u = 20, 25, 30, 35, 40, 45, 47.8 through phase_efficiency.
/// Columns: K_u,A,B,C,efficiency
void write_table1(std::ostream& out);

/// Columns: N,estimator,r0,method,efficiency,ci_half_width,runs,seed,mean_slots,efficiency_of_mean
/// Memoryless estimators with N <= 30 use the exact expected length
/// (method=exact, runs=0); everything else is simulated (method=sim).
CommandOutcome run_sweep(const ExperimentSpec& spec, std::ostream& out);

/// Mean trajectory for the first estimator and first N.
/// Columns: frame_index,active_runs,slot_offset,mean_backlog,mean_estimate,mean_K,mean_B,
///          mean_real_len,mean_virtual_len,analytic_backlog,analytic_estimate,rel_err_x1000
CommandOutcome run_trajectory(const ExperimentSpec& spec, std::ostream& out);

/// Schoute efficiency versus initial traffic. Columns: K,efficiency,frames
void run_ktrace(const ExperimentSpec& spec, std::ostream& out);

/// Default ktrace grid: 401 log-spaced points on [1, 10^4].
std::vector<double> default_traffic_grid();

/// Mean Schoute efficiency over `points` log-spaced traffics in [low, high).
double mean_ktrace_efficiency(double low, double high, int points = 400);

/// JSON report of the multiplier-sequence search.
CommandOutcome run_search(const ExperimentSpec& spec, std::ostream& out);

/// Dispatches on spec.command. Throws std::invalid_argument for an unknown
/// command or bad estimator name.
CommandOutcome run_command(const ExperimentSpec& spec, std::ostream& out);

}  // namespace dfalab
