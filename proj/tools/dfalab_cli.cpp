// dfalab: experiment runner for Dynamic Frame Aloha backlog estimation.
//
// Exit status: 0 success, 1 runtime failure, 2 usage error, 3 some run hit
// the frame cap without identifying every tag.

#include <CLI11.hpp>

#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

#include "dfalab/estimators.hpp"
#include "dfalab/experiments.hpp"

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;
constexpr int kExitNonTerminated = 3;

struct Flags {
    std::string config;
    std::uint64_t seed = 0;
    std::int64_t runs = 0;
    std::string out;
    std::vector<std::string> estimators;
    std::string n_list;
    std::string k_list;
    std::string r0;
    double b = 2.0;
    unsigned threads = 0;
    std::int64_t length = 0;
    std::int64_t restarts = 0;
    std::int64_t sweeps = 0;
    bool timing = false;
};

struct Registered {
    CLI::Option* seed;
    CLI::Option* runs;
    CLI::Option* out;
    CLI::Option* estimator;
    CLI::Option* n_list;
    CLI::Option* k_list;
    CLI::Option* r0;
    CLI::Option* b;
    CLI::Option* threads;
    CLI::Option* length;
    CLI::Option* restarts;
    CLI::Option* sweeps;
    CLI::Option* timing;
};

template <typename T>
std::vector<T> parse_list(const std::string& text, const char* what) {
    std::vector<T> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        std::size_t used = 0;
        T value{};
        try {
            if constexpr (std::is_integral_v<T>) value = static_cast<T>(std::stoll(item, &used));
            else value = static_cast<T>(std::stod(item, &used));
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != item.size()) throw std::invalid_argument(std::string("bad ") + what + " entry '" + item + "'");
        out.push_back(value);
    }
    if (out.empty()) throw std::invalid_argument(std::string(what) + " must not be empty");
    return out;
}

Registered add_common(CLI::App& sub, Flags& f) {
    Registered r{};
    sub.add_option("--config", f.config, "JSON config; flags override its fields")->check(CLI::ExistingFile);
    r.seed = sub.add_option("--seed", f.seed, "master seed");
    r.runs = sub.add_option("--runs", f.runs, "runs per point");
    r.out = sub.add_option("--out", f.out, "output file (default stdout)");
    r.estimator = sub.add_option("--estimator", f.estimators, "estimator spec, repeatable");
    r.n_list = sub.add_option("--n-list", f.n_list, "comma-separated tag counts");
    r.k_list = sub.add_option("--k-list", f.k_list, "comma-separated initial traffics (ktrace)");
    r.r0 = sub.add_option("--r0", f.r0, "initial frame length, or N to match the population");
    r.b = sub.add_option("--b", f.b, "AE2 ramp exponent for a bare 'ae2'");
    r.threads = sub.add_option("--threads", f.threads, "worker threads (0: hardware)");
    r.length = sub.add_option("--length", f.length, "search: multiplier sequence length");
    r.restarts = sub.add_option("--restarts", f.restarts, "search: random restarts");
    r.sweeps = sub.add_option("--sweeps", f.sweeps, "search: coordinate sweeps per start");
    r.timing = sub.add_flag("--timing", f.timing, "search: include wall time in the report");
    return r;
}

dfalab::ExperimentSpec build_spec(const std::string& command, const Flags& f, const Registered& r) {
    dfalab::ExperimentSpec spec;
    spec.command = command;
    if (command == "search") spec.n_list = dfalab::default_search_grid();
    if (!f.config.empty()) {
        std::ifstream in(f.config);
        if (!in) throw std::invalid_argument("cannot open config " + f.config);
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::exception& e) {
            throw std::invalid_argument("config " + f.config + ": " + e.what());
        }
        try {
            spec = dfalab::spec_from_json(j, spec);
        } catch (const nlohmann::json::exception& e) {
            throw std::invalid_argument("config " + f.config + ": " + e.what());
        }
        spec.command = command;
    }
    if (r.seed->count()) spec.seed = f.seed;
    if (r.runs->count()) spec.runs = f.runs;
    if (r.out->count()) spec.out = f.out;
    if (r.estimator->count()) spec.estimators = f.estimators;
    if (r.n_list->count()) spec.n_list = parse_list<std::int64_t>(f.n_list, "--n-list");
    if (r.k_list->count()) spec.k_list = parse_list<double>(f.k_list, "--k-list");
    if (r.r0->count()) {
        if (f.r0 == "N") {
            spec.r0_equals_n = true;
        } else {
            spec.r0 = parse_list<std::int64_t>(f.r0, "--r0").front();
            spec.r0_equals_n = false;
        }
    }
    if (r.b->count()) spec.b = f.b;
    if (r.threads->count()) spec.threads = f.threads;
    if (r.length->count()) spec.search_length = f.length;
    if (r.restarts->count()) spec.search_restarts = f.restarts;
    if (r.sweeps->count()) spec.search_sweeps = f.sweeps;
    if (r.timing->count()) spec.timing = f.timing;
    return spec;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Dynamic Frame Aloha estimation laboratory"};
    app.require_subcommand(1);

    Flags flags;
    std::vector<std::pair<CLI::App*, Registered>> subs;
    for (const auto& [name, help] : std::vector<std::pair<std::string, std::string>>{
             {"table1", "asymptotic efficiency by phase for K_u in one multiplier period"},
             {"sweep", "efficiency versus N per estimator"},
             {"trajectory", "mean per-frame trajectory with its analytic counterpart"},
             {"ktrace", "Schoute efficiency versus initial traffic K"},
             {"search", "multiplier sequence search for the optimized estimator"}}) {
        auto* sub = app.add_subcommand(name, help);
        subs.emplace_back(sub, add_common(*sub, flags));
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    CLI::App* chosen = nullptr;
    const Registered* registered = nullptr;
    for (const auto& [sub, reg] : subs) {
        if (sub->parsed()) {
            chosen = sub;
            registered = &reg;
        }
    }

    dfalab::ExperimentSpec spec;
    try {
        spec = build_spec(chosen->get_name(), flags, *registered);
        for (const auto& name : spec.estimators) dfalab::parse_estimator(name, spec.b);
        if (spec.n_list.empty()) throw std::invalid_argument("N list must not be empty");
    } catch (const std::invalid_argument& e) {
        std::cerr << "dfalab: " << e.what() << '\n';
        return kExitUsage;
    }

    try {
        dfalab::CommandOutcome outcome;
        if (spec.out.empty()) {
            outcome = dfalab::run_command(spec, std::cout);
        } else {
            std::ostringstream buffer;
            outcome = dfalab::run_command(spec, buffer);
            std::ofstream file(spec.out, std::ios::binary);
            if (!(file << buffer.str())) throw std::runtime_error("cannot write " + spec.out);
        }
        if (!outcome.all_terminated) {
            std::cerr << "dfalab: some runs hit the frame cap before identifying every tag\n";
            return kExitNonTerminated;
        }
    } catch (const std::invalid_argument& e) {
        std::cerr << "dfalab: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "dfalab: " << e.what() << '\n';
        return kExitRuntime;
    }
    return 0;
}
