#pragma once

#include <complex>
#include <cstdint>
#include <json.hpp>
#include <string>
#include <vector>

#include "kgspde/symbols.hpp"

namespace kg::cli {

enum class Command { Simulate, SampleGibbs, InvarianceTest, NrlSweep, UrlSweep, WickCauchy, VerifyBounds, EnergyProbe };

std::string to_string(Command c);

/// Everything a run needs. Defaults are the documented ones (see README).
struct RunConfig {
    Command command = Command::Simulate;
    ModelParams params;

    // numerics
    double dt = 1e-3;
    int steps = 0;              ///< 0: horizon / dt
    int record_stride = 10;
    double sigma = -1.0;        ///< Wick constant; < 0 means wick_variance(N)
    double regularity = 0.9;    ///< Sobolev index of the solution space
    double error_norm = 0.0;    ///< H^s index of deterministic sweep errors
    double theta = 1.0;
    double delta = 0.1;         ///< H^{-delta} index of stochastic sweep errors
    int wick_grid = 128;

    // Monte Carlo
    int count = 100;
    std::uint64_t seed = 1;
    std::uint32_t trajectory = 0;

    // sweeps
    std::vector<double> values;  ///< eps or alpha2; empty means 2^{-1} .. 2^{-7}
    bool deterministic = true;
    bool nonlinear = true;
    std::vector<int> n_list{2, 4, 8, 16};
    int wick_m = 1;
    int wick_n = 1;
    double wick_delta = 0.5;
    std::vector<std::complex<double>> alpha_grid{{1, 1}, {2, 1}, {1, 3}};
    std::vector<double> eps_grid;  ///< empty means 2^0 .. 2^{-6}

    // io
    std::string output_dir = "kgspde-out";
    std::vector<std::string> formats{"csv", "json"};

    int total_steps() const;
    std::vector<double> sweep_values() const;
    std::vector<double> energy_eps() const;
};

nlohmann::json to_json(const RunConfig& c);

struct ParseResult {
    RunConfig config;
    std::vector<std::string> violations;  ///< every problem found, empty if valid
    std::string help;                     ///< set when --help was requested
    bool ok() const { return violations.empty(); }
};

/// Strict parse: unknown keys, wrong types and out-of-range values are all
/// collected rather than stopping at the first.
ParseResult parse_config(const nlohmann::json& j);

/// Parses argv: --config FILE, --command NAME, --set key.path=JSON (repeatable),
/// --output-dir DIR, --seed N. Flags override file values. The environment
/// variable KGSPDE_OUTPUT_DIR overrides io.output_dir when no flag is given.
ParseResult parse_args(int argc, char** argv);

enum ExitCode : int { kOk = 0, kValidation = 2, kNumerical = 3, kIo = 4 };

/// Executes the command, writes outputs atomically under output_dir and
/// always writes manifest.json. Returns the exit code.
int run(const RunConfig& config);

}  // namespace kg::cli
