#include "cli.hpp"

#include <CLI11.hpp>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include "kgspde/experiments.hpp"
#include "kgspde/gibbs.hpp"
#include "kgspde/nonlinear.hpp"

namespace kg::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const std::map<std::string, Command> kCommands = {
    {"simulate", Command::Simulate},         {"sample-gibbs", Command::SampleGibbs},
    {"invariance-test", Command::InvarianceTest}, {"nrl-sweep", Command::NrlSweep},
    {"url-sweep", Command::UrlSweep},        {"wick-cauchy", Command::WickCauchy},
    {"verify-bounds", Command::VerifyBounds}, {"energy-probe", Command::EnergyProbe},
};

json cplx_json(std::complex<double> z) { return json::array({z.real(), z.imag()}); }

}  // namespace

std::string to_string(Command c) {
    for (const auto& [name, cmd] : kCommands)
        if (cmd == c) return name;
    return "?";
}

int RunConfig::total_steps() const { return steps > 0 ? steps : static_cast<int>(std::lround(params.horizon / dt)); }

std::vector<double> RunConfig::sweep_values() const { return values.empty() ? dyadic(1, 7) : values; }

std::vector<double> RunConfig::energy_eps() const { return eps_grid.empty() ? dyadic(0, 6) : eps_grid; }

json to_json(const RunConfig& c) {
    json alphas = json::array();
    for (const auto& a : c.alpha_grid) alphas.push_back(cplx_json(a));
    return {
        {"command", to_string(c.command)},
        {"params",
         {{"eps", c.params.eps},
          {"alpha", cplx_json(c.params.alpha)},
          {"degree", c.params.degree},
          {"n_max", c.params.n_max},
          {"horizon", c.params.horizon}}},
        {"numerics",
         {{"dt", c.dt},
          {"steps", c.steps},
          {"record_stride", c.record_stride},
          {"sigma", c.sigma},
          {"regularity", c.regularity},
          {"error_norm", c.error_norm},
          {"theta", c.theta},
          {"delta", c.delta},
          {"wick_grid", c.wick_grid}}},
        {"mc", {{"count", c.count}, {"seed", c.seed}, {"trajectory", c.trajectory}}},
        {"sweep",
         {{"values", c.values},
          {"deterministic", c.deterministic},
          {"nonlinear", c.nonlinear},
          {"n_list", c.n_list},
          {"wick_m", c.wick_m},
          {"wick_n", c.wick_n},
          {"wick_delta", c.wick_delta},
          {"alpha_grid", alphas},
          {"eps_grid", c.eps_grid}}},
        {"io", {{"output_dir", c.output_dir}, {"formats", c.formats}}},
    };
}

namespace {

// Reads one field, recording a violation instead of throwing.
template <class T>
void read(const json& j, const char* section, const char* key, T& out, std::vector<std::string>& v) {
    const json* node = &j;
    if (section) {
        if (!j.contains(section)) return;
        node = &j.at(section);
    }
    if (!node->contains(key)) return;
    try {
        out = node->at(key).get<T>();
    } catch (const json::exception&) {
        v.push_back(std::string(section ? section : "") + (section ? "." : "") + key + ": wrong type (got " +
                    node->at(key).dump() + ")");
    }
}

void read_cplx(const json& j, const char* section, const char* key, std::complex<double>& out,
               std::vector<std::string>& v) {
    std::vector<double> pair{out.real(), out.imag()};
    const std::size_t before = v.size();
    if (j.contains(section) && j.at(section).contains(key) && j.at(section).at(key).is_number()) {
        read(j, section, key, pair[0], v);
        pair[1] = 0.0;
    } else {
        read(j, section, key, pair, v);
    }
    if (v.size() != before) return;
    if (pair.size() != 2) {
        v.push_back(std::string(section) + "." + key + ": expected [re, im]");
        return;
    }
    out = {pair[0], pair[1]};
}

void check_keys(const json& user, const json& schema, const std::string& prefix, std::vector<std::string>& v) {
    if (!user.is_object()) {
        v.push_back((prefix.empty() ? std::string("config") : prefix) + ": expected an object");
        return;
    }
    for (const auto& [key, val] : user.items()) {
        const std::string path = prefix.empty() ? key : prefix + "." + key;
        if (!schema.contains(key)) {
            v.push_back("unknown key '" + path + "'");
            continue;
        }
        if (schema.at(key).is_object()) check_keys(val, schema.at(key), path, v);
    }
}

bool strictly_decreasing_positive(const std::vector<double>& x) {
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0)) return false;
        if (i > 0 && !(x[i] < x[i - 1])) return false;
    }
    return true;
}

}  // namespace

ParseResult parse_config(const json& j) {
    ParseResult r;
    auto& c = r.config;
    auto& v = r.violations;
    check_keys(j, to_json(RunConfig{}), "", v);
    if (!j.is_object()) return r;

    if (j.contains("command")) {
        if (!j.at("command").is_string()) {
            v.push_back("command: expected a string");
        } else if (auto it = kCommands.find(j.at("command").get<std::string>()); it == kCommands.end()) {
            v.push_back("command: unknown command '" + j.at("command").get<std::string>() + "'");
        } else {
            c.command = it->second;
        }
    }
    read(j, "params", "eps", c.params.eps, v);
    read_cplx(j, "params", "alpha", c.params.alpha, v);
    read(j, "params", "degree", c.params.degree, v);
    read(j, "params", "n_max", c.params.n_max, v);
    read(j, "params", "horizon", c.params.horizon, v);
    read(j, "numerics", "dt", c.dt, v);
    read(j, "numerics", "steps", c.steps, v);
    read(j, "numerics", "record_stride", c.record_stride, v);
    read(j, "numerics", "sigma", c.sigma, v);
    read(j, "numerics", "regularity", c.regularity, v);
    read(j, "numerics", "error_norm", c.error_norm, v);
    read(j, "numerics", "theta", c.theta, v);
    read(j, "numerics", "delta", c.delta, v);
    read(j, "numerics", "wick_grid", c.wick_grid, v);
    read(j, "mc", "count", c.count, v);
    read(j, "mc", "seed", c.seed, v);
    read(j, "mc", "trajectory", c.trajectory, v);
    read(j, "sweep", "values", c.values, v);
    read(j, "sweep", "deterministic", c.deterministic, v);
    read(j, "sweep", "nonlinear", c.nonlinear, v);
    read(j, "sweep", "n_list", c.n_list, v);
    read(j, "sweep", "wick_m", c.wick_m, v);
    read(j, "sweep", "wick_n", c.wick_n, v);
    read(j, "sweep", "wick_delta", c.wick_delta, v);
    read(j, "sweep", "eps_grid", c.eps_grid, v);
    if (j.contains("sweep") && j.at("sweep").contains("alpha_grid")) {
        std::vector<std::vector<double>> raw;
        const std::size_t before = v.size();
        read(j, "sweep", "alpha_grid", raw, v);
        if (v.size() == before) {
            c.alpha_grid.clear();
            for (const auto& p : raw) {
                if (p.size() != 2) {
                    v.push_back("sweep.alpha_grid: every entry must be [re, im]");
                    break;
                }
                c.alpha_grid.emplace_back(p[0], p[1]);
            }
        }
    }
    read(j, "io", "output_dir", c.output_dir, v);
    read(j, "io", "formats", c.formats, v);

    // Value checks; type errors above already left the defaults in place.
    for (const auto& m : c.params.violations()) v.push_back("params: " + m);
    if (!(c.dt > 0.0) || !std::isfinite(c.dt)) v.push_back("numerics.dt must be > 0");
    if (c.steps < 0) v.push_back("numerics.steps must be >= 0 (0 derives it from the horizon)");
    if (c.steps == 0 && c.dt > 0.0 && c.params.horizon > 0.0) {
        const double n = c.params.horizon / c.dt;
        if (std::abs(n - std::round(n)) > 1e-9 * n || std::round(n) < 1)
            v.push_back("params.horizon must be a positive multiple of numerics.dt");
    }
    if (c.record_stride < 1) v.push_back("numerics.record_stride must be >= 1");
    if (c.delta < 0.0) v.push_back("numerics.delta must be >= 0");
    if (c.count < 1) v.push_back("mc.count must be >= 1");
    for (const auto& f : c.formats)
        if (f != "csv" && f != "json" && f != "binary") v.push_back("io.formats: unknown format '" + f + "'");
    if (c.output_dir.empty()) v.push_back("io.output_dir must not be empty");

    switch (c.command) {
        case Command::Simulate:
            if (c.params.alpha.imag() == 0.0)
                v.push_back("params.alpha: Im(alpha) = 0 is not allowed for simulate (the mild representation "
                            "needs Im(alpha) != 0; use url-sweep for the real-damping target)");
            if (c.dt > 0.0 && c.total_steps() % c.record_stride != 0)
                v.push_back("numerics.record_stride must divide the number of steps");
            break;
        case Command::InvarianceTest:
            if (c.count < 2) v.push_back("mc.count must be >= 2 for invariance-test");
            break;
        case Command::NrlSweep:
        case Command::UrlSweep: {
            const auto vals = c.sweep_values();
            if (vals.size() < 2) v.push_back("sweep.values: need at least two values to fit a rate");
            if (!strictly_decreasing_positive(vals)) v.push_back("sweep.values must be positive and strictly decreasing");
            if (c.command == Command::NrlSweep)
                for (double e : vals)
                    if (e > 1.0) v.push_back("sweep.values: eps must lie in (0, 1]");
            if (c.command == Command::UrlSweep && c.params.eps != 1.0)
                v.push_back("params.eps must be 1 for url-sweep");
            break;
        }
        case Command::WickCauchy: {
            if (c.n_list.size() < 2) v.push_back("sweep.n_list: need at least two truncations");
            for (std::size_t i = 1; i < c.n_list.size(); ++i)
                if (c.n_list[i] <= c.n_list[i - 1]) v.push_back("sweep.n_list must be strictly increasing");
            if (c.wick_m < 0 || c.wick_n < 0) v.push_back("sweep.wick_m and sweep.wick_n must be >= 0");
            if (!c.n_list.empty() && c.wick_m >= 0 && c.wick_n >= 0 &&
                c.wick_grid < FrequencyLattice::alias_free_grid(c.n_list.back(), c.wick_m + c.wick_n))
                v.push_back("numerics.wick_grid is too coarse for the largest truncation");
            if (c.count < 2) v.push_back("mc.count must be >= 2 for wick-cauchy");
            break;
        }
        case Command::VerifyBounds:
        case Command::EnergyProbe:
            if (c.alpha_grid.empty()) v.push_back("sweep.alpha_grid must not be empty");
            for (const auto& a : c.alpha_grid)
                if (!(a.real() > 0.0)) v.push_back("sweep.alpha_grid: Re(alpha) must be > 0");
            if (c.command == Command::EnergyProbe) {
                if (c.eps_grid.empty() && false) break;
                for (double e : c.energy_eps())
                    if (!(e > 0.0 && e <= 1.0)) v.push_back("sweep.eps_grid: eps must lie in (0, 1]");
            }
            break;
        case Command::SampleGibbs:
            break;
    }
    return r;
}

namespace {

// Sets a dotted key path inside a json object, creating sections as needed.
void set_path(json& j, const std::string& path, const json& value) {
    json* node = &j;
    std::size_t start = 0;
    for (;;) {
        const std::size_t dot = path.find('.', start);
        const std::string key = path.substr(start, dot - start);
        if (dot == std::string::npos) {
            (*node)[key] = value;
            return;
        }
        node = &(*node)[key];
        start = dot + 1;
    }
}

}  // namespace

ParseResult parse_args(int argc, char** argv) {
    CLI::App app{"Spectral Galerkin toolkit for the damped stochastic Klein-Gordon equation"};
    std::string config_path, command, output_dir;
    std::vector<std::string> sets;
    std::uint64_t seed = 0;
    app.add_option("--config", config_path, "JSON config file");
    app.add_option("--command", command, "simulate | sample-gibbs | invariance-test | nrl-sweep | url-sweep | "
                                         "wick-cauchy | verify-bounds | energy-probe");
    app.add_option("--set", sets, "override, e.g. --set params.eps=0.25 --set params.alpha=[1,2]");
    auto* dir_opt = app.add_option("--output-dir", output_dir, "output directory");
    auto* seed_opt = app.add_option("--seed", seed, "Monte-Carlo seed");
    ParseResult bad;
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        bad.help = app.help();
        return bad;
    } catch (const CLI::ParseError& e) {
        bad.violations.push_back(std::string("command line: ") + e.what());
        return bad;
    }

    json j = json::object();
    if (!config_path.empty()) {
        std::ifstream in(config_path);
        if (!in) {
            bad.violations.push_back("cannot read config file '" + config_path + "'");
            return bad;
        }
        try {
            j = json::parse(in);
        } catch (const json::parse_error& e) {
            bad.violations.push_back("config file '" + config_path + "' is not valid JSON: " + e.what());
            return bad;
        }
    }
    if (!command.empty()) j["command"] = command;
    for (const auto& s : sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos || eq == 0) {
            bad.violations.push_back("--set expects key.path=value, got '" + s + "'");
            continue;
        }
        const std::string raw = s.substr(eq + 1);
        json value = json::parse(raw, nullptr, false);
        if (value.is_discarded()) value = raw;  // bare strings
        set_path(j, s.substr(0, eq), value);
    }
    if (*dir_opt) {
        j["io"]["output_dir"] = output_dir;
    } else if (const char* env = std::getenv("KGSPDE_OUTPUT_DIR"); env && *env) {
        j["io"]["output_dir"] = env;
    }
    if (*seed_opt) j["mc"]["seed"] = seed;
    if (!bad.violations.empty()) return bad;
    return parse_config(j);
}

// ---------------------------------------------------------------------------
// Execution

namespace {

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class Outputs {
public:
    explicit Outputs(fs::path dir) : dir_(std::move(dir)) {
        std::error_code ec;
        fs::create_directories(dir_, ec);
        if (ec) throw IoError("cannot create output directory '" + dir_.string() + "': " + ec.message());
    }

    // Writes via a temporary file and a rename so readers never see partial files.
    void write(const std::string& name, const std::string& content) {
        const fs::path target = dir_ / name;
        const fs::path tmp = dir_ / ("." + name + ".tmp");
        {
            std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
            if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
            out << content;
            out.flush();
            if (!out) throw IoError("write failed for '" + tmp.string() + "'");
        }
        std::error_code ec;
        fs::rename(tmp, target, ec);
        if (ec) throw IoError("cannot rename '" + tmp.string() + "' to '" + target.string() + "': " + ec.message());
        if (name != "manifest.json") written_.push_back(name);
    }

    const std::vector<std::string>& written() const { return written_; }

private:
    fs::path dir_;
    std::vector<std::string> written_;
};

bool wants(const RunConfig& c, const char* fmt) {
    return std::find(c.formats.begin(), c.formats.end(), fmt) != c.formats.end();
}

std::ostringstream csv_stream() {
    std::ostringstream os;
    os << std::setprecision(17);
    return os;
}

json rate_json(const RateReport& r) {
    return {{"parameter", r.parameter},   {"values", r.param_values},
            {"errors", r.errors},         {"standard_errors", r.standard_errors},
            {"survivors", r.survivors},   {"slope", r.slope},
            {"slope_se", r.slope_se},     {"slope_ci3", {r.slope - 3 * r.slope_se, r.slope + 3 * r.slope_se}},
            {"intercept", r.intercept},   {"r_squared", r.r_squared}};
}

std::string rate_csv(const RateReport& r) {
    auto os = csv_stream();
    os << r.parameter << ",error,se,survivors\n";
    for (std::size_t i = 0; i < r.errors.size(); ++i)
        os << r.param_values[i] << ',' << r.errors[i] << ',' << r.standard_errors[i] << ','
           << (r.survivors.empty() ? -1 : r.survivors[i]) << '\n';
    return os.str();
}

NoiseStream stream_of(const RunConfig& c) { return NoiseStream(c.seed, c.trajectory); }

struct Outcome {
    json results = json::object();
    int code = kOk;
    std::string failure;
};

Outcome simulate(const RunConfig& c, Outputs& out) {
    const LatticePtr lat = make_lattice(c.params.n_max);
    SpdeRun run;
    run.params = c.params;
    run.stream = stream_of(c);
    run.initial = sample_mu(lat, run.stream);
    run.dt = c.dt;
    run.steps = c.total_steps();
    run.record_stride = c.record_stride;
    run.sigma = c.sigma;
    const SpdeResult res = run_spde(run);
    if (wants(c, "csv")) {
        std::ostringstream os;
        write_trajectory_csv(os, res.states, c.dt * c.record_stride, run.stream);
        out.write("trajectory.csv", os.str());
    }
    if (wants(c, "binary")) {
        std::ostringstream os;
        write_trajectory_binary(os, res.states, c.dt * c.record_stride, run.stream);
        out.write("trajectory.bin", os.str());
    }
    Outcome o;
    o.results = {{"blew_up", res.blew_up},
                 {"completed_steps", res.completed_steps},
                 {"recorded_samples", res.states.size()},
                 {"sigma", run.renormalization()}};
    if (res.blew_up) {
        o.code = kNumerical;
        o.failure = "solution exceeded the blow-up threshold after " + std::to_string(res.completed_steps) + " steps";
    }
    return o;
}

Outcome sample_gibbs(const RunConfig& c, Outputs& out) {
    const GibbsEnsemble ens = sample_rho_n(c.params, c.count, stream_of(c), c.sigma);
    std::vector<double> zero;
    if (wants(c, "csv")) {
        auto os = csv_stream();
        os << "sample,log_weight,weight,psi0_sq,energy\n";
        for (std::size_t i = 0; i < ens.samples.size(); ++i) {
            const auto& s = ens.samples[i];
            const double z0 = std::norm(s.state.psi.at({0, 0}));
            os << i << ',' << s.log_weight << ',' << ens.weights[i] << ',' << z0 << ',' << -s.log_weight << '\n';
        }
        out.write("ensemble.csv", os.str());
    }
    for (const auto& s : ens.samples) zero.push_back(std::norm(s.state.psi.at({0, 0})));
    const auto [m, se] = ens.mean(zero);
    Outcome o;
    o.results = {{"ess", ens.ess},
                 {"low_ess_warning", ens.low_ess},
                 {"log_mean_weight", ens.log_mean_weight},
                 {"sigma", ens.sigma},
                 {"psi0_sq_mean", m},
                 {"psi0_sq_se", se}};
    return o;
}

Outcome invariance(const RunConfig& c, Outputs& out) {
    InvarianceSpec s;
    s.params = c.params;
    s.dt = c.dt;
    s.count = c.count;
    s.stream = stream_of(c);
    s.sigma = c.sigma;
    s.nonlinear = c.nonlinear;
    const InvarianceReport r = invariance_test(s);
    if (wants(c, "csv")) {
        auto os = csv_stream();
        os << "observable,mean0,mean_t,se,z\n";
        for (const auto& ob : r.observables)
            os << '"' << ob.name << "\"," << ob.mean0 << ',' << ob.mean_t << ',' << ob.se << ',' << ob.z << '\n';
        out.write("invariance.csv", os.str());
    }
    Outcome o;
    o.results = {{"ess", r.ess}, {"blown_up", r.blown_up}, {"max_abs_z", r.max_abs_z()}, {"pass", r.max_abs_z() < 3.0}};
    return o;
}

LinearSolveSpec sweep_fixture(const RunConfig& c) {
    LinearSolveSpec s = default_energy_fixtures(c.params.n_max, c.regularity, c.dt, c.total_steps())[1].spec;
    s.params.alpha = c.params.alpha;
    s.params.degree = c.params.degree;
    return s;
}

StochasticSweep stochastic_of(const RunConfig& c) {
    StochasticSweep s;
    s.params = c.params;
    s.values = c.sweep_values();
    s.dt = c.dt;
    s.count = c.count;
    s.stream = stream_of(c);
    s.delta = c.delta;
    s.nonlinear = c.nonlinear;
    s.sigma = c.sigma;
    return s;
}

Outcome sweep(const RunConfig& c, Outputs& out) {
    const bool nrl = c.command == Command::NrlSweep;
    RateReport r;
    if (c.deterministic) {
        r = nrl ? nrl_deterministic_sweep(sweep_fixture(c), c.sweep_values(), c.error_norm, c.theta)
                : url_deterministic_sweep(sweep_fixture(c), c.params.alpha.real(), c.sweep_values(), c.error_norm);
    } else {
        r = nrl ? nrl_stochastic_sweep(stochastic_of(c)) : url_stochastic_sweep(stochastic_of(c));
    }
    if (wants(c, "csv")) out.write(nrl ? "nrl_sweep.csv" : "url_sweep.csv", rate_csv(r));
    Outcome o;
    o.results = rate_json(r);
    o.results["mode"] = c.deterministic ? "deterministic" : "stochastic";
    return o;
}

Outcome wick(const RunConfig& c, Outputs& out) {
    WickCauchySpec w;
    w.n_list = c.n_list;
    w.m = c.wick_m;
    w.n = c.wick_n;
    w.grid = c.wick_grid;
    w.delta = c.wick_delta;
    w.count = c.count;
    w.stream = stream_of(c);
    const WickCauchyReport r = wick_cauchy_test(w);
    if (wants(c, "csv")) {
        auto os = csv_stream();
        os << "n_i,n_j,mean,se,l2_mean,l2_se,l2_exact\n";
        for (std::size_t p = 0; p < r.pairs.size(); ++p) {
            os << r.pairs[p].first << ',' << r.pairs[p].second << ',' << r.mean[p] << ',' << r.se[p] << ','
               << r.l2_mean[p] << ',' << r.l2_se[p] << ',';
            if (!r.l2_exact.empty()) os << r.l2_exact[p];
            os << '\n';
        }
        out.write("wick_cauchy.csv", os.str());
    }
    Outcome o;
    o.results = {{"spearman_rho", r.trend.rho}, {"p_decreasing", r.trend.p_less}, {"mean", r.mean}, {"se", r.se}};
    return o;
}

Outcome bounds(const RunConfig& c, Outputs& out) {
    const auto grid = logspace(1e-3, 1e3, 1000);
    auto os = csv_stream();
    os << "alpha_re,alpha_im,item,applicable,pass,worst_margin,argmin_s\n";
    json rows = json::array();
    bool all = true;
    for (const auto& a : c.alpha_grid) {
        const BoundProbeReport rep = probe_base_bounds(a, grid);
        for (const auto& it : rep.items) {
            os << a.real() << ',' << a.imag() << ',' << it.item << ',' << it.applicable << ',' << it.pass << ','
               << it.worst_margin << ',' << it.argmin_s << '\n';
            rows.push_back({{"alpha", cplx_json(a)},
                            {"item", it.item},
                            {"applicable", it.applicable},
                            {"pass", it.pass},
                            {"worst_margin", it.worst_margin},
                            {"argmin_s", it.argmin_s}});
        }
        all = all && rep.all_pass();
    }
    if (wants(c, "csv")) out.write("bounds.csv", os.str());
    Outcome o;
    o.results = {{"all_pass", all}, {"items", rows}, {"s_grid", {{"lo", 1e-3}, {"hi", 1e3}, {"points", 1000}}}};
    return o;
}

Outcome energy(const RunConfig& c, Outputs& out) {
    const auto fixtures = default_energy_fixtures(c.params.n_max, c.regularity, c.dt, c.total_steps());
    const EnergyProbeReport rep = energy_uniformity_probe(c.alpha_grid, c.energy_eps(), fixtures, c.regularity);
    auto os = csv_stream();
    os << "fixture,alpha_re,alpha_im,eps,constant\n";
    json rows = json::array();
    for (const auto& row : rep.rows) {
        for (std::size_t i = 0; i < row.eps.size(); ++i)
            os << row.fixture << ',' << row.alpha.real() << ',' << row.alpha.imag() << ',' << row.eps[i] << ','
               << row.constant[i] << '\n';
        rows.push_back({{"fixture", row.fixture},
                        {"alpha", cplx_json(row.alpha)},
                        {"spread", row.spread},
                        {"spearman_rho", row.trend.rho},
                        {"p_growth", row.trend.p_less}});
    }
    if (wants(c, "csv")) out.write("energy.csv", os.str());
    Outcome o;
    o.results = {{"max_constant", rep.max_constant}, {"max_spread", rep.max_spread}, {"rows", rows}};
    return o;
}

}  // namespace

int run(const RunConfig& config) {
    json manifest = {{"tool", "kgspde"}, {"version", "0.1.0"}, {"command", to_string(config.command)},
                     {"config", to_json(config)}};
    std::unique_ptr<Outputs> out;
    Outcome o;
    std::string kind;
    try {
        out = std::make_unique<Outputs>(config.output_dir);
        switch (config.command) {
            case Command::Simulate: o = simulate(config, *out); break;
            case Command::SampleGibbs: o = sample_gibbs(config, *out); break;
            case Command::InvarianceTest: o = invariance(config, *out); break;
            case Command::NrlSweep:
            case Command::UrlSweep: o = sweep(config, *out); break;
            case Command::WickCauchy: o = wick(config, *out); break;
            case Command::VerifyBounds: o = bounds(config, *out); break;
            case Command::EnergyProbe: o = energy(config, *out); break;
        }
        if (o.code == kNumerical) kind = "numerical";
        if (wants(config, "json")) out->write("report.json", o.results.dump(2) + "\n");
    } catch (const IoError& e) {
        o.code = kIo;
        o.failure = e.what();
        kind = "io";
    } catch (const NumericalError& e) {
        o.code = kNumerical;
        o.failure = e.what();
        kind = "numerical";
    } catch (const std::invalid_argument& e) {
        o.code = kValidation;
        o.failure = e.what();
        kind = "validation";
    }
    manifest["status"] = o.code == kOk ? "ok" : "failed";
    manifest["exit_code"] = o.code;
    manifest["results"] = o.results;
    if (o.code != kOk) manifest["error"] = {{"kind", kind}, {"message", o.failure}};
    manifest["outputs"] = out ? out->written() : std::vector<std::string>{};
    if (o.code != kOk) std::cerr << json{{"error", manifest["error"]}}.dump() << '\n';
    try {
        if (!out) {
            // The directory itself failed; try once more so the manifest lands if possible.
            out = std::make_unique<Outputs>(config.output_dir);
        }
        out->write("manifest.json", manifest.dump(2) + "\n");
    } catch (const IoError& e) {
        if (o.code == kOk) std::cerr << json{{"error", {{"kind", "io"}, {"message", e.what()}}}}.dump() << '\n';
        return kIo;
    }
    return o.code;
}

}  // namespace kg::cli
