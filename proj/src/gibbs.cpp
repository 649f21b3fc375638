#include "kgspde/gibbs.hpp"

#include <algorithm>
#include <limits>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace kg {

double interaction_energy(const SpectralField& psi, int n, double sigma, int grid) {
    if (n < 1) throw std::invalid_argument("interaction_energy: degree must be >= 1");
    const int nmax = psi.lattice().n_max();
    // The mean of a degree 2n+2 product is exact once M > (2n+2) N.
    const int need = std::max(FrequencyLattice::min_grid(nmax), (2 * n + 2) * nmax + 1);
    if (grid == 0) grid = FrequencyLattice::alias_free_grid(nmax, 2 * n + 2);
    if (grid < need)
        throw std::invalid_argument("interaction_energy: grid " + std::to_string(grid) + " aliases degree " +
                                    std::to_string(2 * n + 2) + " products (need >= " + std::to_string(need) + ")");
    const PhysicalGrid h = wick_power_grid(psi, n + 1, n + 1, sigma, grid);
    cplx acc = 0.0;
    for (const cplx& v : h.values) acc += v;
    const double area = 4.0 * std::numbers::pi * std::numbers::pi;
    const cplx integral = acc * (area / static_cast<double>(h.values.size()));
    if (std::abs(integral.imag()) > 1e-10 * std::max(1.0, std::abs(integral.real())))
        throw NumericalError("interaction_energy: non-real integral");
    return integral.real() / (2.0 * n + 2.0);
}

std::pair<double, double> GibbsEnsemble::mean(const std::vector<double>& values) const {
    if (values.size() != weights.size()) throw std::invalid_argument("GibbsEnsemble::mean: size mismatch");
    double m = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) m += weights[i] * values[i];
    double v = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) v += weights[i] * weights[i] * (values[i] - m) * (values[i] - m);
    return {m, std::sqrt(v)};
}

namespace {

void normalize(GibbsEnsemble& ens) {
    const std::size_t n = ens.samples.size();
    double top = -std::numeric_limits<double>::infinity();
    for (const auto& s : ens.samples) top = std::max(top, s.log_weight);
    ens.weights.resize(n);
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) sum += ens.weights[i] = std::exp(ens.samples[i].log_weight - top);
    double sq = 0.0;
    for (double& w : ens.weights) {
        w /= sum;
        sq += w * w;
    }
    ens.ess = 1.0 / sq;
    ens.log_mean_weight = top + std::log(sum / static_cast<double>(n));
    ens.low_ess = ens.ess < kMinEss;
}

}  // namespace

GibbsEnsemble sample_rho_n(const ModelParams& p, int count, const NoiseStream& stream, double sigma) {
    p.validate();
    if (count < 1) throw std::invalid_argument("sample_rho_n: count must be >= 1");
    GibbsEnsemble ens;
    ens.sigma = sigma < 0.0 ? wick_variance(p.n_max) : sigma;
    const LatticePtr lat = make_lattice(p.n_max);
    ens.samples.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        GibbsSample s;
        s.state = sample_mu(lat, stream.with_trajectory(stream.trajectory() + static_cast<std::uint32_t>(i)));
        s.log_weight = -interaction_energy(s.state.psi, p.degree, ens.sigma);
        if (!std::isfinite(s.log_weight)) throw NumericalError("sample_rho_n: non-finite log weight");
        ens.samples.push_back(std::move(s));
    }
    normalize(ens);
    return ens;
}

double log_weight_moment(const GibbsEnsemble& ens, double p) {
    double top = -std::numeric_limits<double>::infinity();
    for (const auto& s : ens.samples) top = std::max(top, p * s.log_weight);
    double sum = 0.0;
    for (const auto& s : ens.samples) sum += std::exp(p * s.log_weight - top);
    return top + std::log(sum / static_cast<double>(ens.samples.size()));
}

double InvarianceReport::max_abs_z() const {
    double m = 0.0;
    for (const auto& o : observables) m = std::max(m, std::abs(o.z));
    return m;
}

namespace {

std::vector<double> observables_of(const PairState& x, int n, double sigma) {
    std::vector<double> out;
    for (std::size_t i = 0; i < x.psi.size(); ++i) out.push_back(std::norm(x.psi[i]));
    for (std::size_t i = 0; i < x.phi.size(); ++i) out.push_back(std::norm(x.phi[i]));
    out.push_back(interaction_energy(x.psi, n, sigma));
    return out;
}

std::vector<std::string> observable_names(const FrequencyLattice& lat) {
    std::vector<std::string> out;
    for (const char* f : {"psi", "phi"})
        for (const Mode& k : lat.modes())
            out.push_back(std::string("|") + f + "(" + std::to_string(k.k1) + "," + std::to_string(k.k2) + ")|^2");
    out.push_back("energy");
    return out;
}

}  // namespace

InvarianceReport invariance_test(const InvarianceSpec& spec) {
    const ModelParams& p = spec.params;
    p.validate();
    if (!(spec.dt > 0.0)) throw std::invalid_argument("invariance_test: dt must be > 0");
    if (spec.count < 2) throw std::invalid_argument("invariance_test: count must be >= 2");
    const int steps = static_cast<int>(std::lround(p.horizon / spec.dt));
    if (steps < 1 || std::abs(steps * spec.dt - p.horizon) > 1e-9 * p.horizon)
        throw std::invalid_argument("invariance_test: horizon must be a multiple of dt");

    GibbsEnsemble ens = sample_rho_n(p, spec.count, spec.stream, spec.sigma);
    if (!spec.nonlinear) {
        for (auto& s : ens.samples) s.log_weight = 0.0;
        normalize(ens);
    }

    InvarianceReport rep;
    rep.dt = spec.dt;
    rep.horizon = p.horizon;
    rep.count = spec.count;
    rep.ess = ens.ess;

    const auto names = observable_names(*ens.samples.front().state.psi.lattice_ptr());
    const std::size_t nobs = names.size();
    std::vector<std::vector<double>> o0(nobs), diff(nobs);
    std::vector<double> w;
    for (std::size_t i = 0; i < ens.samples.size(); ++i) {
        SpdeRun run;
        run.params = p;
        run.initial = ens.samples[i].state;
        run.dt = spec.dt;
        run.steps = steps;
        run.record_stride = steps;
        run.stream = spec.stream.with_trajectory(spec.stream.trajectory() + static_cast<std::uint32_t>(i));
        run.sigma = ens.sigma;
        run.nonlinearity_scale = spec.nonlinear ? 1.0 : 0.0;
        const SpdeResult res = run_spde(run);
        if (res.blew_up) {
            ++rep.blown_up;
            continue;
        }
        const auto a = observables_of(run.initial, p.degree, ens.sigma);
        const auto b = observables_of(res.states.back(), p.degree, ens.sigma);
        for (std::size_t j = 0; j < nobs; ++j) {
            o0[j].push_back(a[j]);
            diff[j].push_back(b[j] - a[j]);
        }
        w.push_back(ens.weights[i]);
    }
    double wsum = 0.0;
    for (double x : w) wsum += x;
    for (double& x : w) x /= wsum;
    GibbsEnsemble kept;
    kept.weights = w;
    for (std::size_t j = 0; j < nobs; ++j) {
        const auto [m0, se0] = kept.mean(o0[j]);
        const auto [d, se] = kept.mean(diff[j]);
        (void)se0;
        ObservableZ oz{names[j], m0, m0 + d, se, se > 0.0 ? d / se : 0.0};
        rep.observables.push_back(oz);
    }
    return rep;
}

DtBiasReport dt_bias_scan(const InvarianceSpec& spec, const std::vector<double>& dts, const std::string& observable) {
    if (dts.size() < 2) throw std::invalid_argument("dt_bias_scan: need at least two step sizes");
    DtBiasReport rep;
    rep.observable = observable;
    for (double dt : dts) {
        InvarianceSpec s = spec;
        s.dt = dt;
        const InvarianceReport r = invariance_test(s);
        const auto it = std::find_if(r.observables.begin(), r.observables.end(),
                                     [&](const ObservableZ& o) { return o.name == observable; });
        if (it == r.observables.end()) throw std::invalid_argument("dt_bias_scan: unknown observable " + observable);
        rep.dts.push_back(dt);
        rep.drift.push_back(it->mean_t - it->mean0);
        rep.se.push_back(it->se);
    }
    // Weighted least squares with weights 1/se^2.
    double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < rep.dts.size(); ++i) {
        const double w = 1.0 / std::max(rep.se[i] * rep.se[i], 1e-300);
        sw += w;
        sx += w * rep.dts[i];
        sy += w * rep.drift[i];
        sxx += w * rep.dts[i] * rep.dts[i];
        sxy += w * rep.dts[i] * rep.drift[i];
    }
    const double det = sw * sxx - sx * sx;
    if (!(det > 0.0)) throw std::invalid_argument("dt_bias_scan: step sizes must differ");
    rep.slope = (sw * sxy - sx * sy) / det;
    rep.intercept = (sxx * sy - sx * sxy) / det;
    rep.slope_se = std::sqrt(sw / det);
    rep.intercept_se = std::sqrt(sxx / det);
    return rep;
}

}  // namespace kg
