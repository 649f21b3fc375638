#include "kgspde/experiments.hpp"

#include <algorithm>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include "kgspde/wick.hpp"

namespace kg {

RateReport fit_rate(std::string parameter, std::vector<double> params, std::vector<double> errors,
                    std::vector<double> standard_errors) {
    if (params.size() < 2) throw std::invalid_argument("fit_rate: need at least two parameter values");
    if (params.size() != errors.size()) throw std::invalid_argument("fit_rate: length mismatch");
    if (!standard_errors.empty() && standard_errors.size() != errors.size())
        throw std::invalid_argument("fit_rate: standard error length mismatch");
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (!(params[i] > 0.0)) throw std::invalid_argument("fit_rate: parameters must be positive");
        if (i > 0 && !(params[i] < params[i - 1]))
            throw std::invalid_argument("fit_rate: parameters must be strictly decreasing");
        if (!(errors[i] > 0.0) || !std::isfinite(errors[i]))
            throw std::invalid_argument("fit_rate: errors must be positive and finite");
    }
    RateReport r;
    r.parameter = std::move(parameter);
    const double n = static_cast<double>(params.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < params.size(); ++i) {
        mx += std::log(params[i]) / n;
        my += std::log(errors[i]) / n;
    }
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double dx = std::log(params[i]) - mx, dy = std::log(errors[i]) - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    r.slope = sxy / sxx;
    r.intercept = my - r.slope * mx;
    const double ssr = std::max(0.0, syy - r.slope * sxy);
    r.r_squared = syy > 0.0 ? 1.0 - ssr / syy : 1.0;
    r.slope_se = params.size() > 2 ? std::sqrt(ssr / (n - 2.0) / sxx) : 0.0;
    r.param_values = std::move(params);
    r.errors = std::move(errors);
    r.standard_errors = standard_errors.empty() ? std::vector<double>(r.errors.size(), 0.0) : std::move(standard_errors);
    return r;
}

namespace {

std::vector<double> average_ranks(const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < idx.size();) {
        std::size_t j = i;
        while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
        const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
        i = j + 1;
    }
    return r;
}

}  // namespace

SpearmanResult spearman(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw std::invalid_argument("spearman: length mismatch");
    if (x.size() < 3) throw std::invalid_argument("spearman: need at least three points");
    const auto rx = average_ranks(x), ry = average_ranks(y);
    const double n = static_cast<double>(x.size());
    const double mean = (n + 1.0) / 2.0;
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (rx[i] - mean) * (ry[i] - mean);
        sxx += (rx[i] - mean) * (rx[i] - mean);
        syy += (ry[i] - mean) * (ry[i] - mean);
    }
    SpearmanResult s;
    if (sxx == 0.0 || syy == 0.0) return s;  // a constant sample carries no rank information
    s.rho = sxy / std::sqrt(sxx * syy);
    if (std::abs(s.rho) >= 1.0 - 1e-15) {
        s.p_less = s.rho < 0 ? 0.0 : 1.0;
        s.p_greater = s.rho > 0 ? 0.0 : 1.0;
    } else {
        const double t = s.rho * std::sqrt((n - 2.0) / (1.0 - s.rho * s.rho));
        const boost::math::students_t dist(n - 2.0);
        s.p_less = boost::math::cdf(dist, t);
        s.p_greater = boost::math::cdf(boost::math::complement(dist, t));
    }
    s.p_two_sided = std::min(1.0, 2.0 * std::min(s.p_less, s.p_greater));
    return s;
}

std::vector<double> dyadic(int first, int last) {
    if (last < first) throw std::invalid_argument("dyadic: empty range");
    std::vector<double> out;
    for (int j = first; j <= last; ++j) out.push_back(std::ldexp(1.0, -j));
    return out;
}

RateReport nrl_deterministic_sweep(const LinearSolveSpec& fixture, const std::vector<double>& eps, double sigma,
                                   double theta) {
    if (eps.size() < 2) throw std::invalid_argument("nrl sweep: need at least two eps values");
    std::vector<double> err;
    for (double e : eps) {
        LinearSolveSpec s = fixture;
        s.params.eps = e;
        err.push_back(nrl_linear_error(s, sigma, theta).error);
    }
    return fit_rate("eps", eps, err);
}

RateReport url_deterministic_sweep(const LinearSolveSpec& fixture, double alpha1, const std::vector<double>& alpha2,
                                   double sigma) {
    if (alpha2.size() < 2) throw std::invalid_argument("url sweep: need at least two alpha2 values");
    std::vector<double> err;
    for (double a2 : alpha2) err.push_back(url_linear_error(alpha1, a2, fixture, sigma).error);
    return fit_rate("alpha2", alpha2, err);
}

namespace {

// Runs every path of a coupled sweep. The last system is the reference.
RateReport coupled_sweep(const StochasticSweep& sw, const std::vector<CoupledSystem>& systems, const char* name) {
    sw.params.validate();
    if (sw.values.size() < 2) throw std::invalid_argument(std::string(name) + " sweep: need at least two values");
    for (std::size_t i = 1; i < sw.values.size(); ++i)
        if (!(sw.values[i] < sw.values[i - 1]))
            throw std::invalid_argument(std::string(name) + " sweep: values must be strictly decreasing");
    if (!(sw.dt > 0.0) || sw.count < 1) throw std::invalid_argument("sweep: need dt > 0 and count >= 1");
    const int steps = static_cast<int>(std::lround(sw.params.horizon / sw.dt));
    if (steps < 1) throw std::invalid_argument("sweep: horizon shorter than dt");

    const LatticePtr lat = make_lattice(sw.params.n_max);
    const double sigma = sw.sigma < 0.0 ? wick_variance(sw.params.n_max) : sw.sigma;
    const CoupledStepper stepper(systems, lat, sw.params.degree, sw.dt, sigma, sw.nonlinear ? 1.0 : 0.0, sw.stream);
    const std::size_t nv = sw.values.size();
    std::vector<double> sum(nv, 0.0), sum2(nv, 0.0);
    int survivors = 0;
    for (int path = 0; path < sw.count; ++path) {
        const NoiseStream ps = sw.stream.with_trajectory(sw.stream.trajectory() + static_cast<std::uint32_t>(path));
        const PairState x0 = sample_mu(lat, ps);
        std::vector<PairState> st(systems.size(), x0);
        std::vector<double> sup(nv, 0.0);
        bool ok = true;
        for (int n = 0; n < steps && ok; ++n) {
            stepper.step(st, static_cast<std::uint64_t>(n), ps);
            for (const auto& s : st)
                if (blown_up(s.psi, sw.blowup_threshold)) ok = false;
            if (!ok) break;
            for (std::size_t v = 0; v < nv; ++v)
                sup[v] = std::max(sup[v], sobolev_norm(st[v].psi - st.back().psi, -sw.delta));
        }
        if (!ok) continue;
        ++survivors;
        for (std::size_t v = 0; v < nv; ++v) {
            sum[v] += sup[v];
            sum2[v] += sup[v] * sup[v];
        }
    }
    if (survivors < 2) throw NumericalError(std::string(name) + " sweep: fewer than two paths survived");
    std::vector<double> mean(nv), se(nv);
    for (std::size_t v = 0; v < nv; ++v) {
        mean[v] = sum[v] / survivors;
        const double var = std::max(0.0, (sum2[v] - survivors * mean[v] * mean[v]) / (survivors - 1));
        se[v] = std::sqrt(var / survivors);
    }
    RateReport r = fit_rate(name, sw.values, mean, se);
    r.survivors.assign(nv, survivors);
    return r;
}

}  // namespace

RateReport nrl_stochastic_sweep(const StochasticSweep& sweep) {
    std::vector<CoupledSystem> sys;
    for (double e : sweep.values) {
        if (!(e > 0.0 && e <= 1.0)) throw std::invalid_argument("nrl sweep: eps must be in (0, 1]");
        sys.push_back({e, sweep.params.alpha, false});
    }
    sys.push_back({1.0, sweep.params.alpha, true});
    return coupled_sweep(sweep, sys, "eps");
}

RateReport url_stochastic_sweep(const StochasticSweep& sweep) {
    const double a1 = sweep.params.alpha.real();
    std::vector<CoupledSystem> sys;
    for (double a2 : sweep.values) sys.push_back({1.0, cplx(a1, a2), false});
    sys.push_back({1.0, cplx(a1, 0.0), false});
    return coupled_sweep(sweep, sys, "alpha2");
}

double lattice_tail_sum(int n_i, int n_j) {
    if (n_i < 0 || n_j < n_i) throw std::invalid_argument("lattice_tail_sum: need 0 <= N_i <= N_j");
    return c_n(n_j) - c_n(n_i);
}

WickCauchyReport wick_cauchy_test(const WickCauchySpec& spec) {
    const auto& ns = spec.n_list;
    if (ns.size() < 2) throw std::invalid_argument("wick_cauchy_test: need at least two truncations");
    for (std::size_t i = 1; i < ns.size(); ++i)
        if (!(ns[i] > ns[i - 1])) throw std::invalid_argument("wick_cauchy_test: N list must be increasing");
    if (ns.front() < 0 || spec.m < 0 || spec.n < 0 || spec.count < 2)
        throw std::invalid_argument("wick_cauchy_test: invalid degrees or count");
    if (spec.grid < FrequencyLattice::alias_free_grid(ns.back(), spec.m + spec.n))
        throw std::invalid_argument("wick_cauchy_test: grid too coarse for the largest truncation");

    WickCauchyReport rep;
    rep.n_list = ns;
    for (std::size_t i = 0; i < ns.size(); ++i)
        for (std::size_t j = i + 1; j < ns.size(); ++j) rep.pairs.push_back({ns[i], ns[j]});
    const std::size_t np = rep.pairs.size();
    std::vector<double> s1(np, 0.0), s2(np, 0.0), l1(np, 0.0), l2(np, 0.0);
    std::vector<LatticePtr> lats;
    for (int n : ns) lats.push_back(make_lattice(n));
    const double area = 4.0 * std::numbers::pi * std::numbers::pi;
    const double cells = static_cast<double>(spec.grid) * spec.grid;

    for (int path = 0; path < spec.count; ++path) {
        const NoiseStream ps = spec.stream.with_trajectory(spec.stream.trajectory() + static_cast<std::uint32_t>(path));
        std::vector<PhysicalGrid> h;
        for (std::size_t i = 0; i < ns.size(); ++i)
            h.push_back(wick_power_grid(sample_mu0(lats[i], ps), spec.m, spec.n, wick_variance(ns[i]), spec.grid));
        std::size_t p = 0;
        for (std::size_t i = 0; i < ns.size(); ++i)
            for (std::size_t j = i + 1; j < ns.size(); ++j, ++p) {
                PhysicalGrid d = h[j];
                double l2sq = 0.0;
                for (std::size_t q = 0; q < d.values.size(); ++q) {
                    d.values[q] -= h[i].values[q];
                    l2sq += std::norm(d.values[q]);
                }
                l2sq *= area / cells;
                GridSpectrum g = grid_forward(d);
                apply_bessel(g, spec.delta);
                const PhysicalGrid sm = grid_inverse(g);
                double sup = 0.0;
                for (const auto& v : sm.values) sup = std::max(sup, std::abs(v));
                s1[p] += sup;
                s2[p] += sup * sup;
                l1[p] += l2sq;
                l2[p] += l2sq * l2sq;
            }
    }
    const double c = spec.count;
    std::vector<double> min_n;
    for (std::size_t p = 0; p < np; ++p) {
        const double m = s1[p] / c, lm = l1[p] / c;
        rep.mean.push_back(m);
        rep.se.push_back(std::sqrt(std::max(0.0, (s2[p] / c - m * m) * c / (c - 1.0)) / c));
        rep.l2_mean.push_back(lm);
        rep.l2_se.push_back(std::sqrt(std::max(0.0, (l2[p] / c - lm * lm) * c / (c - 1.0)) / c));
        if (spec.m == 1 && spec.n == 0) rep.l2_exact.push_back(lattice_tail_sum(rep.pairs[p].first, rep.pairs[p].second));
        min_n.push_back(rep.pairs[p].first);
    }
    if (np >= 3) rep.trend = spearman(min_n, rep.mean);
    return rep;
}

namespace {

CoupledBlock block_of(const CoupledSystem& sys, double s, double t) {
    return sys.cgl ? cgl_block(sys.alpha, s, t) : wave_block(sys.eps, sys.alpha, s, t);
}

}  // namespace

double mode_cross_covariance(const CoupledSystem& a, const CoupledSystem& b, Mode k, double horizon, double dt) {
    if (!(dt > 0.0) || !(horizon >= 0.0)) throw std::invalid_argument("mode_cross_covariance: need dt > 0");
    const double s = 1.0 + k.norm2();
    const std::vector<CoupledSystem> sys = {a, b};
    std::vector<CoupledBlock> blocks0 = {block_of(a, s, dt), block_of(b, s, dt)};
    const Eigen::MatrixXcd sinf = coupled_stationary_covariance(blocks0);
    std::vector<Eigen::Index> off, zi;
    std::vector<int> yi;
    Eigen::Index total = 0;
    for (const auto& bl : blocks0) {
        off.push_back(total);
        total += bl.drift.rows();
    }
    // Common initial data (z, y) ~ N_c(0, 2/s) x N_c(0, 2).
    Eigen::MatrixXcd s0 = Eigen::MatrixXcd::Zero(total, total);
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 2; ++j) {
            s0(off[i], off[j]) = 2.0 / s;
            if (!sys[i].cgl && !sys[j].cgl) s0(off[i] + 1, off[j] + 1) = 2.0;
        }
    const int steps = static_cast<int>(std::lround(horizon / dt));
    double sup = 0.0;
    for (int n = 0; n <= steps; ++n) {
        const double t = n * dt;
        Eigen::MatrixXcd p = Eigen::MatrixXcd::Zero(total, total);
        for (std::size_t i = 0; i < 2; ++i) {
            const CoupledBlock bl = block_of(sys[i], s, t);
            p.block(off[i], off[i], bl.propagator.rows(), bl.propagator.cols()) = bl.propagator;
        }
        const Eigen::MatrixXcd cov = p * s0 * p.adjoint() + sinf - p * sinf * p.adjoint();
        sup = std::max(sup, std::abs(cov(off[0], off[1]) - cov(off[1], off[1])));
    }
    return sup;
}

RateReport mode_covariance_rate(cplx alpha, Mode k, const std::vector<double>& eps, double horizon, double dt) {
    if (eps.size() < 2) throw std::invalid_argument("mode_covariance_rate: need at least two eps values");
    std::vector<double> err;
    for (double e : eps) err.push_back(mode_cross_covariance({e, alpha, false}, {1.0, alpha, true}, k, horizon, dt));
    return fit_rate("eps", eps, err);
}

std::vector<double> mode_covariance_prefactors(cplx alpha, const std::vector<Mode>& modes, double eps, double theta,
                                               double horizon, double dt) {
    std::vector<double> out;
    for (const Mode& k : modes)
        out.push_back(mode_cross_covariance({eps, alpha, false}, {1.0, alpha, true}, k, horizon, dt) /
                      std::pow(eps, theta));
    return out;
}

std::vector<EnergyFixture> default_energy_fixtures(int n_max, double sigma, double dt, int steps) {
    const LatticePtr lat = make_lattice(n_max);
    const NoiseStream phases(20240501, 0);
    auto phase = [&](std::size_t i, std::uint32_t c) {
        const cplx z = phases.complex_normal(0, mode_key(lat->mode(i)), c);
        return z / std::abs(z);
    };
    auto base = [&] {
        LinearSolveSpec s;
        s.params.n_max = n_max;
        s.params.horizon = dt * steps;
        s.phi0 = SpectralField(lat);
        s.phi1 = SpectralField(lat);
        s.dt = dt;
        s.steps = steps;
        return s;
    };
    std::vector<EnergyFixture> out;

    EnergyFixture single{"single-mode", base()};
    single.spec.phi0.set({1, 0}, 1.0);
    single.spec.phi1.set({1, 0}, cplx(0.0, 0.5));
    SpectralField f1(lat);
    f1.set({1, 0}, 4.0);
    single.spec.forcing.assign(static_cast<std::size_t>(steps), f1);
    out.push_back(single);

    EnergyFixture smooth{"broadband-smooth", base()};
    SpectralField f(lat);
    for (std::size_t i = 0; i < lat->size(); ++i) {
        const double r = std::sqrt(lat->weight(i));
        smooth.spec.phi0[i] = std::exp(-r) * phase(i, 0);
        smooth.spec.phi1[i] = std::exp(-r) * phase(i, 1);
        f[i] = 4.0 * std::exp(-r) * phase(i, 2);
    }
    smooth.spec.forcing.assign(static_cast<std::size_t>(steps), f);
    out.push_back(smooth);

    // Coefficients <k>^{-(sigma+1)}, <k>^{-sigma}: at the edge of H^sigma x H^{sigma-1} in 2-d.
    EnergyFixture rough{"rough", base()};
    for (std::size_t i = 0; i < lat->size(); ++i) {
        const double w = lat->weight(i);
        rough.spec.phi0[i] = std::pow(w, -0.5 * (sigma + 1.0)) * phase(i, 3);
        rough.spec.phi1[i] = std::pow(w, -0.5 * sigma) * phase(i, 4);
        f[i] = 4.0 * std::pow(w, -0.5 * sigma) * phase(i, 5);
    }
    rough.spec.forcing.assign(static_cast<std::size_t>(steps), f);
    out.push_back(rough);
    return out;
}

EnergyProbeReport energy_uniformity_probe(const std::vector<cplx>& alphas, const std::vector<double>& eps,
                                          const std::vector<EnergyFixture>& fixtures, double sigma) {
    if (alphas.empty() || eps.empty() || fixtures.empty())
        throw std::invalid_argument("energy_uniformity_probe: empty alpha grid, eps grid or fixture list");
    EnergyProbeReport rep;
    rep.sigma = sigma;
    for (const auto& fx : fixtures)
        for (const cplx& a : alphas) {
            EnergyProbeRow row;
            row.fixture = fx.name;
            row.alpha = a;
            row.eps = eps;
            for (double e : eps) {
                LinearSolveSpec s = fx.spec;
                s.params.eps = e;
                s.params.alpha = a;
                const Trajectory tr = linear_solve(s, Representation::Auto);
                double lhs = 0.0;
                for (const auto& st : tr) lhs = std::max(lhs, pair_norm(st, sigma));
                const double rhs = sobolev_norm(s.phi0, sigma) + sobolev_norm(s.phi1, sigma - 1.0) +
                                   (s.forcing.empty() ? 0.0 : forcing_l2_norm(s.forcing, s.dt, sigma - 1.0));
                if (!(rhs > 0.0)) throw std::invalid_argument("energy_uniformity_probe: fixture with zero data");
                row.constant.push_back(lhs / rhs);
            }
            const auto [lo, hi] = std::minmax_element(row.constant.begin(), row.constant.end());
            row.spread = *hi / *lo;
            if (eps.size() >= 3) row.trend = spearman(eps, row.constant);
            rep.max_constant = std::max(rep.max_constant, *hi);
            rep.max_spread = std::max(rep.max_spread, row.spread);
            rep.rows.push_back(std::move(row));
        }
    return rep;
}

}  // namespace kg
