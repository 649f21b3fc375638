#pragma once

#include <string>
#include <vector>

#include "kgspde/gaussian.hpp"
#include "kgspde/nonlinear.hpp"
#include "kgspde/propagators.hpp"

namespace kg {

/// Least-squares fit log(error) = slope log(param) + intercept.
struct RateReport {
    std::string parameter;               ///< "eps", "alpha2", ...
    std::vector<double> param_values;    ///< strictly decreasing
    std::vector<double> errors;
    std::vector<double> standard_errors; ///< Monte-Carlo SE per point, 0 for deterministic sweeps
    std::vector<int> survivors;          ///< paths without blow-up per point (stochastic sweeps)
    double slope = 0.0;
    double slope_se = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
};

/// Validates and fits. Throws std::invalid_argument for fewer than two
/// points, non-decreasing parameters, or non-positive errors.
RateReport fit_rate(std::string parameter, std::vector<double> params, std::vector<double> errors,
                    std::vector<double> standard_errors = {});

struct SpearmanResult {
    double rho = 0.0;
    double p_less = 1.0;       ///< one-sided p-value against rho >= 0
    double p_greater = 1.0;    ///< one-sided p-value against rho <= 0
    double p_two_sided = 1.0;
};

/// Spearman rank correlation with average ranks for ties and the Student-t
/// approximation t = rho sqrt((n-2)/(1-rho^2)) on n-2 degrees of freedom.
SpearmanResult spearman(const std::vector<double>& x, const std::vector<double>& y);

/// eps_j = 2^{-j} for j = first..last.
std::vector<double> dyadic(int first, int last);

// Deterministic sweeps: the linear limit errors of the propagators module.

/// nrl_linear_error over an eps list, data from `fixture` (its eps is ignored).
RateReport nrl_deterministic_sweep(const LinearSolveSpec& fixture, const std::vector<double>& eps, double sigma,
                                   double theta);
/// url_linear_error over an alpha2 list at alpha1 = Re alpha of the fixture.
RateReport url_deterministic_sweep(const LinearSolveSpec& fixture, double alpha1, const std::vector<double>& alpha2,
                                   double sigma);

/// Stochastic sweep setup. Every path draws (psi, phi)(0) ~ mu and drives
/// all systems of the sweep with one Brownian motion per mode.
struct StochasticSweep {
    ModelParams params;          ///< alpha, degree, n_max, horizon; eps is swept
    std::vector<double> values;  ///< eps (NRL) or alpha2 (URL), strictly decreasing
    double dt = 1e-3;
    int count = 100;
    NoiseStream stream;
    double delta = 0.1;          ///< error norm H^{-delta}
    bool nonlinear = true;
    double blowup_threshold = 1e8;
    double sigma = -1.0;         ///< < 0: wick_variance(N)
};

/// Mean over paths of sup_t ||Psi_eps - Psi_CGL||_{H^{-delta}}; blown-up
/// paths are dropped from every point and counted.
RateReport nrl_stochastic_sweep(const StochasticSweep& sweep);
/// Mean over paths of sup_t ||Psi_{alpha1 + i alpha2} - Psi_{alpha1}||_{H^{-delta}} at eps = 1,
/// alpha1 = Re params.alpha.
RateReport url_stochastic_sweep(const StochasticSweep& sweep);

/// Wick-Cauchy experiment on stationary samples Z ~ mu0 shared across N
/// (the same counters feed the common modes of every truncation).
struct WickCauchySpec {
    std::vector<int> n_list{2, 4, 8, 16};
    int m = 1;
    int n = 1;
    int grid = 128;
    double delta = 0.5;
    int count = 200;
    NoiseStream stream;
};

struct WickCauchyReport {
    std::vector<int> n_list;
    /// Pairs (i < j) in lexicographic order with mean and SE of the
    /// negative-Holder proxy of H_{m,n}(Pi_{N_j} Z) - H_{m,n}(Pi_{N_i} Z).
    std::vector<std::pair<int, int>> pairs;
    std::vector<double> mean;
    std::vector<double> se;
    /// Same for the squared L^2 norm, whose exact value is known for (1, 0).
    std::vector<double> l2_mean;
    std::vector<double> l2_se;
    std::vector<double> l2_exact;  ///< filled for (m, n) = (1, 0), else empty
    SpearmanResult trend;          ///< mean difference against min(N_i, N_j)
};

WickCauchyReport wick_cauchy_test(const WickCauchySpec& spec);

/// sum_{N_i < |k| <= N_j} 2 / <k>^2.
double lattice_tail_sum(int n_i, int n_j);

/// sup over t in {0, dt, ..., T} of |E[(Z_a - Z_b)(t; k) conj(Z_b(t; k))]| for
/// two linear systems driven by the same Brownian motion from the common
/// initial data (z, y) ~ mu. Computed from the exact joint covariance.
double mode_cross_covariance(const CoupledSystem& a, const CoupledSystem& b, Mode k, double horizon, double dt);

/// mode_cross_covariance of Z_eps against the CGL limit over an eps list.
RateReport mode_covariance_rate(cplx alpha, Mode k, const std::vector<double>& eps, double horizon, double dt);

/// Prefactors error / eps^theta at a fixed eps for each mode.
std::vector<double> mode_covariance_prefactors(cplx alpha, const std::vector<Mode>& modes, double eps, double theta,
                                               double horizon, double dt);

struct EnergyFixture {
    std::string name;
    LinearSolveSpec spec;  ///< params.eps and params.alpha are overridden by the grids
};

/// Single mode, broadband smooth, and rough H^{sigma}-type data.
std::vector<EnergyFixture> default_energy_fixtures(int n_max, double sigma, double dt, int steps);

struct EnergyProbeRow {
    std::string fixture;
    cplx alpha;
    std::vector<double> eps;
    std::vector<double> constant;  ///< sup_t pair_norm / data norm
    double spread = 0.0;           ///< max / min over eps
    SpearmanResult trend;          ///< constant against eps; growth as eps -> 0 means rho < 0
};

struct EnergyProbeReport {
    double sigma = 0.0;
    std::vector<EnergyProbeRow> rows;
    double max_constant = 0.0;
    double max_spread = 0.0;
};

/// Empirical constants of sup_t ||(u, eps u_t)||_{H^sigma x H^{sigma-1}} <=
/// C (||phi0||_{H^sigma} + ||phi1||_{H^{sigma-1}} + ||f||_{L^2 H^{sigma-1}}).
EnergyProbeReport energy_uniformity_probe(const std::vector<cplx>& alphas, const std::vector<double>& eps,
                                          const std::vector<EnergyFixture>& fixtures, double sigma);

}  // namespace kg
