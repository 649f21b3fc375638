#pragma once

#include <string>
#include <vector>

#include "kgspde/nonlinear.hpp"

namespace kg {

/// (1/(2n+2)) int_{T^2} H_{n+1,n+1}(Pi_N psi; sigma) dx, evaluated on an M x M
/// grid. M = 0 picks the alias-free size for degree 2n+2; smaller explicit
/// grids are rejected. Throws NumericalError if the result is not real.
double interaction_energy(const SpectralField& psi, int n, double sigma, int grid = 0);

struct GibbsSample {
    PairState state;
    double log_weight = 0.0;  ///< minus the interaction energy
};

/// Self-normalized importance sample of rho_N = Gamma^{-1} e^{-V_N} d mu.
struct GibbsEnsemble {
    std::vector<GibbsSample> samples;
    std::vector<double> weights;  ///< normalized, sums to 1
    double ess = 0.0;             ///< (sum w)^2 / sum w^2
    double log_mean_weight = 0.0; ///< log of the mu-average of e^{-V_N}, estimates log Gamma_N
    double sigma = 0.0;
    bool low_ess = false;         ///< ess < kMinEss

    /// Weighted mean and standard error (delta method) of per-sample values.
    std::pair<double, double> mean(const std::vector<double>& values) const;
};

inline constexpr double kMinEss = 10.0;

/// Sample i is draw 0 of trajectory stream.trajectory() + i, so ensembles of
/// different size share their common prefix. sigma < 0 uses wick_variance(N).
GibbsEnsemble sample_rho_n(const ModelParams& p, int count, const NoiseStream& stream, double sigma = -1.0);

/// log of E_mu[e^{-p V_N}] over the ensemble's draws (ignores the weights).
double log_weight_moment(const GibbsEnsemble& ens, double p);

struct ObservableZ {
    std::string name;
    double mean0 = 0.0;   ///< weighted mean at t = 0
    double mean_t = 0.0;  ///< weighted mean at t = horizon
    double se = 0.0;      ///< standard error of the paired difference
    double z = 0.0;
};

struct InvarianceReport {
    double dt = 0.0;
    double horizon = 0.0;
    int count = 0;
    double ess = 0.0;
    int blown_up = 0;
    std::vector<ObservableZ> observables;
    double max_abs_z() const;
};

struct InvarianceSpec {
    ModelParams params;   ///< degree n and truncation N; horizon is the final time
    double dt = 1e-3;
    int count = 1000;
    NoiseStream stream;
    double sigma = -1.0;
    bool nonlinear = true;  ///< false: weight 1 and linear dynamics (Gaussian case)
};

/// Evolve the weighted ensemble with the Galerkin SPDE and compare weighted
/// moments of |psi^(k)|^2, |phi^(k)|^2 (every k) and the interaction energy
/// at time 0 and at the horizon. z-scores use paired differences per sample.
InvarianceReport invariance_test(const InvarianceSpec& spec);

/// Weighted drift of one observable over a list of step sizes, with a
/// weighted least-squares line drift = slope dt + intercept.
struct DtBiasReport {
    std::string observable;
    std::vector<double> dts;
    std::vector<double> drift;
    std::vector<double> se;
    double slope = 0.0, slope_se = 0.0;
    double intercept = 0.0, intercept_se = 0.0;
};

DtBiasReport dt_bias_scan(const InvarianceSpec& spec, const std::vector<double>& dts,
                          const std::string& observable = "energy");

}  // namespace kg
