#pragma once

#include <vector>

#include "kgspde/gaussian.hpp"
#include "kgspde/propagators.hpp"
#include "kgspde/wick.hpp"

namespace kg {

/// Galerkin system
///   eps^2 Psi_tt + 2 alpha Psi_t + (1 - Delta) Psi + lambda Pi_N H_{n+1,n}(Pi_N Psi; sigma)
///     = 2 sqrt(Re alpha) dW/dt
/// advanced by exponential Euler: exact linear flow and exact Gaussian
/// increment per mode, nonlinearity frozen over each step.
struct SpdeRun {
    ModelParams params;
    PairState initial;
    double dt = 1e-3;
    int steps = 1000;
    NoiseStream stream;
    int record_stride = 1;
    double sigma = -1.0;               ///< renormalization; < 0 means wick_variance(N)
    double nonlinearity_scale = 1.0;   ///< lambda; 0 gives the linear equation
    double noise_scale = 1.0;          ///< 0 gives the deterministic equation
    double blowup_threshold = 1e8;     ///< on max |Psi^(k)|

    void validate() const;
    double renormalization() const;
};

struct SpdeResult {
    std::vector<double> times;
    Trajectory states;
    bool blew_up = false;
    int completed_steps = 0;
};

/// Per-mode propagators and noise factors for one (eps, alpha, dt).
class SpdeStepper {
public:
    explicit SpdeStepper(const SpdeRun& run);
    PairState step(const PairState& state, std::uint64_t step_index) const;
    const SpdeRun& run() const { return run_; }

private:
    SpdeRun run_;
    double sigma_;
    std::vector<OUTransition> trans_;
    std::vector<Eigen::Vector2cd> forcing_;
    std::vector<std::uint32_t> keys_;
};

/// One step from `state` (step index selects the noise counter).
PairState step_spde(const PairState& state, const SpdeRun& run, std::uint64_t step_index = 0);
SpdeResult run_spde(const SpdeRun& run);

/// Returns true if the state is non-finite or exceeds the threshold.
bool blown_up(const SpectralField& f, double threshold);

/// Da Prato-Debussche remainder: U solves
///   eps^2 U_tt + 2 alpha U_t + (1 - Delta) U + :(U + Z)^{n+1}(Ubar + Zbar)^n: = 0
/// with the Wick table of Z rebuilt from z_path at every step. run.initial is
/// (U, eps U_t) at t = 0; run.noise_scale is ignored.
SpdeResult run_dpd(const SpdeRun& run, const Trajectory& z_path);

/// 2 alpha Psi_t + (1 - Delta) Psi + lambda Pi_N H_{n+1,n}(Psi; sigma) = 2 sqrt(Re alpha) dW/dt.
/// run.initial.psi is the initial state; phi is unused.
class CglStepper {
public:
    explicit CglStepper(const SpdeRun& run);
    SpectralField step(const SpectralField& state, std::uint64_t step_index) const;

private:
    SpdeRun run_;
    double sigma_;
    std::vector<CglTransition> trans_;
    std::vector<std::uint32_t> keys_;
};

SpectralField step_cgl(const SpectralField& state, const SpdeRun& run, std::uint64_t step_index = 0);
SpdeResult run_cgl(const SpdeRun& run);

/// Real-damping target of the ultra-relativistic limit: eps = 1 and real
/// alpha_1, linear flow on the sinh path. Rejects Im alpha != 0 or eps != 1.
PairState step_url_target(const PairState& state, const SpdeRun& run, std::uint64_t step_index = 0);
SpdeResult run_url_target(const SpdeRun& run);

/// Several damped-wave systems (and optionally the CGL limit) on one lattice,
/// all driven by the same Brownian motion per mode. Component i of the
/// ensemble is system i; the CGL system, if present, is last.
struct CoupledSystem {
    double eps = 1.0;
    cplx alpha{1.0, 1.0};
    bool cgl = false;
};

class CoupledStepper {
public:
    CoupledStepper(std::vector<CoupledSystem> systems, const LatticePtr& lattice, int degree, double dt,
                   double sigma, double nonlinearity_scale, const NoiseStream& stream);
    /// states[i] is (Psi, eps Psi_t) of system i (phi unused for CGL).
    void step(std::vector<PairState>& states, std::uint64_t step_index) const;
    /// Same step with another noise stream (one stepper serves many paths).
    void step(std::vector<PairState>& states, std::uint64_t step_index, const NoiseStream& stream) const;
    std::size_t size() const { return systems_.size(); }

private:
    std::vector<CoupledSystem> systems_;
    LatticePtr lattice_;
    int degree_;
    double dt_, sigma_, lambda_;
    NoiseStream stream_;
    std::vector<CoupledTransition> trans_;        // per mode
    std::vector<std::vector<Eigen::Vector2cd>> forcing_;  // [system][mode], CGL uses entry 0
    std::vector<std::uint32_t> keys_;
};

}  // namespace kg
