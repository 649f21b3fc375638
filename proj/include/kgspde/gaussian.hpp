#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "kgspde/propagators.hpp"
#include "kgspde/rng.hpp"
#include "kgspde/spectral.hpp"
#include "kgspde/symbols.hpp"

namespace kg {

/// Counter id of a wavevector. Depends on k only, so nested lattices see the
/// same noise and the same initial draws on their common modes.
inline std::uint32_t mode_key(Mode k) {
    return (static_cast<std::uint32_t>(k.k1 + 2048) << 12) | static_cast<std::uint32_t>(k.k2 + 2048);
}

// Counter components. Dynamics use 0..999 per step, initial data 1000 and 1001.
inline constexpr std::uint32_t kPsiDraw = 1000;
inline constexpr std::uint32_t kPhiDraw = 1001;

/// N_c(0, r): X + iY with X, Y independent N(0, r/2). r = 0 returns 0.
cplx sample_complex_normal(double r, const NoiseStream& stream, std::uint64_t step, std::uint32_t mode,
                           std::uint32_t component);

/// Draw number `draw` from mu = (x)_k N_c(0, 2/<k>^2) (x) (x)_k N_c(0, 2).
PairState sample_mu(const LatticePtr& lattice, const NoiseStream& stream, std::uint64_t draw = 0);
/// psi-marginal of sample_mu with the same draws.
SpectralField sample_mu0(const LatticePtr& lattice, const NoiseStream& stream, std::uint64_t draw = 0);

/// Linear system for one mode in (Z, Y = eps Z_t):
///   d(Z, Y) = A (Z, Y) dt + (0, 2 sqrt(Re alpha)/eps) dW,  E|dW|^2 = 2 dt.
struct ModeOU {
    double eps = 1.0;
    cplx alpha{1.0, 1.0};
    double s = 1.0;  ///< <k>^2

    static ModeOU from(const ModelParams& p, Mode k) { return {p.eps, p.alpha, 1.0 + k.norm2()}; }

    Eigen::Matrix2cd drift() const;
    /// BB*. The complex Brownian increment has dW dW-bar = 2 dt, so the
    /// intensity (2 sqrt(Re alpha)/eps)^2 is doubled: 8 Re alpha / eps^2.
    Eigen::Matrix2cd diffusion() const;
    /// diag(2/<k>^2, 2).
    Eigen::Matrix2cd stationary_covariance() const;
    /// A Sigma + Sigma A* + BB*.
    Eigen::Matrix2cd lyapunov_residual() const;
};

/// Exact transition over dt: x' = propagator x + factor xi, xi ~ N_c(0, I),
/// factor factor* = covariance = int_0^dt e^{As} BB* e^{A*s} ds.
struct OUTransition {
    Eigen::Matrix2cd propagator;
    Eigen::Matrix2cd covariance;
    Eigen::Matrix2cd factor;
};

/// noise_scale multiplies B (0 switches the noise off).
OUTransition ou_transition(const ModeOU& ou, double dt, double noise_scale = 1.0);

/// Relative eigenvalue gap below which the covariance is taken from
/// Sigma - P Sigma P* instead of the eigenbasis formula.
inline constexpr double kCovarianceCollisionGap = 1e-2;

/// One exact step; draws components 0 and 1 at (step, mode).
Eigen::Vector2cd ou_exact_step(const Eigen::Vector2cd& x, const OUTransition& tr, const NoiseStream& stream,
                               std::uint64_t step, std::uint32_t mode);
Eigen::Vector2cd ou_exact_step(const Eigen::Vector2cd& x, double dt, const ModeOU& ou, const NoiseStream& stream,
                               std::uint64_t step, std::uint32_t mode);

/// Per-mode exact evolution of the linear stochastic system.
Trajectory sample_Z_trajectory(const ModelParams& p, double dt, int steps, const PairState& initial,
                               const NoiseStream& stream, double noise_scale = 1.0);

/// dZ = -c Z dt + b dW with c = <k>^2/(2 alpha), b = sqrt(Re alpha)/alpha.
struct CglTransition {
    cplx decay;      ///< e^{-c dt}
    cplx response;   ///< (1 - e^{-c dt}) / <k>^2, multiplies a frozen forcing
    double stddev;   ///< sqrt of the step variance
};

CglTransition cgl_transition(cplx alpha, double s, double dt, double noise_scale = 1.0);
/// 2 Re(c) (2/s) - 2|b|^2, zero for a stationary variance 2/s.
double cgl_lyapunov_residual(cplx alpha, double s);
/// Draws component 0 at (step, mode).
cplx cgl_ou_exact_step(cplx z, const CglTransition& tr, const NoiseStream& stream, std::uint64_t step,
                       std::uint32_t mode);

// Jointly driven linear systems. Every block sees the same complex Brownian
// motion of one mode; the joint step covariance couples them.

struct CoupledBlock {
    Eigen::MatrixXcd drift;       ///< M_i
    Eigen::VectorXcd noise;       ///< b_i, dX_i = M_i X_i dt + b_i dW
    Eigen::MatrixXcd propagator;  ///< e^{M_i dt}
};

/// Damped wave block in (Z, Y) with its exact propagator over dt.
CoupledBlock wave_block(double eps, cplx alpha, double s, double dt);
/// Scalar CGL block.
CoupledBlock cgl_block(cplx alpha, double s, double dt);

struct CoupledTransition {
    Eigen::MatrixXcd propagator;  ///< block diagonal
    Eigen::MatrixXcd stationary;  ///< joint stationary covariance
    Eigen::MatrixXcd covariance;  ///< step covariance
    Eigen::MatrixXcd factor;
    std::vector<Eigen::Index> offsets;
};

/// Solves M_i S_ij + S_ij M_j* + 2 b_i b_j* = 0 block by block.
Eigen::MatrixXcd coupled_stationary_covariance(const std::vector<CoupledBlock>& blocks);
CoupledTransition coupled_transition(const std::vector<CoupledBlock>& blocks);

/// Symmetrize, reject materially negative eigenvalues, and return a square
/// root L with L L* = cov. Throws NumericalError if cov is not PSD.
Eigen::MatrixXcd psd_factor(const Eigen::MatrixXcd& cov);

// Trajectory dumps. The header line records seed and trajectory id.
void write_trajectory_csv(std::ostream& os, const Trajectory& traj, double dt, const NoiseStream& stream);
void write_trajectory_binary(std::ostream& os, const Trajectory& traj, double dt, const NoiseStream& stream);

}  // namespace kg
