#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "kgspde/spectral.hpp"
#include "kgspde/symbols.hpp"

namespace kg {

/// e^z - 1 without cancellation for small |z|.
cplx expm1_complex(cplx z);
/// (e^{mu h} - 1) / mu, continuous at mu = 0.
cplx phi1(cplx mu, double h);

/// How the per-mode linear flow is evaluated.
///  - Mild: the two-exponential representation built on lambda^{+-}. Requires
///    Im alpha != 0.
///  - Sinh: e^{-alpha t/eps^2} (cosh, sinh/x) representation, an entire
///    function of the discriminant; valid for real alpha and at the branch
///    point alpha^2 = eps^2 <k>^2.
///  - Auto: Mild unless alpha is real or lambda^+ and lambda^- nearly collide.
enum class Representation { Mild, Sinh, Auto };

/// Exact one-step flow of eps^2 u'' + 2 alpha u' + s u = f on the pair
/// (u, eps u') with f held constant over the step.
struct ModeFlow {
    Eigen::Matrix2cd propagator;  ///< (u, phi)(t+h) = propagator (u, phi)(t) + forcing f
    Eigen::Vector2cd forcing;
};

ModeFlow mode_flow(double eps, cplx alpha, double s, double h, Representation rep = Representation::Auto);

/// Relative gap |lambda^+ - lambda^-| / max|lambda^{+-}| below which Auto
/// switches to the sinh representation.
inline constexpr double kCollisionGap = 1e-6;

/// Coefficients of the mild form for one mode:
///   u(t) = e^{t lambda^+} phi^+ + e^{t lambda^-} phi^- + Duhamel terms,
///   phi^{+-} = (-+ eps^2 lambda^{-+} phi0 +- eps phi1) / (2 sqrt(alpha^2 - eps^2 s)),
///   f^{+-}   = +- f / (2 sqrt(alpha^2 - eps^2 s)).
struct MildCoefficients {
    cplx phi_plus;
    cplx phi_minus;
    cplx forcing_plus;   ///< multiplier applied to f^(k)
    cplx forcing_minus;
};

/// Throws std::invalid_argument for real alpha.
MildCoefficients mild_coefficients(double eps, cplx alpha, double s, cplx phi0, cplx phi1);

struct LinearSolveSpec {
    ModelParams params;
    SpectralField phi0;
    SpectralField phi1;
    std::vector<SpectralField> forcing;  ///< empty, or one sample per step (piecewise constant)
    double dt = 1e-2;
    int steps = 100;

    void validate() const;
    const SpectralField* forcing_at(int step) const {
        return forcing.empty() ? nullptr : &forcing[static_cast<std::size_t>(step)];
    }
};

/// Trajectory of (u, eps u_t) at t = 0, dt, ..., steps*dt.
using Trajectory = std::vector<PairState>;

Trajectory linear_solve(const LinearSolveSpec& spec, Representation rep);
/// Mild-form solve; rejects real alpha.
Trajectory linear_solve_mild(const LinearSolveSpec& spec);
Trajectory linear_solve_sinh(const LinearSolveSpec& spec);

/// Smooth radial cutoff I: 1 on |xi| <= 1, 0 on |xi| >= 2.
double frequency_cutoff(double radius);

/// (I(eps grad) f, (1 - I(eps grad)) f).
std::pair<SpectralField, SpectralField> split_low_high(const SpectralField& f, double eps);

/// 2 alpha v_t + (1 - Delta) v = f, exact per mode; returns v at each step.
std::vector<SpectralField> heat_solve(cplx alpha, const SpectralField& phi0, const std::vector<SpectralField>& forcing,
                                      double dt, int steps);

/// v_tt + 2 alpha1 v_t + (1 - Delta) v = f with real alpha1 > 0 (sinh path).
Trajectory real_damped_wave_solve(double alpha1, const SpectralField& phi0, const SpectralField& phi1,
                                  const std::vector<SpectralField>& forcing, double dt, int steps);

struct LimitError {
    double error = 0.0;      ///< sup over time samples of the error norm
    double data_scale = 0.0; ///< right-hand side of the rate estimate without the constant
    double ratio() const { return data_scale > 0.0 ? error / data_scale : 0.0; }
};

/// sup_t ||u_eps(t) - v(t)||_{H^sigma} against the heat limit, with data
/// scale eps^theta (||phi0||_{H^{sigma+theta}} + ||phi1||_{H^{sigma-1+theta}}
/// + ||f||_{L^2_T H^{sigma-1+theta}}).
LimitError nrl_linear_error(const LinearSolveSpec& spec, double sigma, double theta);

/// sup_t ||(u, u_t) - (v, v_t)||_{H^sigma x H^{sigma-1}} between the
/// alpha1 + i alpha2 solve and the real-alpha1 solve at eps = 1. Data scale
/// is |alpha2| (||phi0||_{H^sigma} + ||phi1||_{H^{sigma-1}} + ||f||_{L^2 H^{sigma-1}}).
LimitError url_linear_error(double alpha1, double alpha2, const LinearSolveSpec& spec, double sigma);

/// ||f||_{L^2_T H^s} for piecewise-constant samples of width dt.
double forcing_l2_norm(const std::vector<SpectralField>& forcing, double dt, double s);

}  // namespace kg
