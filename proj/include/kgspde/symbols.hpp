#pragma once

#include <string>
#include <utility>
#include <vector>

#include "kgspde/spectral.hpp"

namespace kg {

/// Model parameters of eps^2 u_tt + 2 alpha u_t + (1 - Delta) u + ... = noise.
struct ModelParams {
    double eps = 1.0;          ///< inverse speed of light, in (0, 1]
    cplx alpha{1.0, 1.0};      ///< complex damping, Re alpha > 0
    int degree = 1;            ///< nonlinearity |u|^{2n} u, n >= 1
    int n_max = 4;             ///< Galerkin truncation N
    double horizon = 1.0;      ///< final time T

    /// Every violated constraint, in a human-readable form. Empty if valid.
    std::vector<std::string> violations() const;
    void validate() const;
};

/// Principal square root with arg in (-pi/2, pi/2]: sqrt(e^{i theta}) =
/// e^{i theta/2} for theta in (-pi, pi]. Negative reals map to +i sqrt|z|
/// regardless of the sign of a zero imaginary part.
cplx branch_sqrt(cplx z);

/// sqrt(alpha^2 - eps^2 s), the discriminant root shared by every symbol.
cplx discriminant_root(double eps, cplx alpha, double s);

/// lambda^{+-} = (-alpha +- sqrt(alpha^2 - eps^2 s)) / eps^2, with s = <k>^2.
/// lambda^+ is evaluated as -s / (alpha + sqrt(...)) to avoid cancellation
/// as eps -> 0.
std::pair<cplx, cplx> lambda_pm(double eps, cplx alpha, double s);
std::pair<cplx, cplx> lambda_pm(const ModelParams& p, Mode k);

/// beta = (alpha - sqrt(alpha^2 - eps^2)) / eps^2.
cplx beta_shift(const ModelParams& p);

/// Lower constant C_alpha = Re alpha / (2 |alpha|^2 + 1) of
/// Re(-alpha + sqrt(alpha^2 - s)) <= -C_alpha min(s, 1).
double damping_constant(cplx alpha);

struct BoundProbeItem {
    std::string item;
    std::size_t grid_size = 0;
    bool applicable = true;
    bool pass = false;
    double worst_margin = 0.0;  ///< min over the grid of (bound - value); >= 0 passes
    double argmin_s = 0.0;
};

struct BoundProbeReport {
    cplx alpha;
    std::vector<BoundProbeItem> items;
    bool all_pass() const;
};

/// Pointwise checks of the five base estimates on sqrt(alpha^2 - s):
/// (1) 0 < Re sqrt <= Re alpha, strictly decreasing in s;
/// (2) |sqrt| >= sqrt(2 |Re alpha Im alpha|);
/// (3) |sqrt(s) / sqrt| <= sqrt(1 + |alpha|^2 / (2 |Re alpha Im alpha|));
/// (4) Re(-alpha + sqrt) <= -C_alpha min(s, 1);
/// (5) both asymptotic expansions with remainder constants 8 and 6.
/// Items (2) and (3) are reported as not applicable when Im alpha = 0.
BoundProbeReport probe_base_bounds(cplx alpha, const std::vector<double>& s_grid);

std::vector<double> logspace(double lo, double hi, std::size_t count);

}  // namespace kg
