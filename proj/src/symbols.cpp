#include "kgspde/symbols.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace kg {

std::vector<std::string> ModelParams::violations() const {
    std::vector<std::string> out;
    if (!(eps > 0.0 && eps <= 1.0)) out.push_back("eps must lie in (0, 1]");
    if (!(alpha.real() > 0.0)) out.push_back("Re(alpha) must be > 0");
    if (degree < 1) out.push_back("nonlinearity degree n must be >= 1");
    if (n_max < 0) out.push_back("truncation N must be >= 0");
    if (!(horizon > 0.0)) out.push_back("horizon T must be > 0");
    return out;
}

void ModelParams::validate() const {
    const auto v = violations();
    if (v.empty()) return;
    std::ostringstream msg;
    msg << "invalid model parameters:";
    for (const auto& s : v) msg << ' ' << s << ';';
    throw std::invalid_argument(msg.str());
}

cplx branch_sqrt(cplx z) {
    if (z.imag() == 0.0 && z.real() < 0.0) return {0.0, std::sqrt(-z.real())};
    return std::sqrt(z);
}

cplx discriminant_root(double eps, cplx alpha, double s) {
    return branch_sqrt(alpha * alpha - eps * eps * s);
}

std::pair<cplx, cplx> lambda_pm(double eps, cplx alpha, double s) {
    const cplx r = discriminant_root(eps, alpha, s);
    const double e2 = eps * eps;
    return {-s / (alpha + r), (-alpha - r) / e2};
}

std::pair<cplx, cplx> lambda_pm(const ModelParams& p, Mode k) {
    return lambda_pm(p.eps, p.alpha, 1.0 + k.norm2());
}

cplx beta_shift(const ModelParams& p) {
    const cplx r = discriminant_root(p.eps, p.alpha, 1.0);
    return 1.0 / (p.alpha + r);
}

double damping_constant(cplx alpha) {
    return alpha.real() / (2.0 * std::norm(alpha) + 1.0);
}

bool BoundProbeReport::all_pass() const {
    return std::all_of(items.begin(), items.end(),
                       [](const BoundProbeItem& i) { return !i.applicable || i.pass; });
}

namespace {

struct MarginTracker {
    double worst = std::numeric_limits<double>::infinity();
    double arg = 0.0;
    void update(double margin, double s) {
        if (margin < worst) {
            worst = margin;
            arg = s;
        }
    }
};

BoundProbeItem finish(std::string name, std::size_t n, const MarginTracker& t) {
    return {std::move(name), n, true, t.worst >= 0.0, t.worst, t.arg};
}

}  // namespace

BoundProbeReport probe_base_bounds(cplx alpha, const std::vector<double>& s_grid) {
    if (!(alpha.real() > 0.0)) throw std::invalid_argument("probe_base_bounds: Re(alpha) must be > 0");
    std::vector<double> grid = s_grid;
    std::sort(grid.begin(), grid.end());
    const std::size_t n = grid.size();
    const double re = alpha.real();
    const double im = alpha.imag();
    const double abs_a = std::abs(alpha);
    const bool complex_alpha = im != 0.0;

    MarginTracker t1, t2, t3, t4, t5;
    double prev_re = std::numeric_limits<double>::infinity();
    const double lower2 = std::sqrt(2.0 * std::abs(re * im));
    const double upper3 = complex_alpha ? std::sqrt(1.0 + abs_a * abs_a / (2.0 * std::abs(re * im))) : 0.0;
    const double c_alpha = damping_constant(alpha);

    for (double s : grid) {
        const cplx r = discriminant_root(1.0, alpha, s);
        // (1): strict positivity, upper bound and strict decrease.
        // A zero margin on Re r or on the decrement is a failure (strict).
        double m1 = std::min(r.real(), re - r.real());
        if (r.real() <= 0.0) m1 = -1.0;
        if (std::isfinite(prev_re) && !(prev_re - r.real() > 0.0)) m1 = -1.0;
        t1.update(m1, s);
        prev_re = r.real();

        if (complex_alpha) {
            t2.update(std::abs(r) - lower2, s);
            t3.update(upper3 - std::sqrt(s) / std::abs(r), s);
        }

        // (4): Re(-alpha + r) = -Re(s / (alpha + r)).
        const double lhs4 = -(s / (alpha + r)).real();
        t4.update(-c_alpha * std::min(s, 1.0) - lhs4, s);

        // (5): remainders written without cancellation:
        //   h = r - alpha + s/(2 alpha) = -s^2 / (2 alpha (alpha + r)^2),
        //   g = r - i sqrt(s)           = alpha^2 / (r + i sqrt(s)).
        if (s < abs_a * abs_a / 2.0) {
            const cplx h = -s * s / (2.0 * alpha * (alpha + r) * (alpha + r));
            t5.update(8.0 * s * s / (abs_a * abs_a * abs_a) - std::abs(h), s);
        } else if (s > 2.0 * abs_a * abs_a) {
            const cplx g = alpha * alpha / (r + cplx{0.0, std::sqrt(s)});
            t5.update(6.0 * abs_a * abs_a / std::sqrt(s) - std::abs(g), s);
        }
    }

    BoundProbeReport rep{alpha, {}};
    rep.items.push_back(finish("re_sqrt_bounds_and_monotone", n, t1));
    if (complex_alpha) {
        rep.items.push_back(finish("modulus_lower_bound", n, t2));
        rep.items.push_back(finish("ratio_bound", n, t3));
    } else {
        rep.items.push_back({"modulus_lower_bound", n, false, false, 0.0, 0.0});
        rep.items.push_back({"ratio_bound", n, false, false, 0.0, 0.0});
    }
    rep.items.push_back(finish("damping_gap", n, t4));
    rep.items.push_back(finish("asymptotic_expansions", n, t5));
    return rep;
}

std::vector<double> logspace(double lo, double hi, std::size_t count) {
    std::vector<double> out(count);
    if (count == 1) {
        out[0] = lo;
        return out;
    }
    const double a = std::log10(lo);
    const double b = std::log10(hi);
    for (std::size_t i = 0; i < count; ++i)
        out[i] = std::pow(10.0, a + (b - a) * static_cast<double>(i) / static_cast<double>(count - 1));
    return out;
}

}  // namespace kg
