#include "kgspde/wick.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace kg {

namespace {

double binom(int n, int k) {
    if (k < 0 || k > n) return 0.0;
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

double factorial(int n) {
    double r = 1.0;
    for (int i = 2; i <= n; ++i) r *= i;
    return r;
}

cplx ipow(cplx z, int p) {
    cplx r = 1.0;
    for (int i = 0; i < p; ++i) r *= z;
    return r;
}

// H_{m,n}(z) = z^{m-p} zbar^{n-p} sum_j c_j |z|^{2(p-j)}, p = min(m, n).
struct HermiteCoeffs {
    int m, n, p;
    std::vector<double> c;

    HermiteCoeffs(int m_, int n_, double sigma) : m(m_), n(n_), p(std::min(m_, n_)), c(p + 1) {
        if (m < 0 || n < 0) throw std::invalid_argument("hermite: degrees must be >= 0");
        for (int j = 0; j <= p; ++j) c[j] = std::pow(-sigma, j) * factorial(j) * binom(m, j) * binom(n, j);
    }

    cplx operator()(cplx z) const {
        const double r2 = std::norm(z);
        double poly = 0.0;
        for (int j = 0; j <= p; ++j) poly = poly * r2 + c[j];
        return ipow(z, m - p) * ipow(std::conj(z), n - p) * poly;
    }
};

void check_sigma(double sigma) {
    if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw std::invalid_argument("hermite: sigma must be >= 0");
}

}  // namespace

double c_n(int n_max) {
    if (n_max < 0) throw std::invalid_argument("c_n: N must be >= 0");
    double acc = 0.0;
    for (int k1 = -n_max; k1 <= n_max; ++k1)
        for (int k2 = -n_max; k2 <= n_max; ++k2)
            if (k1 * k1 + k2 * k2 <= n_max * n_max) acc += 2.0 / (1.0 + k1 * k1 + k2 * k2);
    return acc;
}

double wick_variance(int n_max) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    return c_n(n_max) / (two_pi * two_pi);
}

cplx hermite_eval(int m, int n, double sigma, cplx z) {
    check_sigma(sigma);
    return HermiteCoeffs(m, n, sigma)(z);
}

double hermite_translation_residual(int m, int n, double sigma, cplx z, cplx w) {
    const cplx lhs = hermite_eval(m, n, sigma, z + w);
    cplx rhs = 0.0;
    for (int a = 0; a <= m; ++a)
        for (int b = 0; b <= n; ++b)
            rhs += binom(m, a) * binom(n, b) * ipow(w, m - a) * ipow(std::conj(w), n - b) * hermite_eval(a, b, sigma, z);
    return std::abs(lhs - rhs);
}

double hermite_wirtinger_residual(int m, int n, double sigma, cplx z, double step) {
    if (n < 1) throw std::invalid_argument("hermite_wirtinger_residual: need n >= 1");
    const cplx dx = (hermite_eval(m, n, sigma, z + step) - hermite_eval(m, n, sigma, z - step)) / (2.0 * step);
    const cplx iy{0.0, step};
    const cplx dy = (hermite_eval(m, n, sigma, z + iy) - hermite_eval(m, n, sigma, z - iy)) / (2.0 * step);
    const cplx dzbar = 0.5 * (dx + cplx{0.0, 1.0} * dy);
    return std::abs(dzbar - static_cast<double>(n) * hermite_eval(m, n - 1, sigma, z));
}

cplx hermite_generating_partial(int order, double sigma, cplx z, cplx t) {
    cplx acc = 0.0;
    for (int m = 0; m <= order; ++m)
        for (int n = 0; n <= order; ++n)
            acc += ipow(std::conj(t), m) * ipow(t, n) / (factorial(m) * factorial(n)) * hermite_eval(m, n, sigma, z);
    return acc;
}

McEstimate orthogonality_mc(int m, int n, int k, int l, double sx, double sy, cplx cross, int samples,
                            const NoiseStream& stream) {
    if (samples < 2) throw std::invalid_argument("orthogonality_mc: need at least 2 samples");
    if (!(sx > 0.0) || !(sy > 0.0)) throw std::invalid_argument("orthogonality_mc: variances must be > 0");
    const double rest = sy - std::norm(cross) / sx;
    if (rest < -1e-14 * sy)
        throw std::invalid_argument("orthogonality_mc: infeasible covariance, |E[Xbar Y]|^2 > sx sy");
    // Y = (cross / sx) X + sqrt(rest) xi gives E[Xbar Y] = cross.
    const HermiteCoeffs hx(m, n, sx), hy(k, l, sy);
    const double sd_rest = std::sqrt(std::max(rest, 0.0));
    cplx mean = 0.0;
    double m2r = 0.0, m2i = 0.0;
    for (int i = 0; i < samples; ++i) {
        const auto s = static_cast<std::uint64_t>(i);
        const cplx x = std::sqrt(sx) * stream.complex_normal(s, 0, 0);
        const cplx y = cross / sx * x + sd_rest * stream.complex_normal(s, 0, 1);
        const cplx v = hx(x) * hy(y);
        const cplx d = v - mean;
        mean += d / static_cast<double>(i + 1);
        const cplx d2 = v - mean;
        m2r += d.real() * d2.real();
        m2i += d.imag() * d2.imag();
    }
    const double denom = static_cast<double>(samples - 1) * samples;
    return {mean, std::sqrt(std::max(m2r, m2i) / denom)};
}

cplx orthogonality_exact(int m, int n, int k, int l, cplx cross) {
    if (m != l || n != k) return 0.0;
    // E[H_{m,n}(X) H_{n,m}(Y)] = m! n! E[Xbar Y]^n E[X Ybar]^m.
    return factorial(m) * factorial(n) * ipow(cross, n) * ipow(std::conj(cross), m);
}

PhysicalGrid wick_power_grid(const SpectralField& z, int m, int n, double sigma, int grid) {
    check_sigma(sigma);
    const HermiteCoeffs h(m, n, sigma);
    auto g = to_physical(z, grid);
    for (auto& v : g.values) v = h(v);
    return g;
}

SpectralField wick_power_field(const SpectralField& z, int m, int n, double sigma) {
    const int grid = FrequencyLattice::alias_free_grid(z.lattice().n_max(), m + n);
    return to_spectral(wick_power_grid(z, m, n, sigma, grid), z.lattice_ptr());
}

const PhysicalGrid& WickTable::at(int k, int l) const {
    auto it = entries.find({k, l});
    if (it == entries.end())
        throw std::invalid_argument("wick table: missing entry (" + std::to_string(k) + "," + std::to_string(l) + ")");
    return it->second;
}

WickTable make_wick_table(const SpectralField& z, int n, double sigma) {
    check_sigma(sigma);
    if (n < 1) throw std::invalid_argument("make_wick_table: degree must be >= 1");
    WickTable t;
    t.degree = n;
    t.sigma = sigma;
    t.lattice = z.lattice_ptr();
    t.grid = FrequencyLattice::alias_free_grid(z.lattice().n_max(), 2 * n + 1);
    const auto zg = to_physical(z, t.grid);
    for (int k = 0; k <= n + 1; ++k)
        for (int l = 0; l <= n; ++l) {
            const HermiteCoeffs h(k, l, sigma);
            PhysicalGrid g{t.grid, zg.values};
            for (auto& v : g.values) v = h(v);
            t.entries.emplace(std::make_pair(k, l), std::move(g));
        }
    return t;
}

WickTable zero_wick_table(const LatticePtr& lattice, int n, double sigma) {
    return make_wick_table(SpectralField(lattice), n, sigma);
}

SpectralField renormalized_nonlinearity(const SpectralField& u, const WickTable& table, int n) {
    if (n != table.degree) throw std::invalid_argument("renormalized_nonlinearity: degree does not match table");
    if (u.lattice().n_max() != table.lattice->n_max())
        throw std::invalid_argument("renormalized_nonlinearity: lattice does not match table");
    const int m = table.grid;
    const auto ug = to_physical(u, m);
    PhysicalGrid out{m, std::vector<cplx>(ug.values.size())};
    for (int k = 0; k <= n + 1; ++k)
        for (int l = 0; l <= n; ++l) {
            const double c = binom(n + 1, k) * binom(n, l);
            const auto& w = table.at(k, l);
            for (std::size_t i = 0; i < out.values.size(); ++i) {
                const cplx uv = ug.values[i];
                out.values[i] += c * ipow(uv, n + 1 - k) * ipow(std::conj(uv), n - l) * w.values[i];
            }
        }
    return to_spectral(out, u.lattice_ptr());
}

SpectralField galerkin_nonlinearity(const SpectralField& psi, int n, double sigma) {
    const int grid = FrequencyLattice::alias_free_grid(psi.lattice().n_max(), 2 * n + 1);
    return to_spectral(wick_power_grid(psi, n + 1, n, sigma, grid), psi.lattice_ptr());
}

}  // namespace kg
