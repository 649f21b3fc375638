#pragma once

#include <map>
#include <utility>

#include "kgspde/rng.hpp"
#include "kgspde/spectral.hpp"

namespace kg {

/// C_N = sum_{|k| <= N} 2 / <k>^2, the summed mode variances of Pi_N Z.
double c_n(int n_max);

/// Pointwise variance E|Pi_N Z(x)|^2 = C_N / (2 pi)^2 under the e_k
/// normalization. This is the sigma used for Wick renormalization.
double wick_variance(int n_max);

struct HermiteSpec {
    int m = 0;
    int n = 0;
    double sigma = 0.0;
};

/// H_{m,n}(z; sigma) = sum_j (-sigma)^j j! C(m,j) C(n,j) z^{m-j} zbar^{n-j}.
cplx hermite_eval(int m, int n, double sigma, cplx z);
inline cplx hermite_eval(const HermiteSpec& h, cplx z) { return hermite_eval(h.m, h.n, h.sigma, z); }

/// |H_{m,n}(z+w) - sum C(m,m')C(n,n') w^{m-m'} wbar^{n-n'} H_{m',n'}(z)|.
double hermite_translation_residual(int m, int n, double sigma, cplx z, cplx w);

/// |d/dzbar H_{m,n}(z) - n H_{m,n-1}(z)| with a central difference of the
/// Wirtinger derivative (d_x + i d_y)/2.
double hermite_wirtinger_residual(int m, int n, double sigma, cplx z, double step = 1e-5);

/// sum_{m,n <= order} tbar^m t^n / (m! n!) H_{m,n}(z; sigma).
cplx hermite_generating_partial(int order, double sigma, cplx z, cplx t);

struct McEstimate {
    cplx mean;
    double se = 0.0;  ///< standard error of the real and imaginary parts, max of the two
};

/// Monte-Carlo E[H_{m,n}(X; sx) H_{k,l}(Y; sy)] for jointly circular (X, Y)
/// with E|X|^2 = sx, E|Y|^2 = sy and E[Xbar Y] = cross.
McEstimate orthogonality_mc(int m, int n, int k, int l, double sx, double sy, cplx cross, int samples,
                            const NoiseStream& stream);
/// 1_{m=l, n=k} m! n! cross^m conj(cross)^n.
cplx orthogonality_exact(int m, int n, int k, int l, cplx cross);

/// Pointwise H_{m,n}(Pi_N Z; sigma) on an M x M grid (unprojected).
PhysicalGrid wick_power_grid(const SpectralField& z, int m, int n, double sigma, int grid);

/// Pi_N H_{m,n}(Z; sigma), evaluated on an alias-free grid for degree m + n.
SpectralField wick_power_field(const SpectralField& z, int m, int n, double sigma);

/// Grid values of H_{k,l}(Pi_N Z; sigma) for k <= n + 1, l <= n, on a grid
/// alias-free for degree 2n + 1 products.
struct WickTable {
    int degree = 1;
    double sigma = 0.0;
    LatticePtr lattice;
    int grid = 0;
    std::map<std::pair<int, int>, PhysicalGrid> entries;

    const PhysicalGrid& at(int k, int l) const;
};

WickTable make_wick_table(const SpectralField& z, int n, double sigma);
/// Table of Z = 0: H_{k,l}(0; sigma) = 1_{k=l} k! (-sigma)^k.
WickTable zero_wick_table(const LatticePtr& lattice, int n, double sigma);

/// Pi_N :(U + Z)^{n+1} (Ubar + Zbar)^n: expanded binomially in powers of U
/// with the Wick powers of Z taken from the table.
SpectralField renormalized_nonlinearity(const SpectralField& u, const WickTable& table, int n);

/// Pi_N H_{n+1,n}(Pi_N psi; sigma), the Galerkin nonlinearity.
SpectralField galerkin_nonlinearity(const SpectralField& psi, int n, double sigma);

}  // namespace kg
