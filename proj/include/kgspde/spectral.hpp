#pragma once

#include <complex>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace kg {

using cplx = std::complex<double>;

/// Raised when a numerical invariant breaks at run time (non-finite state,
/// indefinite covariance, ...). Precondition violations use
/// std::invalid_argument instead.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Mode {
    int k1 = 0;
    int k2 = 0;

    int norm2() const { return k1 * k1 + k2 * k2; }
    Mode operator-() const { return {-k1, -k2}; }
    friend bool operator==(const Mode&, const Mode&) = default;
};

/// Truncated index set {k in Z^2 : |k| <= N}.
///
/// Modes are stored in lexicographic order of (k1, k2). The physical grid
/// size M is carried along so that transforms and nonlinear products know
/// how finely to sample; it must satisfy M >= 2N + 2.
class FrequencyLattice {
public:
    explicit FrequencyLattice(int n_max, int grid_size = 0);

    int n_max() const { return n_max_; }
    int grid_size() const { return grid_size_; }
    std::size_t size() const { return modes_.size(); }
    const std::vector<Mode>& modes() const { return modes_; }
    const Mode& mode(std::size_t i) const { return modes_[i]; }

    /// <k>^2 = 1 + |k|^2.
    double weight(std::size_t i) const { return 1.0 + modes_[i].norm2(); }

    std::optional<std::size_t> index_of(Mode k) const;
    /// Index of -k; always present since the set is symmetric.
    std::size_t negated(std::size_t i) const { return neg_[i]; }

    /// Smallest grid size accepted for the lattice (2N + 2, at least 4).
    static int min_grid(int n_max);

    /// Grid size able to hold the product of `degree` lattice fields without
    /// aliasing back onto the lattice: M >= (degree + 1) N + 1.
    static int alias_free_grid(int n_max, int degree);

    friend bool operator==(const FrequencyLattice& a, const FrequencyLattice& b) {
        return a.n_max_ == b.n_max_ && a.grid_size_ == b.grid_size_;
    }

private:
    int n_max_;
    int grid_size_;
    std::vector<Mode> modes_;
    std::vector<std::size_t> neg_;
    std::vector<std::int64_t> lookup_;  // (k1+N)*(2N+1)+(k2+N) -> index or -1
};

using LatticePtr = std::shared_ptr<const FrequencyLattice>;

LatticePtr make_lattice(int n_max, int grid_size = 0);

/// Fourier coefficients f^(k) = <f, e_k> of a function on T^2, with
/// e_k(x) = (2 pi)^{-1} exp(i k.x).
class SpectralField {
public:
    SpectralField() = default;
    explicit SpectralField(LatticePtr lattice);
    SpectralField(LatticePtr lattice, std::vector<cplx> coeffs);

    const FrequencyLattice& lattice() const { return *lattice_; }
    const LatticePtr& lattice_ptr() const { return lattice_; }
    std::size_t size() const { return coeffs_.size(); }

    std::span<cplx> coeffs() { return coeffs_; }
    std::span<const cplx> coeffs() const { return coeffs_; }
    cplx& operator[](std::size_t i) { return coeffs_[i]; }
    const cplx& operator[](std::size_t i) const { return coeffs_[i]; }

    /// Coefficient at mode k, zero if k lies outside the lattice.
    cplx at(Mode k) const;
    void set(Mode k, cplx v);

    bool all_finite() const;

    SpectralField& operator+=(const SpectralField& o);
    SpectralField& operator-=(const SpectralField& o);
    SpectralField& operator*=(cplx a);
    friend SpectralField operator+(SpectralField a, const SpectralField& b) { return a += b; }
    friend SpectralField operator-(SpectralField a, const SpectralField& b) { return a -= b; }
    friend SpectralField operator*(cplx a, SpectralField f) { return f *= a; }

private:
    LatticePtr lattice_;
    std::vector<cplx> coeffs_;
};

/// Phase-space point (psi, phi) with phi = eps * d/dt psi.
struct PairState {
    SpectralField psi;
    SpectralField phi;

    static PairState zeros(const LatticePtr& lattice) {
        return {SpectralField(lattice), SpectralField(lattice)};
    }
};

/// Uniform M x M samples, row-major in (x1, x2) with x_j = 2 pi j / M.
struct PhysicalGrid {
    int m = 0;
    std::vector<cplx> values;

    cplx& operator()(int i1, int i2) { return values[static_cast<std::size_t>(i1) * m + i2]; }
    cplx operator()(int i1, int i2) const { return values[static_cast<std::size_t>(i1) * m + i2]; }
};

/// Full M x M discrete spectrum g(k) for |k1|,|k2| < M/2 (FFT layout), with
/// the same normalization as SpectralField coefficients.
struct GridSpectrum {
    int m = 0;
    std::vector<cplx> values;
};

/// Sum_k f^(k) e_k(x) on the M x M grid; M = 0 uses the lattice grid size.
PhysicalGrid to_physical(const SpectralField& f, int m = 0);

/// Trapezoidal Fourier coefficients restricted to `lattice`. Requires
/// grid.m >= 2N + 2.
SpectralField to_spectral(const PhysicalGrid& grid, const LatticePtr& lattice);

GridSpectrum grid_forward(const PhysicalGrid& grid);
PhysicalGrid grid_inverse(const GridSpectrum& spec);

/// Wavenumber of FFT index j on an M-point axis.
inline int fft_wavenumber(int j, int m) { return j <= m / 2 ? j : j - m; }

/// ||f||_{H^s}^2 = sum <k>^{2s} |f^(k)|^2.
double sobolev_norm(const SpectralField& f, double s);

/// Norm on H^s x H^{s-1} used for (u, eps u_t) pairs: the sum of both parts.
double pair_norm(const PairState& state, double s);

enum class BesovIntegrability { L2, LInf };

/// Smooth inhomogeneous Littlewood-Paley partition: chi_{-1} = 1 on
/// |xi| <= 3/4, 0 beyond 4/3; chi_j(xi) = chi_0(2^{-j} xi) supported in
/// 3/4 2^j <= |xi| <= 8/3 2^j; sum_j chi_j = 1.
double littlewood_paley(int j, double radius);

/// ||(2^{js} ||Delta_j f||_{L^q})_j||_{l^r}. Only r = 2 is supported; LInf
/// blocks are sampled on the lattice grid.
double besov_norm(const SpectralField& f, double s, BesovIntegrability q, int r = 2);

/// sup over the grid of |<grad>^{-delta} f|, with the grid refined by
/// `oversample`.
double neg_holder_proxy(const SpectralField& f, double delta, int oversample = 1);

/// Apply the Fourier multiplier <k>^{-delta} to a full grid spectrum.
void apply_bessel(GridSpectrum& spec, double delta);

// Serialization: modes in lexicographic (k1, k2) order.
void write_json(std::ostream& os, const SpectralField& f);
SpectralField read_json_field(std::istream& is, int grid_size = 0);
void write_binary(std::ostream& os, const SpectralField& f);
SpectralField read_binary_field(std::istream& is, int grid_size = 0);

}  // namespace kg
