#include "kgspde/spectral.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <istream>
#include <map>
#include <mutex>
#include <numbers>
#include <ostream>

#include <json.hpp>

namespace kg {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// FFTW's planner is not thread-safe; executing an existing plan on fresh
// arrays is. Plans are built once per grid size and never destroyed.
struct PlanPair {
    fftw_plan forward;
    fftw_plan backward;
};

const PlanPair& plans_for(int m) {
    static std::mutex mu;
    static std::map<int, PlanPair> cache;
    std::lock_guard lock(mu);
    auto it = cache.find(m);
    if (it != cache.end()) return it->second;
    std::vector<cplx> a(static_cast<std::size_t>(m) * m), b(a.size());
    auto* pa = reinterpret_cast<fftw_complex*>(a.data());
    auto* pb = reinterpret_cast<fftw_complex*>(b.data());
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    PlanPair p{fftw_plan_dft_2d(m, m, pa, pb, FFTW_FORWARD, flags),
               fftw_plan_dft_2d(m, m, pa, pb, FFTW_BACKWARD, flags)};
    return cache.emplace(m, p).first->second;
}

void execute(fftw_plan plan, const std::vector<cplx>& in, std::vector<cplx>& out) {
    // fftw_execute_dft takes a non-const input pointer but does not write to
    // it for out-of-place plans.
    auto* pin = reinterpret_cast<fftw_complex*>(const_cast<cplx*>(in.data()));
    fftw_execute_dft(plan, pin, reinterpret_cast<fftw_complex*>(out.data()));
}

int wrap(int k, int m) { return ((k % m) + m) % m; }

double smooth_step(double x) {
    // 0 for x <= 0, 1 for x >= 1, C-infinity in between.
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double a = std::exp(-1.0 / x);
    const double b = std::exp(-1.0 / (1.0 - x));
    return a / (a + b);
}

double lp_low(double r) {
    constexpr double lo = 3.0 / 4.0;
    constexpr double hi = 4.0 / 3.0;
    return smooth_step((hi - r) / (hi - lo));
}

}  // namespace

// ---------------------------------------------------------------------------
// FrequencyLattice

FrequencyLattice::FrequencyLattice(int n_max, int grid_size)
    : n_max_(n_max), grid_size_(grid_size == 0 ? min_grid(n_max) : grid_size) {
    if (n_max < 0) throw std::invalid_argument("lattice: N must be >= 0");
    if (grid_size_ < min_grid(n_max))
        throw std::invalid_argument("lattice: grid size " + std::to_string(grid_size_) +
                                    " cannot resolve N = " + std::to_string(n_max) +
                                    " (need M >= 2N+2)");
    const int side = 2 * n_max + 1;
    lookup_.assign(static_cast<std::size_t>(side) * side, -1);
    for (int k1 = -n_max; k1 <= n_max; ++k1) {
        for (int k2 = -n_max; k2 <= n_max; ++k2) {
            if (k1 * k1 + k2 * k2 > n_max * n_max) continue;
            lookup_[static_cast<std::size_t>(k1 + n_max) * side + (k2 + n_max)] =
                static_cast<std::int64_t>(modes_.size());
            modes_.push_back({k1, k2});
        }
    }
    neg_.resize(modes_.size());
    for (std::size_t i = 0; i < modes_.size(); ++i) neg_[i] = *index_of(-modes_[i]);
}

std::optional<std::size_t> FrequencyLattice::index_of(Mode k) const {
    if (std::abs(k.k1) > n_max_ || std::abs(k.k2) > n_max_) return std::nullopt;
    const int side = 2 * n_max_ + 1;
    const auto v = lookup_[static_cast<std::size_t>(k.k1 + n_max_) * side + (k.k2 + n_max_)];
    if (v < 0) return std::nullopt;
    return static_cast<std::size_t>(v);
}

int FrequencyLattice::min_grid(int n_max) { return std::max(4, 2 * n_max + 2); }

int FrequencyLattice::alias_free_grid(int n_max, int degree) {
    const int need = std::max(min_grid(n_max), (degree + 1) * n_max + 1);
    // Next even size with only 2, 3, 5 as prime factors.
    for (int m = need + (need % 2);; m += 2) {
        int r = m;
        for (int p : {2, 3, 5})
            while (r % p == 0) r /= p;
        if (r == 1) return m;
    }
}

LatticePtr make_lattice(int n_max, int grid_size) {
    return std::make_shared<const FrequencyLattice>(n_max, grid_size);
}

// ---------------------------------------------------------------------------
// SpectralField

SpectralField::SpectralField(LatticePtr lattice)
    : lattice_(std::move(lattice)), coeffs_(lattice_->size(), cplx{}) {}

SpectralField::SpectralField(LatticePtr lattice, std::vector<cplx> coeffs)
    : lattice_(std::move(lattice)), coeffs_(std::move(coeffs)) {
    if (coeffs_.size() != lattice_->size())
        throw std::invalid_argument("SpectralField: coefficient count does not match lattice");
}

cplx SpectralField::at(Mode k) const {
    auto i = lattice_->index_of(k);
    return i ? coeffs_[*i] : cplx{};
}

void SpectralField::set(Mode k, cplx v) {
    auto i = lattice_->index_of(k);
    if (!i) throw std::invalid_argument("SpectralField::set: mode outside lattice");
    coeffs_[*i] = v;
}

bool SpectralField::all_finite() const {
    return std::all_of(coeffs_.begin(), coeffs_.end(),
                       [](cplx c) { return std::isfinite(c.real()) && std::isfinite(c.imag()); });
}

SpectralField& SpectralField::operator+=(const SpectralField& o) {
    if (o.size() != size()) throw std::invalid_argument("SpectralField: lattice mismatch");
    for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] += o.coeffs_[i];
    return *this;
}

SpectralField& SpectralField::operator-=(const SpectralField& o) {
    if (o.size() != size()) throw std::invalid_argument("SpectralField: lattice mismatch");
    for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] -= o.coeffs_[i];
    return *this;
}

SpectralField& SpectralField::operator*=(cplx a) {
    for (auto& c : coeffs_) c *= a;
    return *this;
}

// ---------------------------------------------------------------------------
// Transforms

PhysicalGrid to_physical(const SpectralField& f, int m) {
    const auto& lat = f.lattice();
    if (m == 0) m = lat.grid_size();
    if (m < FrequencyLattice::min_grid(lat.n_max()))
        throw std::invalid_argument("to_physical: grid too small for lattice");
    GridSpectrum spec{m, std::vector<cplx>(static_cast<std::size_t>(m) * m)};
    for (std::size_t i = 0; i < lat.size(); ++i) {
        const auto& k = lat.mode(i);
        spec.values[static_cast<std::size_t>(wrap(k.k1, m)) * m + wrap(k.k2, m)] = f[i];
    }
    return grid_inverse(spec);
}

SpectralField to_spectral(const PhysicalGrid& grid, const LatticePtr& lattice) {
    if (grid.m < FrequencyLattice::min_grid(lattice->n_max()))
        throw std::invalid_argument("to_spectral: grid of size " + std::to_string(grid.m) +
                                    " does not resolve N = " + std::to_string(lattice->n_max()));
    const auto spec = grid_forward(grid);
    SpectralField out(lattice);
    const int m = grid.m;
    for (std::size_t i = 0; i < lattice->size(); ++i) {
        const auto& k = lattice->mode(i);
        out[i] = spec.values[static_cast<std::size_t>(wrap(k.k1, m)) * m + wrap(k.k2, m)];
    }
    return out;
}

GridSpectrum grid_forward(const PhysicalGrid& grid) {
    const int m = grid.m;
    GridSpectrum out{m, std::vector<cplx>(grid.values.size())};
    execute(plans_for(m).forward, grid.values, out.values);
    const double scale = kTwoPi / (static_cast<double>(m) * m);
    for (auto& v : out.values) v *= scale;
    return out;
}

PhysicalGrid grid_inverse(const GridSpectrum& spec) {
    const int m = spec.m;
    PhysicalGrid out{m, std::vector<cplx>(spec.values.size())};
    execute(plans_for(m).backward, spec.values, out.values);
    const double scale = 1.0 / kTwoPi;
    for (auto& v : out.values) v *= scale;
    return out;
}

// ---------------------------------------------------------------------------
// Norms

double sobolev_norm(const SpectralField& f, double s) {
    const auto& lat = f.lattice();
    double acc = 0.0;
    for (std::size_t i = 0; i < lat.size(); ++i) acc += std::pow(lat.weight(i), s) * std::norm(f[i]);
    return std::sqrt(acc);
}

double pair_norm(const PairState& state, double s) {
    return sobolev_norm(state.psi, s) + sobolev_norm(state.phi, s - 1.0);
}

double littlewood_paley(int j, double radius) {
    if (j < -1) return 0.0;
    if (j == -1) return lp_low(radius);
    const double scale = std::ldexp(1.0, j);
    return lp_low(radius / (2.0 * scale)) - lp_low(radius / scale);
}

double besov_norm(const SpectralField& f, double s, BesovIntegrability q, int r) {
    if (r != 2) throw std::invalid_argument("besov_norm: only r = 2 is supported");
    const auto& lat = f.lattice();
    const double kmax = lat.n_max();
    double acc = 0.0;
    for (int j = -1; j == -1 || 0.75 * std::ldexp(1.0, j) <= kmax; ++j) {
        SpectralField block(f.lattice_ptr());
        for (std::size_t i = 0; i < lat.size(); ++i) {
            const auto& k = lat.mode(i);
            block[i] = littlewood_paley(j, std::sqrt(static_cast<double>(k.norm2()))) * f[i];
        }
        double block_norm = 0.0;
        if (q == BesovIntegrability::L2) {
            block_norm = sobolev_norm(block, 0.0);
        } else {
            const auto grid = to_physical(block);
            for (const auto& v : grid.values) block_norm = std::max(block_norm, std::abs(v));
        }
        const double term = std::pow(2.0, j * s) * block_norm;
        acc += term * term;
    }
    return std::sqrt(acc);
}

double neg_holder_proxy(const SpectralField& f, double delta, int oversample) {
    if (delta < 0.0) throw std::invalid_argument("neg_holder_proxy: delta must be >= 0");
    if (oversample < 1) throw std::invalid_argument("neg_holder_proxy: oversample must be >= 1");
    SpectralField smoothed = f;
    const auto& lat = f.lattice();
    for (std::size_t i = 0; i < lat.size(); ++i) smoothed[i] *= std::pow(lat.weight(i), -0.5 * delta);
    const auto grid = to_physical(smoothed, lat.grid_size() * oversample);
    double sup = 0.0;
    for (const auto& v : grid.values) sup = std::max(sup, std::abs(v));
    return sup;
}

void apply_bessel(GridSpectrum& spec, double delta) {
    const int m = spec.m;
    for (int i1 = 0; i1 < m; ++i1) {
        const int k1 = fft_wavenumber(i1, m);
        for (int i2 = 0; i2 < m; ++i2) {
            const int k2 = fft_wavenumber(i2, m);
            spec.values[static_cast<std::size_t>(i1) * m + i2] *=
                std::pow(1.0 + k1 * k1 + k2 * k2, -0.5 * delta);
        }
    }
}

// ---------------------------------------------------------------------------
// Serialization

void write_json(std::ostream& os, const SpectralField& f) {
    nlohmann::json j;
    j["n_max"] = f.lattice().n_max();
    auto& modes = j["modes"] = nlohmann::json::array();
    for (std::size_t i = 0; i < f.size(); ++i) {
        const auto& k = f.lattice().mode(i);
        modes.push_back({k.k1, k.k2, f[i].real(), f[i].imag()});
    }
    os << j.dump() << '\n';
}

SpectralField read_json_field(std::istream& is, int grid_size) {
    const auto j = nlohmann::json::parse(is);
    auto lattice = make_lattice(j.at("n_max").get<int>(), grid_size);
    SpectralField f(lattice);
    for (const auto& row : j.at("modes")) {
        f.set({row.at(0).get<int>(), row.at(1).get<int>()},
              {row.at(2).get<double>(), row.at(3).get<double>()});
    }
    return f;
}

namespace {
constexpr char kMagic[4] = {'K', 'G', 'S', 'F'};
}

void write_binary(std::ostream& os, const SpectralField& f) {
    os.write(kMagic, 4);
    const std::int32_t n = f.lattice().n_max();
    const std::uint64_t count = f.size();
    os.write(reinterpret_cast<const char*>(&n), sizeof n);
    os.write(reinterpret_cast<const char*>(&count), sizeof count);
    os.write(reinterpret_cast<const char*>(f.coeffs().data()),
             static_cast<std::streamsize>(count * sizeof(cplx)));
}

SpectralField read_binary_field(std::istream& is, int grid_size) {
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0)
        throw std::invalid_argument("read_binary_field: bad magic");
    std::int32_t n = 0;
    std::uint64_t count = 0;
    is.read(reinterpret_cast<char*>(&n), sizeof n);
    is.read(reinterpret_cast<char*>(&count), sizeof count);
    auto lattice = make_lattice(n, grid_size);
    if (count != lattice->size()) throw std::invalid_argument("read_binary_field: count mismatch");
    std::vector<cplx> coeffs(count);
    is.read(reinterpret_cast<char*>(coeffs.data()), static_cast<std::streamsize>(count * sizeof(cplx)));
    if (!is) throw std::invalid_argument("read_binary_field: truncated stream");
    return SpectralField(lattice, std::move(coeffs));
}

}  // namespace kg
