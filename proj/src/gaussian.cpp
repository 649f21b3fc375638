#include "kgspde/gaussian.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <ostream>

namespace kg {

using Eigen::Matrix2cd;
using Eigen::MatrixXcd;
using Eigen::Vector2cd;
using Eigen::VectorXcd;

cplx sample_complex_normal(double r, const NoiseStream& stream, std::uint64_t step, std::uint32_t mode,
                           std::uint32_t component) {
    if (r < 0.0 || !std::isfinite(r)) throw std::invalid_argument("sample_complex_normal: variance must be >= 0");
    if (r == 0.0) return 0.0;
    return std::sqrt(r) * stream.complex_normal(step, mode, component);
}

SpectralField sample_mu0(const LatticePtr& lattice, const NoiseStream& stream, std::uint64_t draw) {
    SpectralField psi(lattice);
    for (std::size_t i = 0; i < lattice->size(); ++i)
        psi[i] = sample_complex_normal(2.0 / lattice->weight(i), stream, draw, mode_key(lattice->mode(i)), kPsiDraw);
    return psi;
}

PairState sample_mu(const LatticePtr& lattice, const NoiseStream& stream, std::uint64_t draw) {
    PairState out{sample_mu0(lattice, stream, draw), SpectralField(lattice)};
    for (std::size_t i = 0; i < lattice->size(); ++i)
        out.phi[i] = sample_complex_normal(2.0, stream, draw, mode_key(lattice->mode(i)), kPhiDraw);
    return out;
}

Matrix2cd ModeOU::drift() const {
    Matrix2cd a;
    a << 0.0, 1.0 / eps, -s / eps, -2.0 * alpha / (eps * eps);
    return a;
}

Matrix2cd ModeOU::diffusion() const {
    // B = (0, 2 sqrt(Re alpha)/eps)^T and E[dW dW-bar] = 2 dt (real and
    // imaginary parts are independent standard Brownian motions), so the
    // generator sees B B* times 2.
    Matrix2cd d = Matrix2cd::Zero();
    d(1, 1) = 8.0 * alpha.real() / (eps * eps);
    return d;
}

Matrix2cd ModeOU::stationary_covariance() const {
    Matrix2cd c = Matrix2cd::Zero();
    c(0, 0) = 2.0 / s;
    c(1, 1) = 2.0;
    return c;
}

Matrix2cd ModeOU::lyapunov_residual() const {
    const Matrix2cd a = drift();
    const Matrix2cd sig = stationary_covariance();
    return a * sig + sig * a.adjoint() + diffusion();
}

MatrixXcd psd_factor(const MatrixXcd& cov) {
    const MatrixXcd h = 0.5 * (cov + cov.adjoint());
    Eigen::SelfAdjointEigenSolver<MatrixXcd> es(h);
    if (es.info() != Eigen::Success) throw NumericalError("psd_factor: eigen-decomposition failed");
    const auto& mu = es.eigenvalues();
    const double scale = std::max(1.0, mu.cwiseAbs().maxCoeff());
    VectorXcd root(mu.size());
    for (Eigen::Index i = 0; i < mu.size(); ++i) {
        if (mu(i) < -1e-10 * scale)
            throw NumericalError("transition covariance is not positive semidefinite (eigenvalue " +
                                 std::to_string(mu(i)) + ")");
        root(i) = std::sqrt(std::max(mu(i), 0.0));
    }
    return es.eigenvectors() * root.asDiagonal();
}

namespace {

// int_0^h e^{As} D e^{A*s} ds in the eigenbasis of A; accurate for small h.
Matrix2cd eigen_covariance(const ModeOU& ou, double h, const Matrix2cd& d) {
    const auto [lp, lm] = lambda_pm(ou.eps, ou.alpha, ou.s);
    Matrix2cd v;
    v << 1.0, 1.0, ou.eps * lp, ou.eps * lm;
    const Matrix2cd vinv = v.inverse();
    const Matrix2cd g = vinv * d * vinv.adjoint();
    const cplx lam[2] = {lp, lm};
    Matrix2cd inner;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) inner(i, j) = g(i, j) * phi1(lam[i] + std::conj(lam[j]), h);
    return v * inner * v.adjoint();
}

}  // namespace

OUTransition ou_transition(const ModeOU& ou, double dt, double noise_scale) {
    if (!(dt >= 0.0)) throw std::invalid_argument("ou_transition: dt must be >= 0");
    if (!(ou.alpha.real() > 0.0) || !(ou.eps > 0.0)) throw std::invalid_argument("ou_transition: invalid parameters");
    OUTransition tr;
    // The (Z, Y) pair is exactly the (u, eps u_t) pair of the wave flow.
    tr.propagator = mode_flow(ou.eps, ou.alpha, ou.s, dt, Representation::Auto).propagator;
    const double scale2 = noise_scale * noise_scale;
    if (dt == 0.0 || scale2 == 0.0) {
        tr.covariance.setZero();
        tr.factor.setZero();
        return tr;
    }
    const auto [lp, lm] = lambda_pm(ou.eps, ou.alpha, ou.s);
    const bool collide = ou.alpha.imag() == 0.0 ||
                         std::abs(lp - lm) < kCovarianceCollisionGap * std::max(std::abs(lp), std::abs(lm));
    if (collide) {
        // Sigma solves the Lyapunov equation, so Q(h) = Sigma - P Sigma P*.
        const Matrix2cd sig = ou.stationary_covariance();
        tr.covariance = scale2 * (sig - tr.propagator * sig * tr.propagator.adjoint());
    } else {
        tr.covariance = scale2 * eigen_covariance(ou, dt, ou.diffusion());
    }
    tr.covariance = 0.5 * (tr.covariance + tr.covariance.adjoint()).eval();
    tr.factor = psd_factor(tr.covariance);
    return tr;
}

Vector2cd ou_exact_step(const Vector2cd& x, const OUTransition& tr, const NoiseStream& stream, std::uint64_t step,
                        std::uint32_t mode) {
    const Vector2cd xi(stream.complex_normal(step, mode, 0), stream.complex_normal(step, mode, 1));
    return tr.propagator * x + tr.factor * xi;
}

Vector2cd ou_exact_step(const Vector2cd& x, double dt, const ModeOU& ou, const NoiseStream& stream,
                        std::uint64_t step, std::uint32_t mode) {
    return ou_exact_step(x, ou_transition(ou, dt), stream, step, mode);
}

Trajectory sample_Z_trajectory(const ModelParams& p, double dt, int steps, const PairState& initial,
                               const NoiseStream& stream, double noise_scale) {
    if (!(dt > 0.0) || steps < 0) throw std::invalid_argument("sample_Z_trajectory: need dt > 0 and steps >= 0");
    const auto& lat = initial.psi.lattice();
    std::vector<OUTransition> tr(lat.size());
    std::vector<std::uint32_t> keys(lat.size());
    for (std::size_t i = 0; i < lat.size(); ++i) {
        tr[i] = ou_transition({p.eps, p.alpha, lat.weight(i)}, dt, noise_scale);
        keys[i] = mode_key(lat.mode(i));
    }
    Trajectory out;
    out.reserve(static_cast<std::size_t>(steps) + 1);
    out.push_back(initial);
    for (int n = 0; n < steps; ++n) {
        PairState next = out.back();
        for (std::size_t i = 0; i < lat.size(); ++i) {
            const Vector2cd y = ou_exact_step({next.psi[i], next.phi[i]}, tr[i], stream,
                                              static_cast<std::uint64_t>(n), keys[i]);
            next.psi[i] = y(0);
            next.phi[i] = y(1);
        }
        out.push_back(std::move(next));
    }
    return out;
}

CglTransition cgl_transition(cplx alpha, double s, double dt, double noise_scale) {
    if (!(alpha.real() > 0.0)) throw std::invalid_argument("cgl_transition: Re(alpha) must be > 0");
    if (!(dt >= 0.0)) throw std::invalid_argument("cgl_transition: dt must be >= 0");
    const cplx c = s / (2.0 * alpha);
    const double b2 = alpha.real() / std::norm(alpha);
    const double rc = c.real();
    // Var = |b|^2 * 2 * (1 - e^{-2 Re c dt}) / (2 Re c).
    const double var = noise_scale * noise_scale * b2 * 2.0 * (-std::expm1(-2.0 * rc * dt)) / (2.0 * rc);
    return {std::exp(-c * dt), -expm1_complex(-c * dt) / s, std::sqrt(var)};
}

double cgl_lyapunov_residual(cplx alpha, double s) {
    const cplx c = s / (2.0 * alpha);
    const double b2 = alpha.real() / std::norm(alpha);
    return 2.0 * c.real() * (2.0 / s) - 2.0 * b2;
}

cplx cgl_ou_exact_step(cplx z, const CglTransition& tr, const NoiseStream& stream, std::uint64_t step,
                       std::uint32_t mode) {
    return tr.decay * z + tr.stddev * stream.complex_normal(step, mode, 0);
}

CoupledBlock wave_block(double eps, cplx alpha, double s, double dt) {
    const ModeOU ou{eps, alpha, s};
    CoupledBlock b;
    b.drift = ou.drift();
    b.noise = Eigen::Vector2cd(0.0, 2.0 * std::sqrt(alpha.real()) / eps);
    b.propagator = mode_flow(eps, alpha, s, dt, Representation::Auto).propagator;
    return b;
}

CoupledBlock cgl_block(cplx alpha, double s, double dt) {
    CoupledBlock b;
    b.drift = MatrixXcd::Constant(1, 1, -s / (2.0 * alpha));
    b.noise = VectorXcd::Constant(1, std::sqrt(alpha.real()) / alpha);
    b.propagator = MatrixXcd::Constant(1, 1, std::exp(-s / (2.0 * alpha) * dt));
    return b;
}

MatrixXcd coupled_stationary_covariance(const std::vector<CoupledBlock>& blocks) {
    Eigen::Index total = 0;
    std::vector<Eigen::Index> off;
    for (const auto& b : blocks) {
        off.push_back(total);
        total += b.drift.rows();
    }
    MatrixXcd sig = MatrixXcd::Zero(total, total);
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        for (std::size_t j = 0; j < blocks.size(); ++j) {
            const auto& mi = blocks[i].drift;
            const auto& mj = blocks[j].drift;
            const Eigen::Index di = mi.rows(), dj = mj.rows();
            // vec(M_i X + X M_j*) = (I (x) M_i + conj(M_j) (x) I) vec(X), column-major.
            MatrixXcd op = MatrixXcd::Zero(di * dj, di * dj);
            for (Eigen::Index c = 0; c < dj; ++c)
                for (Eigen::Index r = 0; r < di; ++r)
                    for (Eigen::Index k = 0; k < di; ++k) op(c * di + r, c * di + k) += mi(r, k);
            for (Eigen::Index c = 0; c < dj; ++c)
                for (Eigen::Index k = 0; k < dj; ++k)
                    for (Eigen::Index r = 0; r < di; ++r) op(c * di + r, k * di + r) += std::conj(mj(c, k));
            const MatrixXcd rhs = -2.0 * blocks[i].noise * blocks[j].noise.adjoint();
            const VectorXcd x = op.fullPivLu().solve(Eigen::Map<const VectorXcd>(rhs.data(), di * dj));
            sig.block(off[i], off[j], di, dj) = Eigen::Map<const MatrixXcd>(x.data(), di, dj);
        }
    }
    return 0.5 * (sig + sig.adjoint());
}

CoupledTransition coupled_transition(const std::vector<CoupledBlock>& blocks) {
    CoupledTransition tr;
    Eigen::Index total = 0;
    for (const auto& b : blocks) {
        tr.offsets.push_back(total);
        total += b.drift.rows();
    }
    tr.propagator = MatrixXcd::Zero(total, total);
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        const auto d = blocks[i].drift.rows();
        tr.propagator.block(tr.offsets[i], tr.offsets[i], d, d) = blocks[i].propagator;
    }
    tr.stationary = coupled_stationary_covariance(blocks);
    tr.covariance = tr.stationary - tr.propagator * tr.stationary * tr.propagator.adjoint();
    tr.covariance = 0.5 * (tr.covariance + tr.covariance.adjoint()).eval();
    tr.factor = psd_factor(tr.covariance);
    return tr;
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj, double dt, const NoiseStream& stream) {
    os << "# seed=" << stream.seed() << " trajectory=" << stream.trajectory() << " dt=" << dt << '\n';
    os << "t,k1,k2,re_z,im_z,re_y,im_y\n";
    os.precision(17);
    for (std::size_t n = 0; n < traj.size(); ++n) {
        const auto& st = traj[n];
        const auto& lat = st.psi.lattice();
        for (std::size_t i = 0; i < lat.size(); ++i) {
            os << dt * static_cast<double>(n) << ',' << lat.mode(i).k1 << ',' << lat.mode(i).k2 << ','
               << st.psi[i].real() << ',' << st.psi[i].imag() << ',' << st.phi[i].real() << ','
               << st.phi[i].imag() << '\n';
        }
    }
}

void write_trajectory_binary(std::ostream& os, const Trajectory& traj, double dt, const NoiseStream& stream) {
    // "KGTR", seed u64, trajectory u32, N i32, dt f64, samples u64, then per
    // sample psi then phi coefficients as complex doubles.
    os.write("KGTR", 4);
    const std::uint64_t seed = stream.seed();
    const std::uint32_t id = stream.trajectory();
    const std::int32_t n = traj.empty() ? 0 : traj.front().psi.lattice().n_max();
    const std::uint64_t count = traj.size();
    os.write(reinterpret_cast<const char*>(&seed), sizeof seed);
    os.write(reinterpret_cast<const char*>(&id), sizeof id);
    os.write(reinterpret_cast<const char*>(&n), sizeof n);
    os.write(reinterpret_cast<const char*>(&dt), sizeof dt);
    os.write(reinterpret_cast<const char*>(&count), sizeof count);
    for (const auto& st : traj) {
        for (const auto* f : {&st.psi, &st.phi})
            os.write(reinterpret_cast<const char*>(f->coeffs().data()),
                     static_cast<std::streamsize>(f->size() * sizeof(cplx)));
    }
}

}  // namespace kg
