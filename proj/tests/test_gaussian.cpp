#include <doctest.h>

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <sstream>

#include "kgspde/gaussian.hpp"

using namespace kg;
using Eigen::Matrix2cd;
using Eigen::MatrixXcd;

namespace {

const double kEps[] = {1.0, 0.5, 0.25, 0.125, 1.0 / 16, 1.0 / 32, 1.0 / 64};
const cplx kAlpha[] = {{1, 1}, {2, 1}, {1, 3}};

struct Moments {
    double mean = 0.0, m2 = 0.0;
    int n = 0;
    void add(double x) {
        ++n;
        const double d = x - mean;
        mean += d / n;
        m2 += d * (x - mean);
    }
    double se() const { return std::sqrt(m2 / (n - 1) / n); }
};

}  // namespace

TEST_CASE("complex normal sampler") {
    NoiseStream s(1, 0);
    Moments abs2, re_sq, cross;
    for (int i = 0; i < 100000; ++i) {
        const cplx z = sample_complex_normal(2.0, s, static_cast<std::uint64_t>(i), 0, 0);
        abs2.add(std::norm(z));
        re_sq.add((z * z).real());
        cross.add((z * z).imag());
    }
    CHECK(std::abs(abs2.mean - 2.0) < 3.0 * 2.0 / std::sqrt(1e5));
    CHECK(std::abs(abs2.mean - 2.0) < 3.0 * abs2.se());
    CHECK(std::abs(re_sq.mean) < 3.0 * re_sq.se());
    CHECK(std::abs(cross.mean) < 3.0 * cross.se());
    CHECK(sample_complex_normal(0.0, s, 0, 0, 0) == cplx(0.0));
    CHECK_THROWS_AS(sample_complex_normal(-1.0, s, 0, 0, 0), std::invalid_argument);
}

TEST_CASE("samples from mu") {
    auto lat = make_lattice(1);
    NoiseStream s(2, 0);
    const auto i0 = *lat->index_of({0, 0});
    const auto i1 = *lat->index_of({1, 0});
    const auto i2 = *lat->index_of({0, -1});
    Moments z0, z1, zy_re, zy_im, cross_re;
    for (int d = 0; d < 100000; ++d) {
        const auto st = sample_mu(lat, s, static_cast<std::uint64_t>(d));
        z0.add(std::norm(st.psi[i0]));
        z1.add(std::norm(st.psi[i1]));
        const cplx zy = st.psi[i1] * std::conj(st.phi[i1]);
        zy_re.add(zy.real());
        zy_im.add(zy.imag());
        cross_re.add((st.psi[i1] * std::conj(st.psi[i2])).real());
    }
    CHECK(std::abs(z0.mean - 2.0) < 3.0 * z0.se());
    CHECK(std::abs(z1.mean - 1.0) < 3.0 * z1.se());
    CHECK(std::abs(zy_re.mean) < 3.0 * zy_re.se());
    CHECK(std::abs(zy_im.mean) < 3.0 * zy_im.se());
    CHECK(std::abs(cross_re.mean) < 3.0 * cross_re.se());

    // Nested lattices share draws on common modes.
    auto big = make_lattice(3);
    const auto a = sample_mu0(lat, s, 7);
    const auto b = sample_mu0(big, s, 7);
    for (std::size_t i = 0; i < lat->size(); ++i) CHECK(a[i] == b.at(lat->mode(i)));
}

TEST_CASE("Lyapunov certificate for every mode and parameter") {
    auto lat = make_lattice(16);
    double worst = 0.0;
    for (double eps : kEps)
        for (cplx alpha : kAlpha)
            for (std::size_t i = 0; i < lat->size(); ++i) {
                const ModeOU ou{eps, alpha, lat->weight(i)};
                worst = std::max(worst, ou.lyapunov_residual().cwiseAbs().maxCoeff());
            }
    CHECK(worst < 1e-10);
}

TEST_CASE("drift eigenvalues are lambda+-") {
    for (double eps : kEps)
        for (cplx alpha : kAlpha)
            for (double s : {1.0, 5.0, 100.0}) {
                const ModeOU ou{eps, alpha, s};
                const auto [lp, lm] = lambda_pm(eps, alpha, s);
                const Matrix2cd a = ou.drift();
                for (cplx l : {lp, lm}) {
                    const cplx det = (a - l * Matrix2cd::Identity()).determinant();
                    CHECK(std::abs(det) <= 1e-10 * (std::norm(l) + std::abs(a.determinant())));
                }
            }
}

TEST_CASE("dt = 0 is the identity") {
    const auto tr = ou_transition({0.5, {1, 1}, 2.0}, 0.0);
    CHECK((tr.propagator - Matrix2cd::Identity()).norm() < 1e-15);
    CHECK(tr.covariance.norm() == 0.0);
    const Eigen::Vector2cd x(cplx(1.0), cplx(0.0, 2.0));
    CHECK((ou_exact_step(x, tr, NoiseStream(3, 0), 0, 0) - x).norm() < 1e-15);
    const auto c = cgl_transition({1, 1}, 2.0, 0.0);
    CHECK(cgl_ou_exact_step({1.0, 2.0}, c, NoiseStream(3, 0), 0, 0) == cplx(1.0, 2.0));
}

TEST_CASE("Chapman-Kolmogorov for the exact transition") {
    for (double eps : kEps)
        for (cplx alpha : {cplx(1, 1), cplx(2, 1), cplx(1, 3), cplx(1, 0), cplx(0.5, 1e-7)})
            for (double s : {1.0, 2.0, 5.0, 37.0})
                for (double h : {1e-3, 0.1, 1.0}) {
                    const ModeOU ou{eps, alpha, s};
                    const auto full = ou_transition(ou, h);
                    const auto half = ou_transition(ou, h / 2);
                    const Matrix2cd p2 = half.propagator * half.propagator;
                    const Matrix2cd q2 = half.propagator * half.covariance * half.propagator.adjoint() + half.covariance;
                    INFO("eps=", eps, " alpha=", alpha, " s=", s, " h=", h);
                    CHECK((full.propagator - p2).cwiseAbs().maxCoeff() < 1e-10);
                    CHECK((full.covariance - q2).cwiseAbs().maxCoeff() < 1e-10);
                    CHECK((full.factor * full.factor.adjoint() - full.covariance).cwiseAbs().maxCoeff() < 1e-10);
                }
}

TEST_CASE("transition covariance against quadrature of the matrix exponential") {
    for (double eps : {1.0, 0.25})
        for (cplx alpha : {cplx(1, 1), cplx(1, 3)})
            for (double s : {1.0, 10.0}) {
                const ModeOU ou{eps, alpha, s};
                const double h = 0.3;
                const Matrix2cd a = ou.drift();
                const Matrix2cd d = ou.diffusion();
                // Composite Simpson on [0, h].
                const int n = 2000;
                Matrix2cd acc = Matrix2cd::Zero();
                for (int j = 0; j <= n; ++j) {
                    const double t = h * j / n;
                    const Matrix2cd e = (a * t).exp();
                    const double w = (j == 0 || j == n) ? 1.0 : (j % 2 ? 4.0 : 2.0);
                    acc += w * e * d * e.adjoint();
                }
                acc *= h / (3.0 * n);
                const auto tr = ou_transition(ou, h);
                CHECK((tr.covariance - acc).cwiseAbs().maxCoeff() < 1e-9);
                CHECK((tr.propagator - (a * h).exp()).cwiseAbs().maxCoeff() < 1e-10);
            }
}

TEST_CASE("long stationary run keeps E|z|^2 = 2") {
    ModelParams p;
    p.eps = 1.0;
    p.alpha = {1, 1};
    auto lat = make_lattice(0);
    const NoiseStream s(5, 0);
    const auto x0 = sample_mu(lat, s, 0);
    const auto traj = sample_Z_trajectory(p, 0.01, 20000, x0, s);
    // Batch means over 40 batches of 500 steps (5 time units each).
    const int batches = 40, len = 500;
    Moments bm;
    for (int b = 0; b < batches; ++b) {
        double acc = 0.0;
        for (int j = 0; j < len; ++j) acc += std::norm(traj[static_cast<std::size_t>(1 + b * len + j)].psi[0]);
        bm.add(acc / len);
    }
    CHECK(std::abs(bm.mean - 2.0) < 3.0 * bm.se());
}

TEST_CASE("noise off reduces to the deterministic linear solve") {
    ModelParams p;
    p.eps = 0.5;
    p.alpha = {1, 2};
    p.horizon = 1.0;
    auto lat = make_lattice(3);
    const auto x0 = sample_mu(lat, NoiseStream(6, 0), 0);
    const auto traj = sample_Z_trajectory(p, 0.01, 100, x0, NoiseStream(6, 0), 0.0);
    LinearSolveSpec spec{p, x0.psi, x0.phi, {}, 0.01, 100};
    const auto lin = linear_solve_mild(spec);
    for (std::size_t i = 0; i < lat->size(); ++i) {
        CHECK(std::abs(traj.back().psi[i] - lin.back().psi[i]) < 1e-9);
        CHECK(std::abs(traj.back().phi[i] - lin.back().phi[i]) < 1e-9);
    }
}

TEST_CASE("equal seeds give identical trajectories") {
    ModelParams p;
    auto lat = make_lattice(2);
    const auto x0 = sample_mu(lat, NoiseStream(9, 1), 0);
    const auto a = sample_Z_trajectory(p, 0.05, 20, x0, NoiseStream(9, 1));
    const auto b = sample_Z_trajectory(p, 0.05, 20, x0, NoiseStream(9, 1));
    std::ostringstream sa, sb;
    write_trajectory_csv(sa, a, 0.05, NoiseStream(9, 1));
    write_trajectory_csv(sb, b, 0.05, NoiseStream(9, 1));
    CHECK(sa.str() == sb.str());
    CHECK(sa.str().rfind("# seed=9 trajectory=1", 0) == 0);
    std::ostringstream ba;
    write_trajectory_binary(ba, a, 0.05, NoiseStream(9, 1));
    CHECK(ba.str().substr(0, 4) == "KGTR");
}

TEST_CASE("time-1 covariance from 10^4 paths") {
    ModelParams p;
    p.eps = 0.5;
    p.alpha = {1, 1};
    auto lat = make_lattice(1);
    const auto idx = *lat->index_of({1, 0});
    const double s = lat->weight(idx);
    // Non-stationary start: psi scaled by 2, so Sigma_0 = diag(8/s, 2).
    Matrix2cd sig0 = Matrix2cd::Zero();
    sig0(0, 0) = 8.0 / s;
    sig0(1, 1) = 2.0;
    const auto tr = ou_transition({p.eps, p.alpha, s}, 1.0);
    const Matrix2cd expect = tr.propagator * sig0 * tr.propagator.adjoint() + tr.covariance;
    Moments zz, yy, zy_re, zy_im, cross;
    const auto other = *lat->index_of({0, 1});
    for (std::uint32_t path = 0; path < 10000; ++path) {
        const NoiseStream st(11, path);
        auto x0 = sample_mu(lat, st, 0);
        x0.psi *= 2.0;
        const auto traj = sample_Z_trajectory(p, 0.1, 10, x0, st);
        const auto& end = traj.back();
        zz.add(std::norm(end.psi[idx]));
        yy.add(std::norm(end.phi[idx]));
        const cplx zy = end.psi[idx] * std::conj(end.phi[idx]);
        zy_re.add(zy.real());
        zy_im.add(zy.imag());
        cross.add((end.psi[idx] * std::conj(end.psi[other])).real());
    }
    CHECK(std::abs(zz.mean - expect(0, 0).real()) < 3.0 * zz.se());
    CHECK(std::abs(yy.mean - expect(1, 1).real()) < 3.0 * yy.se());
    CHECK(std::abs(zy_re.mean - expect(0, 1).real()) < 3.0 * zy_re.se());
    CHECK(std::abs(zy_im.mean - expect(0, 1).imag()) < 3.0 * zy_im.se());
    CHECK(std::abs(cross.mean) < 3.0 * cross.se());
}

TEST_CASE("CGL scalar OU") {
    for (cplx alpha : kAlpha)
        for (double s : {1.0, 2.0, 50.0}) CHECK(std::abs(cgl_lyapunov_residual(alpha, s)) < 1e-12);

    const cplx alpha{1, 1};
    const double s = 2.0;
    const auto tr = cgl_transition(alpha, s, 0.05);
    const NoiseStream st(12, 0);
    cplx z = sample_complex_normal(2.0 / s, st, 0, 0, kPsiDraw);
    Moments bm;
    for (int b = 0; b < 50; ++b) {
        double acc = 0.0;
        for (int j = 0; j < 400; ++j) {
            z = cgl_ou_exact_step(z, tr, st, static_cast<std::uint64_t>(b * 400 + j), 0);
            acc += std::norm(z);
        }
        bm.add(acc / 400);
    }
    CHECK(std::abs(bm.mean - 2.0 / s) < 3.0 * bm.se());
}

TEST_CASE("coupled stationary covariance and transition") {
    const double s = 2.0, dt = 0.2;
    const cplx alpha{1, 1};
    std::vector<CoupledBlock> blocks{wave_block(0.5, alpha, s, dt), wave_block(0.125, alpha, s, dt),
                                     cgl_block(alpha, s, dt)};
    const auto tr = coupled_transition(blocks);
    REQUIRE(tr.stationary.rows() == 5);
    // Diagonal blocks are the marginal stationary laws.
    CHECK(std::abs(tr.stationary(0, 0) - 2.0 / s) < 1e-12);
    CHECK(std::abs(tr.stationary(1, 1) - 2.0) < 1e-12);
    CHECK(std::abs(tr.stationary(2, 2) - 2.0 / s) < 1e-12);
    CHECK(std::abs(tr.stationary(4, 4) - 2.0 / s) < 1e-12);
    // Joint covariance is a covariance.
    Eigen::SelfAdjointEigenSolver<MatrixXcd> es(tr.stationary);
    CHECK(es.eigenvalues().minCoeff() > -1e-12);

    // Step covariance against quadrature of the joint matrix exponential.
    MatrixXcd m = MatrixXcd::Zero(5, 5);
    Eigen::VectorXcd b(5);
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        const auto d = blocks[i].drift.rows();
        m.block(tr.offsets[i], tr.offsets[i], d, d) = blocks[i].drift;
        b.segment(tr.offsets[i], d) = blocks[i].noise;
    }
    const int n = 4000;
    MatrixXcd acc = MatrixXcd::Zero(5, 5);
    for (int j = 0; j <= n; ++j) {
        const MatrixXcd e = (m * (dt * j / n)).exp();
        const double w = (j == 0 || j == n) ? 1.0 : (j % 2 ? 4.0 : 2.0);
        acc += w * 2.0 * e * b * b.adjoint() * e.adjoint();
    }
    acc *= dt / (3.0 * n);
    CHECK((tr.covariance - acc).cwiseAbs().maxCoeff() < 1e-9);
    CHECK((tr.propagator - (m * dt).exp()).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("psd_factor rejects indefinite input") {
    MatrixXcd m(2, 2);
    m << 1.0, 0.0, 0.0, -0.5;
    CHECK_THROWS_AS(psd_factor(m), NumericalError);
}
