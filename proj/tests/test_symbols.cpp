#include <doctest.h>

#include <cmath>
#include <random>

#include "kgspde/symbols.hpp"

using namespace kg;

TEST_CASE("branch_sqrt") {
    CHECK(branch_sqrt(1.0) == cplx(1.0, 0.0));
    CHECK(branch_sqrt(-1.0) == cplx(0.0, 1.0));
    CHECK(branch_sqrt(cplx(-1.0, -0.0)) == cplx(0.0, 1.0));
    const cplx r = branch_sqrt({-1.0, 2.0});
    CHECK(r.real() == doctest::Approx(0.7861513777574233).epsilon(1e-14));
    CHECK(r.imag() == doctest::Approx(1.272019649514069).epsilon(1e-14));
    CHECK(std::abs(r * r - cplx(-1.0, 2.0)) < 1e-12);
    // a = Re r solves a^4 + a^2 - 1 = 0.
    CHECK(std::abs(std::pow(r.real(), 4) + r.real() * r.real() - 1.0) < 1e-12);

    std::mt19937_64 gen(11);
    std::uniform_real_distribution<double> u(-50.0, 50.0);
    for (int i = 0; i < 1000; ++i) {
        const cplx z{u(gen), u(gen)};
        const cplx s = branch_sqrt(z);
        CHECK(std::abs(s * s - z) <= 1e-12 * std::abs(z));
        CHECK(s.real() >= 0.0);
    }
}

TEST_CASE("lambda_pm") {
    ModelParams p;
    p.alpha = 2.0;
    auto [lp, lm] = lambda_pm(p, {0, 0});
    CHECK(lp.real() == doctest::Approx(-2.0 + std::sqrt(3.0)).epsilon(1e-14));
    CHECK(lm.real() == doctest::Approx(-2.0 - std::sqrt(3.0)).epsilon(1e-14));

    p.alpha = {1.0, 1.0};
    std::tie(lp, lm) = lambda_pm(p, {0, 0});
    CHECK(lp.real() == doctest::Approx(-0.2138486222425767).epsilon(1e-13));
    CHECK(lp.imag() == doctest::Approx(0.272019649514069).epsilon(1e-13));
    CHECK(lm.real() == doctest::Approx(-1.7861513777574233).epsilon(1e-13));
    CHECK(lm.imag() == doctest::Approx(-2.272019649514069).epsilon(1e-13));

    for (double eps : {1.0, 0.3, 1e-2, 1e-4}) {
        for (cplx alpha : {cplx(1, 1), cplx(2, 1), cplx(1, 3), cplx(0.5, -2), cplx(1, 0)}) {
            for (double s : {1.0, 2.0, 17.0, 1e4}) {
                std::tie(lp, lm) = lambda_pm(eps, alpha, s);
                const double e2 = eps * eps;
                CHECK(std::abs(lp + lm + 2.0 * alpha / e2) <= 1e-12 * std::abs(2.0 * alpha / e2));
                CHECK(std::abs(lp * lm - s / e2) <= 1e-12 * s / e2);
                for (cplx l : {lp, lm}) {
                    CHECK(l.real() <= 0.0);
                    const cplx res = e2 * l * l + 2.0 * alpha * l + s;
                    CHECK(std::abs(res) <= 1e-10 * (e2 * std::norm(l) + 2.0 * std::abs(alpha * l) + s));
                }
            }
        }
    }
}

TEST_CASE("lambda+ small-eps expansion") {
    const double eps = 1e-3;
    const cplx alpha{1.0, 1.0};
    const double a3 = std::pow(std::abs(alpha), 3);
    for (int k1 = 0; k1 <= 4; ++k1) {
        const double s = 1.0 + k1 * k1;
        const auto [lp, lm] = lambda_pm(eps, alpha, s);
        CHECK(std::abs(lp + s / (2.0 * alpha)) <= 8.0 * eps * eps * s * s / a3);
    }
}

TEST_CASE("beta_shift") {
    ModelParams p;
    p.eps = 1.0;
    p.alpha = 2.0;
    CHECK(beta_shift(p).real() == doctest::Approx(2.0 - std::sqrt(3.0)).epsilon(1e-14));

    p.alpha = {1.0, 1.0};
    const cplx b = beta_shift(p);
    CHECK(std::abs(b - (p.alpha - branch_sqrt({-1.0, 2.0}))) < 1e-14);
    CHECK(b.real() == doctest::Approx(0.2138486222425767).epsilon(1e-13));

    p.eps = 1e-4;
    CHECK(std::abs(beta_shift(p) - 1.0 / (2.0 * p.alpha)) < 1e-7);

    for (double eps : {1.0, 0.5, 0.01}) {
        for (cplx alpha : {cplx(1, 1), cplx(0.1, 4), cplx(3, -1)}) {
            p.eps = eps;
            p.alpha = alpha;
            const cplx bb = beta_shift(p);
            CHECK(bb.real() >= 0.0);
            CHECK(std::abs(eps * bb) <= eps / alpha.real());
        }
    }
}

TEST_CASE("Proposition-3.1 probes on a 1000-point log grid") {
    const auto grid = logspace(1e-3, 1e3, 1000);
    CHECK(grid.size() == 1000);
    for (cplx alpha : {cplx(1, 1), cplx(2, 1), cplx(0.5, 0.5)}) {
        const auto rep = probe_base_bounds(alpha, grid);
        REQUIRE(rep.items.size() == 5);
        for (const auto& it : rep.items) {
            INFO(it.item, " alpha=", alpha, " margin=", it.worst_margin, " at s=", it.argmin_s);
            CHECK(it.applicable);
            CHECK(it.pass);
        }
        CHECK(rep.all_pass());
    }
    // Real alpha: (2), (3) do not apply and Re sqrt(alpha^2 - s) = 0 for s > alpha^2.
    const auto real = probe_base_bounds(2.0, grid);
    CHECK_FALSE(real.items[1].applicable);
    CHECK_FALSE(real.items[2].applicable);
    CHECK_FALSE(real.items[0].pass);
    CHECK_THROWS_AS(probe_base_bounds({-1.0, 1.0}, grid), std::invalid_argument);
}

TEST_CASE("damping gap constant is not sharp enough for large Im alpha") {
    // Re(1/(alpha + r)) >= Re alpha / |alpha + r|^2 and |alpha + r|^2 can reach
    // 2(|alpha|^2 + |alpha^2 - s|), so Re alpha / (2|alpha|^2 + 1) is off by a
    // factor up to 2. alpha = 1 + 3i near s = 1 is a counterexample.
    const cplx alpha{1.0, 3.0};
    const auto grid = logspace(1e-3, 1e3, 1000);
    const auto rep = probe_base_bounds(alpha, grid);
    CHECK_FALSE(rep.items[3].pass);
    CHECK(rep.items[3].argmin_s == doctest::Approx(0.993109).epsilon(1e-5));
    for (std::size_t i : {0u, 1u, 2u, 4u}) CHECK(rep.items[i].pass);

    const double s = 1.0;
    const double lhs = (-alpha + branch_sqrt(alpha * alpha - s)).real();
    CHECK(lhs > -damping_constant(alpha));
    for (double x : grid) {
        const double v = (-alpha + branch_sqrt(alpha * alpha - x)).real();
        CHECK(v <= -0.5 * damping_constant(alpha) * std::min(x, 1.0));
    }
}

TEST_CASE("h remainder pointwise") {
    const cplx alpha{1.0, 1.0};
    const double a = std::abs(alpha);
    for (double s : logspace(1e-4, 0.999 * a * a / 2.0, 200)) {
        const cplx r = branch_sqrt(alpha * alpha - s);
        const cplx h = r - alpha + s / (2.0 * alpha);
        CHECK(std::abs(h) <= 8.0 * s * s / (a * a * a) + 1e-15);
    }
}

TEST_CASE("ModelParams validation lists every violation") {
    ModelParams p;
    p.eps = 0.0;
    p.alpha = {-1.0, 0.0};
    p.horizon = 0.0;
    CHECK(p.violations().size() == 3);
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
}
