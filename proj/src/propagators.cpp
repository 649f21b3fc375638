#include "kgspde/propagators.hpp"

#include <algorithm>
#include <cmath>

namespace kg {

cplx expm1_complex(cplx z) {
    const double x = z.real();
    const double y = z.imag();
    const double s = std::sin(0.5 * y);
    return {std::expm1(x) * std::cos(y) - 2.0 * s * s, std::exp(x) * std::sin(y)};
}

cplx phi1(cplx mu, double h) {
    const cplx z = mu * h;
    if (std::abs(z) < 1e-8) return h * (1.0 + 0.5 * z);
    return expm1_complex(z) / mu;
}

namespace {

ModeFlow mild_flow(double eps, cplx alpha, double s, double h) {
    if (alpha.imag() == 0.0)
        throw std::invalid_argument("mild representation requires Im(alpha) != 0");
    const cplx r = discriminant_root(eps, alpha, s);
    const auto [lp, lm] = lambda_pm(eps, alpha, s);
    const cplx ep = std::exp(lp * h);
    const cplx em = std::exp(lm * h);
    const double e2 = eps * eps;
    const cplx inv2r = 1.0 / (2.0 * r);
    ModeFlow f;
    f.propagator(0, 0) = (-e2 * lm * ep + e2 * lp * em) * inv2r;
    f.propagator(1, 0) = eps * s * (em - ep) * inv2r;
    f.propagator(0, 1) = eps * (ep - em) * inv2r;
    f.propagator(1, 1) = e2 * (lp * ep - lm * em) * inv2r;
    f.forcing(0) = (phi1(lp, h) - phi1(lm, h)) * inv2r;
    f.forcing(1) = eps * (ep - em) * inv2r;
    return f;
}

ModeFlow sinh_flow(double eps, cplx alpha, double s, double h) {
    // With a = alpha/eps^2 and w = sqrt(alpha^2 - eps^2 s)/eps^2:
    //   c(t) = e^{-a t} cosh(w t),  S(t) = e^{-a t} sinh(w t) / w,
    // both entire in w^2 and solving y'' + 2a y' + (s/eps^2) y = 0 with
    // (c, c')(0) = (1, -a), (S, S')(0) = (0, 1). Then
    //   u(t)      = (c + aS) u0 + (S/eps) phi0,
    //   phi(t)    = -(s/eps) S u0 + (c - aS) phi0,
    //   Duhamel   = (int_0^h S / eps^2, S / eps) f.
    const double e2 = eps * eps;
    const cplx a = alpha / e2;
    const cplx w = discriminant_root(eps, alpha, s) / e2;
    const double k2 = s / e2;
    cplx c, sv, int_s, ds;
    const double rho = h * (std::abs(a) + std::abs(w));
    if (rho < 1.0) {
        // Taylor series from the derivative recurrence y_{n+2} = -2a y_{n+1} - k2 y_n.
        cplx d0 = 0.0, d1 = 1.0;   // S derivatives
        cplx c0 = 1.0, c1 = -a;    // c derivatives
        double hn = 1.0;           // h^n / n!
        c = 0.0;
        sv = 0.0;
        int_s = 0.0;
        ds = 0.0;
        for (int n = 0; n < 60; ++n) {
            c += c0 * hn;
            sv += d0 * hn;
            ds += d1 * hn;
            int_s += d0 * hn * h / (n + 1.0);
            const cplx d2 = -2.0 * a * d1 - k2 * d0;
            const cplx c2 = -2.0 * a * c1 - k2 * c0;
            d0 = d1;
            d1 = d2;
            c0 = c1;
            c1 = c2;
            hn *= h / (n + 1.0);
            if (n > 4 && std::abs(d0) * hn < 1e-18 * std::abs(sv) && std::abs(c0) * hn < 1e-18 * std::abs(c))
                break;
        }
    } else {
        const cplx wh = w * h;
        if (std::abs(wh) < 1e-2) {
            const cplx e = std::exp(-a * h);
            const cplx z2 = wh * wh;
            c = e * (1.0 + z2 / 2.0 * (1.0 + z2 / 12.0 * (1.0 + z2 / 30.0)));
            sv = e * h * (1.0 + z2 / 6.0 * (1.0 + z2 / 20.0 * (1.0 + z2 / 42.0)));
        } else {
            const cplx ep = std::exp((-a + w) * h);
            const cplx em = std::exp((-a - w) * h);
            c = 0.5 * (ep + em);
            sv = (ep - em) / (2.0 * w);
        }
        ds = c - a * sv;
        int_s = -e2 * (c - 1.0 + a * sv) / s;
    }
    ModeFlow f;
    f.propagator(0, 0) = c + a * sv;
    f.propagator(0, 1) = sv / eps;
    f.propagator(1, 0) = -(s / eps) * sv;
    f.propagator(1, 1) = ds;
    f.forcing(0) = int_s / e2;
    f.forcing(1) = sv / eps;
    return f;
}

bool near_collision(double eps, cplx alpha, double s) {
    if (alpha.imag() == 0.0) return true;
    const auto [lp, lm] = lambda_pm(eps, alpha, s);
    return std::abs(lp - lm) < kCollisionGap * std::max(std::abs(lp), std::abs(lm));
}

void check_same_lattice(const SpectralField& a, const SpectralField& b, const char* what) {
    if (a.size() != b.size()) throw std::invalid_argument(std::string(what) + ": lattice mismatch");
}

}  // namespace

ModeFlow mode_flow(double eps, cplx alpha, double s, double h, Representation rep) {
    if (!(h >= 0.0)) throw std::invalid_argument("mode_flow: step must be >= 0");
    switch (rep) {
        case Representation::Mild: return mild_flow(eps, alpha, s, h);
        case Representation::Sinh: return sinh_flow(eps, alpha, s, h);
        case Representation::Auto:
            return near_collision(eps, alpha, s) ? sinh_flow(eps, alpha, s, h) : mild_flow(eps, alpha, s, h);
    }
    return sinh_flow(eps, alpha, s, h);
}

MildCoefficients mild_coefficients(double eps, cplx alpha, double s, cplx phi0, cplx phi1_) {
    if (alpha.imag() == 0.0)
        throw std::invalid_argument("mild_coefficients: Im(alpha) = 0 is not allowed on the mild path");
    const cplx r = discriminant_root(eps, alpha, s);
    const auto [lp, lm] = lambda_pm(eps, alpha, s);
    const double e2 = eps * eps;
    return {(-e2 * lm * phi0 + eps * phi1_) / (2.0 * r), (e2 * lp * phi0 - eps * phi1_) / (2.0 * r),
            1.0 / (2.0 * r), -1.0 / (2.0 * r)};
}

void LinearSolveSpec::validate() const {
    params.validate();
    if (!(dt > 0.0)) throw std::invalid_argument("linear solve: dt must be > 0");
    if (steps < 0) throw std::invalid_argument("linear solve: steps must be >= 0");
    if (dt * steps > params.horizon * (1.0 + 1e-12))
        throw std::invalid_argument("linear solve: dt * steps exceeds the horizon T");
    check_same_lattice(phi0, phi1, "linear solve");
    if (!forcing.empty()) {
        if (forcing.size() != static_cast<std::size_t>(steps))
            throw std::invalid_argument("linear solve: need one forcing sample per step");
        for (const auto& f : forcing) check_same_lattice(phi0, f, "linear solve forcing");
    }
}

Trajectory linear_solve(const LinearSolveSpec& spec, Representation rep) {
    spec.validate();
    if (rep == Representation::Mild && spec.params.alpha.imag() == 0.0)
        throw std::invalid_argument("linear_solve_mild: Im(alpha) = 0; use the sinh representation");
    const auto& lat = spec.phi0.lattice();
    Trajectory out;
    out.reserve(static_cast<std::size_t>(spec.steps) + 1);
    out.push_back({spec.phi0, spec.phi1});
    std::vector<ModeFlow> flows(lat.size());
    for (std::size_t i = 0; i < lat.size(); ++i)
        flows[i] = mode_flow(spec.params.eps, spec.params.alpha, lat.weight(i), spec.dt, rep);
    for (int n = 0; n < spec.steps; ++n) {
        PairState next = out.back();
        const SpectralField* f = spec.forcing_at(n);
        for (std::size_t i = 0; i < lat.size(); ++i) {
            Eigen::Vector2cd x(out.back().psi[i], out.back().phi[i]);
            Eigen::Vector2cd y = flows[i].propagator * x;
            if (f) y += flows[i].forcing * (*f)[i];
            next.psi[i] = y(0);
            next.phi[i] = y(1);
        }
        out.push_back(std::move(next));
    }
    return out;
}

Trajectory linear_solve_mild(const LinearSolveSpec& spec) { return linear_solve(spec, Representation::Mild); }
Trajectory linear_solve_sinh(const LinearSolveSpec& spec) { return linear_solve(spec, Representation::Sinh); }

double frequency_cutoff(double radius) {
    if (radius <= 1.0) return 1.0;
    if (radius >= 2.0) return 0.0;
    const double x = 2.0 - radius;  // in (0, 1)
    const double a = std::exp(-1.0 / x);
    const double b = std::exp(-1.0 / (1.0 - x));
    return a / (a + b);
}

std::pair<SpectralField, SpectralField> split_low_high(const SpectralField& f, double eps) {
    SpectralField low(f.lattice_ptr());
    SpectralField high(f.lattice_ptr());
    const auto& lat = f.lattice();
    for (std::size_t i = 0; i < lat.size(); ++i) {
        const double cut = frequency_cutoff(eps * std::sqrt(static_cast<double>(lat.mode(i).norm2())));
        if (cut == 1.0) {
            low[i] = f[i];
        } else if (cut == 0.0) {
            high[i] = f[i];
        } else {
            low[i] = cut * f[i];
            high[i] = f[i] - low[i];
        }
    }
    return {std::move(low), std::move(high)};
}

std::vector<SpectralField> heat_solve(cplx alpha, const SpectralField& phi0, const std::vector<SpectralField>& forcing,
                                      double dt, int steps) {
    if (!(alpha.real() > 0.0)) throw std::invalid_argument("heat_solve: Re(alpha) must be > 0");
    if (!(dt > 0.0) || steps < 0) throw std::invalid_argument("heat_solve: need dt > 0 and steps >= 0");
    if (!forcing.empty() && forcing.size() != static_cast<std::size_t>(steps))
        throw std::invalid_argument("heat_solve: need one forcing sample per step");
    const auto& lat = phi0.lattice();
    std::vector<cplx> decay(lat.size()), response(lat.size());
    for (std::size_t i = 0; i < lat.size(); ++i) {
        const double s = lat.weight(i);
        const cplx rate = s / (2.0 * alpha);
        decay[i] = std::exp(-rate * dt);
        response[i] = -expm1_complex(-rate * dt) / s;
    }
    std::vector<SpectralField> out;
    out.reserve(static_cast<std::size_t>(steps) + 1);
    out.push_back(phi0);
    for (int n = 0; n < steps; ++n) {
        SpectralField next = out.back();
        for (std::size_t i = 0; i < lat.size(); ++i) {
            next[i] = decay[i] * out.back()[i];
            if (!forcing.empty()) next[i] += response[i] * forcing[static_cast<std::size_t>(n)][i];
        }
        out.push_back(std::move(next));
    }
    return out;
}

Trajectory real_damped_wave_solve(double alpha1, const SpectralField& phi0, const SpectralField& phi1,
                                  const std::vector<SpectralField>& forcing, double dt, int steps) {
    if (!(alpha1 > 0.0)) throw std::invalid_argument("real_damped_wave_solve: alpha1 must be > 0");
    LinearSolveSpec spec;
    spec.params.eps = 1.0;
    spec.params.alpha = alpha1;
    spec.params.horizon = dt * steps;
    spec.params.n_max = phi0.lattice().n_max();
    spec.phi0 = phi0;
    spec.phi1 = phi1;
    spec.forcing = forcing;
    spec.dt = dt;
    spec.steps = steps;
    return linear_solve_sinh(spec);
}

double forcing_l2_norm(const std::vector<SpectralField>& forcing, double dt, double s) {
    double acc = 0.0;
    for (const auto& f : forcing) {
        const double v = sobolev_norm(f, s);
        acc += dt * v * v;
    }
    return std::sqrt(acc);
}

LimitError nrl_linear_error(const LinearSolveSpec& spec, double sigma, double theta) {
    const auto wave = linear_solve(spec, Representation::Auto);
    const auto heat = heat_solve(spec.params.alpha, spec.phi0, spec.forcing, spec.dt, spec.steps);
    LimitError out;
    for (std::size_t n = 0; n < wave.size(); ++n)
        out.error = std::max(out.error, sobolev_norm(wave[n].psi - heat[n], sigma));
    out.data_scale = std::pow(spec.params.eps, theta) *
                     (sobolev_norm(spec.phi0, sigma + theta) + sobolev_norm(spec.phi1, sigma - 1.0 + theta) +
                      forcing_l2_norm(spec.forcing, spec.dt, sigma - 1.0 + theta));
    return out;
}

LimitError url_linear_error(double alpha1, double alpha2, const LinearSolveSpec& spec, double sigma) {
    LinearSolveSpec complex_spec = spec;
    complex_spec.params.eps = 1.0;
    complex_spec.params.alpha = {alpha1, alpha2};
    const auto u = linear_solve(complex_spec, Representation::Sinh);
    const auto v = real_damped_wave_solve(alpha1, spec.phi0, spec.phi1, spec.forcing, spec.dt, spec.steps);
    LimitError out;
    for (std::size_t n = 0; n < u.size(); ++n) {
        const PairState diff{u[n].psi - v[n].psi, u[n].phi - v[n].phi};
        out.error = std::max(out.error, pair_norm(diff, sigma));
    }
    out.data_scale = std::abs(alpha2) * (sobolev_norm(spec.phi0, sigma) + sobolev_norm(spec.phi1, sigma - 1.0) +
                                         forcing_l2_norm(spec.forcing, spec.dt, sigma - 1.0));
    return out;
}

}  // namespace kg
