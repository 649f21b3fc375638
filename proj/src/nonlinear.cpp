#include "kgspde/nonlinear.hpp"

#include <cmath>
#include <stdexcept>

namespace kg {

using Eigen::Vector2cd;
using Eigen::VectorXcd;

void SpdeRun::validate() const {
    params.validate();
    if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("SpdeRun: dt must be > 0");
    if (steps < 0) throw std::invalid_argument("SpdeRun: steps must be >= 0");
    if (record_stride < 1) throw std::invalid_argument("SpdeRun: record_stride must be >= 1");
    if (!(blowup_threshold > 0.0)) throw std::invalid_argument("SpdeRun: blowup_threshold must be > 0");
    if (!initial.psi.lattice_ptr() || !initial.phi.lattice_ptr())
        throw std::invalid_argument("SpdeRun: initial state has no lattice");
    if (initial.psi.lattice().n_max() != params.n_max || initial.phi.lattice().n_max() != params.n_max)
        throw std::invalid_argument("SpdeRun: initial state lattice does not match n_max");
}

double SpdeRun::renormalization() const { return sigma < 0.0 ? wick_variance(params.n_max) : sigma; }

bool blown_up(const SpectralField& f, double threshold) {
    for (const cplx& c : f.coeffs())
        if (!std::isfinite(c.real()) || !std::isfinite(c.imag()) || std::abs(c) > threshold) return true;
    return false;
}

SpdeStepper::SpdeStepper(const SpdeRun& run) : run_(run), sigma_(run.renormalization()) {
    run_.validate();
    const auto& lat = run_.initial.psi.lattice();
    trans_.resize(lat.size());
    forcing_.resize(lat.size());
    keys_.resize(lat.size());
    for (std::size_t i = 0; i < lat.size(); ++i) {
        const ModeOU ou{run_.params.eps, run_.params.alpha, lat.weight(i)};
        trans_[i] = ou_transition(ou, run_.dt, run_.noise_scale);
        forcing_[i] = mode_flow(ou.eps, ou.alpha, ou.s, run_.dt, Representation::Auto).forcing;
        keys_[i] = mode_key(lat.mode(i));
    }
}

PairState SpdeStepper::step(const PairState& state, std::uint64_t step_index) const {
    PairState next = state;
    const bool nonlinear = run_.nonlinearity_scale != 0.0;
    SpectralField f;
    if (nonlinear) f = galerkin_nonlinearity(state.psi, run_.params.degree, sigma_);
    for (std::size_t i = 0; i < trans_.size(); ++i) {
        Vector2cd y = ou_exact_step({state.psi[i], state.phi[i]}, trans_[i], run_.stream, step_index, keys_[i]);
        if (nonlinear) y -= (run_.nonlinearity_scale * f[i]) * forcing_[i];
        next.psi[i] = y(0);
        next.phi[i] = y(1);
    }
    return next;
}

PairState step_spde(const PairState& state, const SpdeRun& run, std::uint64_t step_index) {
    SpdeRun r = run;
    r.initial = state;
    return SpdeStepper(r).step(state, step_index);
}

namespace {

template <class State, class Step, class Check>
SpdeResult drive(const SpdeRun& run, State x0, Step&& step, Check&& check,
                 PairState (*wrap)(const State&, const LatticePtr&)) {
    SpdeResult out;
    const LatticePtr lat = run.initial.psi.lattice_ptr();
    out.times.push_back(0.0);
    out.states.push_back(wrap(x0, lat));
    State x = std::move(x0);
    for (int n = 0; n < run.steps; ++n) {
        x = step(x, static_cast<std::uint64_t>(n));
        if (check(x)) {
            out.blew_up = true;
            break;
        }
        out.completed_steps = n + 1;
        if ((n + 1) % run.record_stride == 0 || n + 1 == run.steps) {
            out.times.push_back(run.dt * (n + 1));
            out.states.push_back(wrap(x, lat));
        }
    }
    return out;
}

PairState wrap_pair(const PairState& s, const LatticePtr&) { return s; }
PairState wrap_field(const SpectralField& f, const LatticePtr& lat) { return {f, SpectralField(lat)}; }

}  // namespace

SpdeResult run_spde(const SpdeRun& run) {
    const SpdeStepper st(run);
    return drive<PairState>(
        run, run.initial, [&](const PairState& x, std::uint64_t n) { return st.step(x, n); },
        [&](const PairState& x) { return blown_up(x.psi, run.blowup_threshold) || blown_up(x.phi, run.blowup_threshold * 1e3); },
        wrap_pair);
}

SpdeResult run_dpd(const SpdeRun& run, const Trajectory& z_path) {
    run.validate();
    if (z_path.size() < static_cast<std::size_t>(run.steps))
        throw std::invalid_argument("run_dpd: z_path needs one sample per step");
    const auto& lat = run.initial.psi.lattice();
    for (const auto& z : z_path)
        if (!(z.psi.lattice() == lat)) throw std::invalid_argument("run_dpd: z_path lattice mismatch");
    const int n = run.params.degree;
    const double sigma = run.renormalization();
    std::vector<Vector2cd> forcing(lat.size());
    std::vector<Eigen::Matrix2cd> prop(lat.size());
    for (std::size_t i = 0; i < lat.size(); ++i) {
        const ModeFlow fl = mode_flow(run.params.eps, run.params.alpha, lat.weight(i), run.dt, Representation::Auto);
        prop[i] = fl.propagator;
        forcing[i] = fl.forcing;
    }
    auto step = [&](const PairState& u, std::uint64_t k) {
        PairState next = u;
        SpectralField f;
        if (run.nonlinearity_scale != 0.0) {
            const WickTable table = make_wick_table(z_path[k].psi, n, sigma);
            f = renormalized_nonlinearity(u.psi, table, n);
        }
        for (std::size_t i = 0; i < lat.size(); ++i) {
            Vector2cd y = prop[i] * Vector2cd(u.psi[i], u.phi[i]);
            if (run.nonlinearity_scale != 0.0) y -= (run.nonlinearity_scale * f[i]) * forcing[i];
            next.psi[i] = y(0);
            next.phi[i] = y(1);
        }
        return next;
    };
    return drive<PairState>(
        run, run.initial, step,
        [&](const PairState& x) { return blown_up(x.psi, run.blowup_threshold) || blown_up(x.phi, run.blowup_threshold * 1e3); },
        wrap_pair);
}

CglStepper::CglStepper(const SpdeRun& run) : run_(run), sigma_(run.renormalization()) {
    run_.validate();
    const auto& lat = run_.initial.psi.lattice();
    trans_.resize(lat.size());
    keys_.resize(lat.size());
    for (std::size_t i = 0; i < lat.size(); ++i) {
        trans_[i] = cgl_transition(run_.params.alpha, lat.weight(i), run_.dt, run_.noise_scale);
        keys_[i] = mode_key(lat.mode(i));
    }
}

SpectralField CglStepper::step(const SpectralField& state, std::uint64_t step_index) const {
    SpectralField next = state;
    const bool nonlinear = run_.nonlinearity_scale != 0.0;
    SpectralField f;
    if (nonlinear) f = galerkin_nonlinearity(state, run_.params.degree, sigma_);
    for (std::size_t i = 0; i < trans_.size(); ++i) {
        cplx z = cgl_ou_exact_step(state[i], trans_[i], run_.stream, step_index, keys_[i]);
        if (nonlinear) z -= trans_[i].response * (run_.nonlinearity_scale * f[i]);
        next[i] = z;
    }
    return next;
}

SpectralField step_cgl(const SpectralField& state, const SpdeRun& run, std::uint64_t step_index) {
    SpdeRun r = run;
    r.initial.psi = state;
    if (!r.initial.phi.lattice_ptr()) r.initial.phi = SpectralField(state.lattice_ptr());
    return CglStepper(r).step(state, step_index);
}

SpdeResult run_cgl(const SpdeRun& run) {
    const CglStepper st(run);
    return drive<SpectralField>(
        run, run.initial.psi, [&](const SpectralField& x, std::uint64_t n) { return st.step(x, n); },
        [&](const SpectralField& x) { return blown_up(x, run.blowup_threshold); }, wrap_field);
}

namespace {
void check_url_target(const SpdeRun& run) {
    if (run.params.alpha.imag() != 0.0) throw std::invalid_argument("url target: alpha must be real");
    if (run.params.eps != 1.0) throw std::invalid_argument("url target: eps must be 1");
}
}  // namespace

PairState step_url_target(const PairState& state, const SpdeRun& run, std::uint64_t step_index) {
    check_url_target(run);
    return step_spde(state, run, step_index);
}

SpdeResult run_url_target(const SpdeRun& run) {
    check_url_target(run);
    return run_spde(run);
}

CoupledStepper::CoupledStepper(std::vector<CoupledSystem> systems, const LatticePtr& lattice, int degree, double dt,
                               double sigma, double nonlinearity_scale, const NoiseStream& stream)
    : systems_(std::move(systems)), lattice_(lattice), degree_(degree), dt_(dt), sigma_(sigma),
      lambda_(nonlinearity_scale), stream_(stream) {
    if (systems_.empty()) throw std::invalid_argument("CoupledStepper: no systems");
    if (!(dt > 0.0)) throw std::invalid_argument("CoupledStepper: dt must be > 0");
    if (degree < 1) throw std::invalid_argument("CoupledStepper: degree must be >= 1");
    for (const auto& s : systems_) {
        if (!(s.alpha.real() > 0.0)) throw std::invalid_argument("CoupledStepper: Re alpha must be > 0");
        if (!s.cgl && !(s.eps > 0.0 && s.eps <= 1.0)) throw std::invalid_argument("CoupledStepper: eps must be in (0, 1]");
    }
    const auto& lat = *lattice_;
    trans_.resize(lat.size());
    keys_.resize(lat.size());
    forcing_.assign(systems_.size(), std::vector<Vector2cd>(lat.size()));
    for (std::size_t i = 0; i < lat.size(); ++i) {
        const double s = lat.weight(i);
        std::vector<CoupledBlock> blocks;
        for (std::size_t j = 0; j < systems_.size(); ++j) {
            const auto& sys = systems_[j];
            if (sys.cgl) {
                blocks.push_back(cgl_block(sys.alpha, s, dt));
                forcing_[j][i] = Vector2cd(-expm1_complex(-s / (2.0 * sys.alpha) * dt) / s, 0.0);
            } else {
                blocks.push_back(wave_block(sys.eps, sys.alpha, s, dt));
                forcing_[j][i] = mode_flow(sys.eps, sys.alpha, s, dt, Representation::Auto).forcing;
            }
        }
        trans_[i] = coupled_transition(blocks);
        keys_[i] = mode_key(lat.mode(i));
    }
}

void CoupledStepper::step(std::vector<PairState>& states, std::uint64_t step_index) const {
    step(states, step_index, stream_);
}

void CoupledStepper::step(std::vector<PairState>& states, std::uint64_t step_index, const NoiseStream& stream) const {
    if (states.size() != systems_.size()) throw std::invalid_argument("CoupledStepper: wrong number of states");
    std::vector<SpectralField> f(systems_.size());
    if (lambda_ != 0.0)
        for (std::size_t j = 0; j < systems_.size(); ++j) f[j] = galerkin_nonlinearity(states[j].psi, degree_, sigma_);
    for (std::size_t i = 0; i < trans_.size(); ++i) {
        const auto& tr = trans_[i];
        const Eigen::Index dim = tr.propagator.rows();
        VectorXcd x(dim), xi(dim);
        for (std::size_t j = 0; j < systems_.size(); ++j) {
            x(tr.offsets[j]) = states[j].psi[i];
            if (!systems_[j].cgl) x(tr.offsets[j] + 1) = states[j].phi[i];
        }
        for (Eigen::Index c = 0; c < dim; ++c)
            xi(c) = stream.complex_normal(step_index, keys_[i], static_cast<std::uint32_t>(c));
        VectorXcd y = tr.propagator * x + tr.factor * xi;
        for (std::size_t j = 0; j < systems_.size(); ++j) {
            const Eigen::Index o = tr.offsets[j];
            if (lambda_ != 0.0) {
                const cplx g = lambda_ * f[j][i];
                y(o) -= g * forcing_[j][i](0);
                if (!systems_[j].cgl) y(o + 1) -= g * forcing_[j][i](1);
            }
            states[j].psi[i] = y(o);
            if (!systems_[j].cgl) states[j].phi[i] = y(o + 1);
        }
    }
}

}  // namespace kg
