#pragma once

// Mapping-basis solvers.
//
// PBME: independent Hamiltonian trajectories of H_m = P^2/2M + V0(R)
//       + (1/2) hbar^-1 hbar-traceless-h bilinears, with the Wigner-symbol
//       estimator pair (g-function at t=0, operator symbol at t).
// FBTS: forward-backward coherent-state trajectories under
//       H_e = P^2/2M + V_b(R) - Tr h + (1/2)(z'h z + z''h z'') with the
//       product estimator z_l z'*_l' ... z*_m(t) z'_m'(t).
// JFBTS: FBTS plus stochastic relaxation of the coherent-state orthogonality
//       approximation at scheduled steps; fresh forward/backward variables are
//       importance-sampled around the propagated values and the overlap phase
//       and normalization ride in the trajectory weight. A zero-jump schedule
//       reproduces FBTS bit for bit.
//
// Integrator (shared): symmetric splitting
//   drift(dt/2) -> rotate(dt/2) -> momentum kick(dt) -> rotate(dt/2) -> drift(dt/2)
// with exact 2x2 rotations and a unitary Cayley sub-step for n > 2, so the
// coherent radii are conserved to round-off between jumps.

#include <Eigen/LU>

#include "../adiabatic.hpp"
#include "../ensemble.hpp"
#include "../model.hpp"
#include "../sampling.hpp"

namespace qcldyn {

struct JumpSchedule {
    int slots = 0;        // L candidate jump slots, uniformly spaced
    double prob = 1.0;    // per-slot jump probability
    enum class Kernel { conventional, as_printed } kernel = Kernel::conventional;
    // How the full coherent-state integral at a relaxed slot is sampled:
    //   coherent:  Gaussian importance sampling of the coherent-state closure
    //              around the propagated values (overlap phase in the weight).
    //   projector: closure through the physical single-excitation subspace with
    //              a fresh Gaussian coherent-state restart (lower variance).
    enum class Resampler { coherent, projector } resampler = Resampler::coherent;

    void validate(int steps) const {
        if (slots < 0) throw ConfigError("jump_slots must be >= 0");
        if (slots > 0 && steps % slots != 0)
            throw ConfigError("jump_slots must divide steps (L*J = M)");
        if (prob < 0.0 || prob > 1.0) throw ConfigError("jump_prob must be in [0,1]");
    }
    int block_length(int steps) const { return slots > 0 ? steps / slots : 0; }
    // Probability of a realized binary sequence.
    double sequence_probability(const std::vector<int>& kappa) const {
        double p = 1.0;
        for (int k : kappa) p *= k ? prob : (1.0 - prob);
        return p;
    }
};

namespace detail {

// z <- exp(-i h dt) z for real symmetric h; exact for n = 2, unitary Cayley
// step otherwise (applied to both vectors when zb is non-null).
struct MappingRotator {
    CMatrix cayley;  // scratch
    Eigen::PartialPivLU<CMatrix> lu;
    CVector rhs;

    void apply(const Matrix& h, double dt, CVector& z, CVector* zb) {
        const int n = static_cast<int>(h.rows());
        if (n == 2) {
            const double a = 0.5 * (h(0, 0) + h(1, 1));
            const double bz = 0.5 * (h(0, 0) - h(1, 1));
            const double bx = h(0, 1);
            const double bn = std::sqrt(bx * bx + bz * bz);
            const Complex phase = std::polar(1.0, -a * dt);
            const double cb = std::cos(bn * dt);
            const double sb = bn > 0 ? std::sin(bn * dt) / bn : dt;
            rotate2(z, phase, cb, sb, bz, bx);
            if (zb) rotate2(*zb, phase, cb, sb, bz, bx);
            return;
        }
        // (1 + i h dt/2) z_new = (1 - i h dt/2) z, exactly unitary for symmetric h.
        const Complex ihalf(0.0, 0.5 * dt);
        cayley = ihalf * h.cast<Complex>();
        for (int k = 0; k < n; ++k) cayley(k, k) += 1.0;
        lu.compute(cayley);
        rhs.noalias() = z - ihalf * (h.cast<Complex>() * z);
        z = lu.solve(rhs);
        if (zb) {
            rhs.noalias() = *zb - ihalf * (h.cast<Complex>() * (*zb));
            *zb = lu.solve(rhs);
        }
    }

private:
    static void rotate2(CVector& z, Complex phase, double cb, double sb, double bz, double bx) {
        const Complex z0 = z(0), z1 = z(1);
        z(0) = phase * (cb * z0 - Complex(0, 1) * sb * (bz * z0 + bx * z1));
        z(1) = phase * (cb * z1 - Complex(0, 1) * sb * (bx * z0 - bz * z1));
    }
};

inline void symmetric_outer_re(const CVector& z, Matrix& G) {
    const int n = static_cast<int>(z.size());
    G.resize(n, n);
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
            G(a, b) = z(a).real() * z(b).real() + z(a).imag() * z(b).imag();
}

}  // namespace detail

struct MappingSolverConfig {
    const DiabaticModel* model = nullptr;
    BathSamplerSpec bath;
    InitialState initial;
    std::vector<ObservableSpec> observables;
    JumpSchedule jumps;       // FBTS/JFBTS only
    bool trace_control = true;
};

// ---------------------------------------------------------------------------
// FBTS / JFBTS kernel
// ---------------------------------------------------------------------------

class FbtsKernel {
public:
    FbtsKernel(const MappingSolverConfig& cfg, const EnsembleOptions& opt)
        : cfg_(cfg),
          model_(*cfg.model),
          obs_(cfg.observables, model_.n_states),
          steps_(opt.steps),
          dt_(opt.dt) {
        cfg_.jumps.validate(opt.steps);
        block_ = cfg_.jumps.block_length(opt.steps);
        rho0_constant_ = cfg_.initial.kind != InitialState::Kind::adiabatic_ground;
        if (rho0_constant_) rho0_ = cfg_.initial.density(model_.n_states);
    }

    int n_states() const { return model_.n_states; }
    int n_series() const { return obs_.n_series(); }
    const std::vector<ObservableSpec>& histograms() const { return obs_.histograms; }

    struct State {
        Vector R, P;
        CVector z, zb;
        Complex weight;     // estimator prefactor x jump multipliers
        Complex ctrl0;      // t = 0 identity-estimator value
        Matrix h, G;
        Vector grad, fb;
        FrameWorkspace ws;
        AdiabaticFrame frame;        // only for frame-dependent pieces
        detail::MappingRotator rot;
        std::vector<Matrix> dh;      // generic fallback scratch
    };

    void init(State& s, long long traj, TrajectoryRng& rng, const QmcSequence* seq,
              uint64_t point) const {
        (void)traj;
        BathSample bath = sample_bath(model_, cfg_.bath, rng.bath);
        s.R = std::move(bath.R);
        s.P = std::move(bath.P);
        const MappingSample ms = seq ? sample_mapping_pair(model_.n_states, *seq, point)
                                     : sample_mapping_pair(model_.n_states, rng.mapping);
        const int n = model_.n_states;
        s.z.resize(n);
        s.zb.resize(n);
        for (int k = 0; k < n; ++k) {
            s.z(k) = Complex(ms.q(k), ms.p(k));
            s.zb(k) = Complex(ms.qb(k), ms.pb(k));
        }
        CMatrix rho0;
        if (rho0_constant_) {
            rho0 = rho0_;
        } else {
            adiabatize_into(model_, s.R, nullptr, 1e-10, s.ws, s.frame);
            rho0 = cfg_.initial.density(n, &s.frame);
        }
        s.weight = fbts_prefactor(ms, rho0);
        s.ctrl0 = s.weight * s.z.dot(s.zb);  // Eigen dot conjugates the first argument
    }

    void step(State& s, int step_index, TrajectoryRng& rng) const {
        integrate(s);
        if (block_ > 0 && (step_index + 1) % block_ == 0) {
            const int slot = (step_index + 1) / block_;
            if (slot <= cfg_.jumps.slots && rng.hops.uniform() < cfg_.jumps.prob)
                jump(s, rng);
        }
        if (!s.z.allFinite() || !s.P.allFinite()) throw StepDiverged("fbts coordinates diverged");
    }

    void measure(const State& s, MeasureSink& sink) const {
        sink.weight_magnitude(std::abs(s.weight));
        const Complex w = sink.filtered_weight(s.weight);
        const AdiabaticFrame* frame = nullptr;
        for (int i = 0; i < obs_.n_series(); ++i) {
            const auto& e = obs_.entries[i];
            Complex est;
            if (e.needs_frame) {
                if (!frame) {
                    auto& mut = const_cast<State&>(s);
                    adiabatize_into(model_, s.R, nullptr, 1e-10, mut.ws, mut.frame);
                    frame = &s.frame;
                }
                // z^dag (u u^T) z' for the adiabatic projector u u^T.
                const auto u = frame->vectors.col(e.spec.state);
                Complex zf = 0.0, zbk = 0.0;
                for (int k = 0; k < u.size(); ++k) {
                    zf += u(k) * std::conj(s.z(k));
                    zbk += u(k) * s.zb(k);
                }
                est = zf * zbk;
            } else {
                est = s.z.dot(e.fixed * s.zb);
            }
            Complex c = w * est;
            if (cfg_.trace_control)
                c -= (e.trace / static_cast<double>(model_.n_states)) * (s.ctrl0 - 1.0);
            const bool im = e.spec.component == ObservableSpec::Component::im;
            sink.add_raw(i, im ? Complex(c.imag(), 0.0) : Complex(c.real(), 0.0));
        }
    }

    void finalize(const State& s, MeasureSink& sink) const {
        for (size_t h = 0; h < obs_.histograms.size(); ++h) {
            const auto& spec = obs_.histograms[h];
            if (model_.n_bath != 1)
                throw Error("momentum histogram requires a one-dimensional bath");
            // Final bath-momentum density weighted by the trace estimator, or by an
            // adiabatic projector when a projection state is requested.
            const Complex w = sink.filtered_weight(s.weight);
            Complex est;
            if (spec.projection >= 0) {
                auto& mut = const_cast<State&>(s);
                adiabatize_into(model_, s.R, nullptr, 1e-10, mut.ws, mut.frame);
                const auto u = s.frame.vectors.col(spec.projection);
                Complex zf = 0.0, zbk = 0.0;
                for (int k = 0; k < u.size(); ++k) {
                    zf += u(k) * std::conj(s.z(k));
                    zbk += u(k) * s.zb(k);
                }
                est = zf * zbk;
            } else {
                est = s.z.dot(s.zb);
            }
            const double ww = (w * est).real();
            sink.hist_add(static_cast<int>(h), s.P(0), ww);
            sink.hist_total(static_cast<int>(h), ww);
        }
    }

    // Extended-phase-space energy, for conservation tests.
    double energy(const State& s) const {
        Matrix h(model_.n_states, model_.n_states);
        model_.h(s.R, h);
        const CMatrix hc = h.cast<Complex>();
        double e = model_.v_bath(s.R) - h.trace();
        for (int i = 0; i < model_.n_bath; ++i) e += 0.5 * s.P(i) * s.P(i) / model_.masses(i);
        e += 0.5 * (s.z.dot(hc * s.z).real() + s.zb.dot(hc * s.zb).real());
        return e;
    }

private:
    void integrate(State& s) const {
        const double half = 0.5 * dt_;
        for (int i = 0; i < model_.n_bath; ++i) s.R(i) += half * s.P(i) / model_.masses(i);
        s.h.resize(model_.n_states, model_.n_states);
        model_.h(s.R, s.h);
        s.rot.apply(s.h, half, s.z, &s.zb);
        kick(s, dt_);
        s.rot.apply(s.h, half, s.z, &s.zb);
        for (int i = 0; i < model_.n_bath; ++i) s.R(i) += half * s.P(i) / model_.masses(i);
    }

    void kick(State& s, double dt) const {
        model_.f_bath(s.R, s.fb);
        detail::symmetric_outer_re(s.z, s.G);
        Matrix Gb;
        detail::symmetric_outer_re(s.zb, Gb);
        s.G += Gb;
        if (model_.dh_contract) {
            model_.dh_contract(s.R, s.G, s.grad);
        } else {
            model_.dh_dR(s.R, s.dh);
            s.grad.resize(model_.n_bath);
            for (int i = 0; i < model_.n_bath; ++i)
                s.grad(i) = (s.dh[i].array() * s.G.array()).sum();
        }
        Vector tr;
        if (model_.dh_trace) {
            model_.dh_trace(s.R, tr);
        } else {
            model_.dh_dR(s.R, s.dh);
            tr.resize(model_.n_bath);
            for (int i = 0; i < model_.n_bath; ++i) tr(i) = s.dh[i].trace();
        }
        // F_i = f_bath + tr(dh_i) - (1/2) [z' dh_i z + zb' dh_i zb]
        for (int i = 0; i < model_.n_bath; ++i)
            s.P(i) += dt * (s.fb(i) + tr(i) - 0.5 * s.grad(i));
    }

    void jump(State& s, TrajectoryRng& rng) const {
        const int n = model_.n_states;
        if (cfg_.jumps.resampler == JumpSchedule::Resampler::projector) {
            // Close the joint through the physical subspace: the past segment
            // contributes the mapping-state amplitudes of the propagated values
            // and the next segment restarts from fresh phi-sampled variables.
            const double w = std::sqrt(0.5);
            for (int side = 0; side < 2; ++side) {
                CVector& z = side == 0 ? s.z : s.zb;
                const CVector z0 = z;
                for (int k = 0; k < n; ++k) {
                    double g0, g1;
                    rng.hops.gaussian_pair(g0, g1);
                    z(k) = Complex(w * g0, w * g1);
                }
                s.weight *= side == 0 ? z0.dot(z) : z.dot(z0);
            }
            return;
        }
        const bool printed = cfg_.jumps.kernel == JumpSchedule::Kernel::as_printed;
        // Relax the orthogonality approximation on both sides: forward overlap
        // <z0|zeta>, backward overlap <zeta'|z0'>. With the standard kernel the
        // zero-point Gaussian of the later mapping-state contraction is folded
        // into the proposal, which centers it at z0/2; the overlap phase and the
        // proposal normalization e^{|z0|^2/4} ride in the weight.
        const double center = printed ? 1.0 : 0.5;
        const double sd = std::sqrt(0.5);  // per real component
        for (int side = 0; side < 2; ++side) {
            CVector& z = side == 0 ? s.z : s.zb;
            const CVector z0 = z;
            for (int k = 0; k < n; ++k) {
                double g0, g1;
                rng.hops.gaussian_pair(g0, g1);
                z(k) = center * z0(k) + sd * Complex(g0, g1);
            }
            const Complex ov = z0.dot(z);  // z0^dagger zeta
            if (printed) {
                // Literal kernel exp(-|dz|^2 - i(z0.z* - z0*.z)): real exponent.
                s.weight *= std::exp(-2.0 * ov.imag());
            } else {
                const double mass = std::exp(0.25 * z0.squaredNorm());
                const double phase = side == 0 ? ov.imag() : -ov.imag();
                s.weight *= mass * std::polar(1.0, phase);
            }
        }
    }

    MappingSolverConfig cfg_;
    const DiabaticModel& model_;
    ObservablePlan obs_;
    int steps_;
    double dt_;
    int block_ = 0;
    bool rho0_constant_ = true;
    CMatrix rho0_;
};

// ---------------------------------------------------------------------------
// PBME kernel
// ---------------------------------------------------------------------------

class PbmeKernel {
public:
    PbmeKernel(const MappingSolverConfig& cfg, const EnsembleOptions& opt)
        : cfg_(cfg), model_(*cfg.model), obs_(cfg.observables, model_.n_states), dt_(opt.dt) {
        rho0_constant_ = cfg_.initial.kind != InitialState::Kind::adiabatic_ground;
        if (rho0_constant_) rho0_ = cfg_.initial.density(model_.n_states);
    }

    int n_states() const { return model_.n_states; }
    int n_series() const { return obs_.n_series(); }
    const std::vector<ObservableSpec>& histograms() const { return obs_.histograms; }

    struct State {
        Vector R, P;
        CVector z;
        Complex weight;  // g-function value against rho(0)
        Complex ctrl0;
        Matrix h, G;
        Vector grad, fb;
        FrameWorkspace ws;
        AdiabaticFrame frame;
        detail::MappingRotator rot;
        std::vector<Matrix> dh;
    };

    void init(State& s, long long traj, TrajectoryRng& rng, const QmcSequence* seq,
              uint64_t point) const {
        (void)traj;
        BathSample bath = sample_bath(model_, cfg_.bath, rng.bath);
        s.R = std::move(bath.R);
        s.P = std::move(bath.P);
        const MappingSample ms = seq ? sample_mapping_pair(model_.n_states, *seq, point)
                                     : sample_mapping_pair(model_.n_states, rng.mapping);
        const int n = model_.n_states;
        s.z.resize(n);
        for (int k = 0; k < n; ++k) s.z(k) = Complex(ms.q(k), ms.p(k));
        CMatrix rho0;
        if (rho0_constant_) {
            rho0 = rho0_;
        } else {
            adiabatize_into(model_, s.R, nullptr, 1e-10, s.ws, s.frame);
            rho0 = cfg_.initial.density(n, &s.frame);
        }
        // g-function estimator: w0 = 2 z^dag rho0 z - Tr rho0.
        s.weight = 2.0 * s.z.dot(rho0 * s.z) - rho0.trace();
        s.ctrl0 = s.weight * 0.5 * (s.z.squaredNorm() - n);
    }

    void step(State& s, int step_index, TrajectoryRng& rng) const {
        (void)step_index;
        (void)rng;
        const double half = 0.5 * dt_;
        const int n = model_.n_states;
        for (int i = 0; i < model_.n_bath; ++i) s.R(i) += half * s.P(i) / model_.masses(i);
        s.h.resize(n, n);
        model_.h(s.R, s.h);
        const double tr_n = s.h.trace() / n;
        for (int k = 0; k < n; ++k) s.h(k, k) -= tr_n;  // traceless part drives the rotation
        s.rot.apply(s.h, half, s.z, nullptr);
        kick(s, dt_);
        s.rot.apply(s.h, half, s.z, nullptr);
        for (int i = 0; i < model_.n_bath; ++i) s.R(i) += half * s.P(i) / model_.masses(i);
        if (!s.z.allFinite() || !s.P.allFinite()) throw StepDiverged("pbme coordinates diverged");
    }

    void measure(const State& s, MeasureSink& sink) const {
        sink.weight_magnitude(std::abs(s.weight));
        const Complex w = sink.filtered_weight(s.weight);
        const AdiabaticFrame* frame = nullptr;
        const int n = model_.n_states;
        for (int i = 0; i < obs_.n_series(); ++i) {
            const auto& e = obs_.entries[i];
            Complex est;
            if (e.needs_frame) {
                if (!frame) {
                    auto& mut = const_cast<State&>(s);
                    adiabatize_into(model_, s.R, nullptr, 1e-10, mut.ws, mut.frame);
                    frame = &s.frame;
                }
                const Vector u = frame->vectors.col(e.spec.state);
                Complex zu = 0.0;
                for (int k = 0; k < n; ++k) zu += u(k) * std::conj(s.z(k));
                est = 0.5 * (zu * std::conj(zu) - 1.0);
            } else {
                // Operator symbol: (1/2)(z^dag B z - Tr B).
                est = 0.5 * (s.z.dot(e.fixed * s.z) - e.trace);
            }
            Complex c = w * est;
            if (cfg_.trace_control) c -= (e.trace / static_cast<double>(n)) * (s.ctrl0 - 1.0);
            const bool im = e.spec.component == ObservableSpec::Component::im;
            sink.add_raw(i, im ? Complex(c.imag(), 0.0) : Complex(c.real(), 0.0));
        }
    }

    void finalize(const State& s, MeasureSink& sink) const {
        for (size_t h = 0; h < obs_.histograms.size(); ++h) {
            if (model_.n_bath != 1)
                throw Error("momentum histogram requires a one-dimensional bath");
            const Complex w = sink.filtered_weight(s.weight);
            const double ww = (w * 0.5 * Complex(s.z.squaredNorm() - model_.n_states)).real();
            sink.hist_add(static_cast<int>(h), s.P(0), ww);
            sink.hist_total(static_cast<int>(h), ww);
        }
    }

    double energy(const State& s) const {
        const int n = model_.n_states;
        Matrix h(n, n);
        model_.h(s.R, h);
        const double tr_n = h.trace() / n;
        double e = model_.v_bath(s.R) + tr_n;
        for (int k = 0; k < n; ++k) h(k, k) -= tr_n;
        for (int i = 0; i < model_.n_bath; ++i) e += 0.5 * s.P(i) * s.P(i) / model_.masses(i);
        e += 0.5 * s.z.dot(h.cast<Complex>() * s.z).real();
        return e;
    }

private:
    void kick(State& s, double dt) const {
        const int n = model_.n_states;
        model_.f_bath(s.R, s.fb);
        detail::symmetric_outer_re(s.z, s.G);
        if (model_.dh_contract) {
            model_.dh_contract(s.R, s.G, s.grad);
        } else {
            model_.dh_dR(s.R, s.dh);
            s.grad.resize(model_.n_bath);
            for (int i = 0; i < model_.n_bath; ++i)
                s.grad(i) = (s.dh[i].array() * s.G.array()).sum();
        }
        Vector tr;
        if (model_.dh_trace) {
            model_.dh_trace(s.R, tr);
        } else {
            model_.dh_dR(s.R, s.dh);
            tr.resize(model_.n_bath);
            for (int i = 0; i < model_.n_bath; ++i) tr(i) = s.dh[i].trace();
        }
        const double zn = s.z.squaredNorm();
        // F_i = f_bath - tr(dh_i)/n - (1/2)[z^dag dh_i z - tr(dh_i) |z|^2 / n]
        for (int i = 0; i < model_.n_bath; ++i)
            s.P(i) += dt * (s.fb(i) - tr(i) / n - 0.5 * (s.grad(i) - tr(i) * zn / n));
    }

    MappingSolverConfig cfg_;
    const DiabaticModel& model_;
    ObservablePlan obs_;
    double dt_;
    bool rho0_constant_ = true;
    CMatrix rho0_;
};

}  // namespace qcldyn
