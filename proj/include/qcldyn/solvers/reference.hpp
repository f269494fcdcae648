#pragma once

// Baseline solvers integrated in the adiabatic basis.
//
// Ehrenfest: bath moves under the mean force Re(F_ab rho_ba) with
//   F_ab = F_a delta_ab + dE_ab d_ab (equivalently -<a|dh/dR|b>), subsystem
//   density matrix transported with the frequency and coupling terms.
// FSSH: fewest-switches surface hopping; amplitudes carry the same transport
//   equation, hops use the rate -2 v.Re(d_ab rho_ba)/rho_aa with probability
//   r dt Theta(r), and accepted hops rescale the momentum along d_hat with the
//   full (factor two) energy term. Frustrated hops are rejected with no
//   velocity reversal.

#include "../adiabatic.hpp"
#include "../ensemble.hpp"
#include "../sampling.hpp"

namespace qcldyn {

struct ReferenceSolverConfig {
    const DiabaticModel* model = nullptr;
    BathSamplerSpec bath;
    InitialState initial;
    std::vector<ObservableSpec> observables;
    double eps_degen = 1e-10;
};

namespace detail {

// Right-hand side pieces shared by Ehrenfest and FSSH: D(a,b) = v . d_ab.
inline void velocity_coupling(const AdiabaticFrame& frame, const DiabaticModel& m,
                              const Vector& P, Matrix& D) {
    const int n = frame.n_states();
    D.setZero(n, n);
    for (int i = 0; i < m.n_bath; ++i) {
        const double v = P(i) / m.masses(i);
        D += v * frame.coupling[i];
    }
}

}  // namespace detail

class EhrenfestKernel {
public:
    EhrenfestKernel(const ReferenceSolverConfig& cfg, const EnsembleOptions& opt)
        : cfg_(cfg), model_(*cfg.model), obs_(cfg.observables, model_.n_states), dt_(opt.dt) {}

    int n_states() const { return model_.n_states; }
    int n_series() const { return obs_.n_series(); }
    const std::vector<ObservableSpec>& histograms() const { return obs_.histograms; }

    struct State {
        Vector R, P;
        CMatrix rho;             // adiabatic basis
        AdiabaticFrame frame;    // frame at current R
        FrameWorkspace ws;
        bool has_frame = false;
    };

    void init(State& s, long long, TrajectoryRng& rng, const QmcSequence*, uint64_t) const {
        BathSample bath = sample_bath(model_, cfg_.bath, rng.bath);
        s.R = std::move(bath.R);
        s.P = std::move(bath.P);
        adiabatize_into(model_, s.R, nullptr, cfg_.eps_degen, s.ws, s.frame);
        s.has_frame = true;
        s.rho = cfg_.initial.kind == InitialState::Kind::adiabatic_ground
                    ? cfg_.initial.density(model_.n_states, &s.frame)
                    : to_adiabatic(cfg_.initial.density(model_.n_states), s.frame);
    }

    // Classical RK4 on (R, P, rho); frames are rebuilt at every stage position
    // with the gauge chained from the step-start frame.
    void step(State& s, int, TrajectoryRng&) const {
        const int n = model_.n_states;
        const AdiabaticFrame base = s.frame;
        Vector kR[4], kP[4];
        CMatrix kRho[4];
        AdiabaticFrame stage = base;
        for (int k = 0; k < 4; ++k) {
            const double f = k == 3 ? 1.0 : 0.5;
            const Vector Rk =
                k == 0 ? s.R : (s.R + f * dt_ * kR[k - 1]).eval();
            const Vector Pk =
                k == 0 ? s.P : (s.P + f * dt_ * kP[k - 1]).eval();
            const CMatrix rhok =
                k == 0 ? s.rho : (s.rho + f * dt_ * kRho[k - 1]).eval();
            if (k > 0) adiabatize_into(model_, Rk, &base, cfg_.eps_degen, s.ws, stage);
            const AdiabaticFrame& fr = k == 0 ? base : stage;
            derivative(fr, Rk, Pk, rhok, kR[k], kP[k], kRho[k]);
        }
        s.R += dt_ / 6.0 * (kR[0] + 2.0 * kR[1] + 2.0 * kR[2] + kR[3]);
        s.P += dt_ / 6.0 * (kP[0] + 2.0 * kP[1] + 2.0 * kP[2] + kP[3]);
        s.rho += dt_ / 6.0 * (kRho[0] + 2.0 * kRho[1] + 2.0 * kRho[2] + kRho[3]);
        adiabatize_into(model_, s.R, &base, cfg_.eps_degen, s.ws, s.frame);
        if (!s.P.allFinite() || !s.rho.allFinite())
            throw StepDiverged("ehrenfest coordinates diverged");
        (void)n;
    }

    void measure(const State& s, MeasureSink& sink) const {
        sink.weight_magnitude(1.0);
        for (int i = 0; i < obs_.n_series(); ++i) {
            const auto& e = obs_.entries[i];
            const CMatrix b = e.needs_frame
                                  ? basis_transform(e.spec, s.frame,
                                                    ObservableSpec::Basis::adiabatic)
                                  : to_adiabatic(e.fixed, s.frame);
            const Complex c = (b * s.rho).trace();
            const bool im = e.spec.component == ObservableSpec::Component::im;
            sink.add_raw(i, im ? Complex(c.imag(), 0.0) : Complex(c.real(), 0.0));
        }
    }

    void finalize(const State& s, MeasureSink& sink) const {
        for (size_t h = 0; h < obs_.histograms.size(); ++h) {
            const auto& spec = obs_.histograms[h];
            if (model_.n_bath != 1)
                throw Error("momentum histogram requires a one-dimensional bath");
            const double ww = spec.projection >= 0
                                  ? s.rho(spec.projection, spec.projection).real()
                                  : 1.0;
            sink.hist_add(static_cast<int>(h), s.P(0), ww);
            sink.hist_total(static_cast<int>(h), ww);
        }
    }

    // Mean-field energy for conservation tests.
    double energy(const State& s) const {
        double e = model_.v_bath(s.R);
        for (int i = 0; i < model_.n_bath; ++i) e += 0.5 * s.P(i) * s.P(i) / model_.masses(i);
        for (int a = 0; a < model_.n_states; ++a)
            e += s.rho(a, a).real() * s.frame.energies(a);
        return e;
    }

private:
    void derivative(const AdiabaticFrame& fr, const Vector& R, const Vector& P,
                    const CMatrix& rho, Vector& dR, Vector& dP, CMatrix& dRho) const {
        const int n = model_.n_states;
        dR.resize(model_.n_bath);
        dP.resize(model_.n_bath);
        for (int i = 0; i < model_.n_bath; ++i) dR(i) = P(i) / model_.masses(i);
        // dP_i = -Re tr(<a|dh/dR_i|b> rho_ba) + f_bath,i.
        Vector fb;
        model_.f_bath(R, fb);
        for (int i = 0; i < model_.n_bath; ++i) {
            double acc = 0.0;
            for (int a = 0; a < n; ++a) {
                acc += fr.dh_sandwich[i](a, a) * rho(a, a).real();
                for (int b = a + 1; b < n; ++b)
                    acc += 2.0 * fr.dh_sandwich[i](a, b) * rho(b, a).real();
            }
            dP(i) = fb(i) - acc;
        }
        Matrix D;
        detail::velocity_coupling(fr, model_, P, D);
        dRho.resize(n, n);
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b)
                dRho(a, b) = Complex(0, -(fr.energies(a) - fr.energies(b))) * rho(a, b);
        dRho -= (D.cast<Complex>() * rho - rho * D.cast<Complex>());
    }

protected:
    ReferenceSolverConfig cfg_;
    const DiabaticModel& model_;
    ObservablePlan obs_;
    double dt_;
};

class FsshKernel {
public:
    FsshKernel(const ReferenceSolverConfig& cfg, const EnsembleOptions& opt)
        : cfg_(cfg),
          model_(*cfg.model),
          obs_(cfg.observables, model_.n_states),
          dt_(opt.dt),
          mass_(model_.common_mass()) {
        if (cfg_.initial.kind == InitialState::Kind::matrix)
            throw ConfigError("fssh supports pure or adiabatic_ground initial states");
    }

    int n_states() const { return model_.n_states; }
    int n_series() const { return obs_.n_series(); }
    const std::vector<ObservableSpec>& histograms() const { return obs_.histograms; }

    struct State {
        Vector R, P;
        CVector c;            // adiabatic amplitudes
        int active = 0;
        AdiabaticFrame frame;
        FrameWorkspace ws;
    };

    void init(State& s, long long, TrajectoryRng& rng, const QmcSequence*, uint64_t) const {
        BathSample bath = sample_bath(model_, cfg_.bath, rng.bath);
        s.R = std::move(bath.R);
        s.P = std::move(bath.P);
        adiabatize_into(model_, s.R, nullptr, cfg_.eps_degen, s.ws, s.frame);
        const int n = model_.n_states;
        s.c.setZero(n);
        if (cfg_.initial.kind == InitialState::Kind::adiabatic_ground) {
            s.c(0) = 1.0;
            s.active = 0;
        } else {
            // Pure subsystem state expanded in the local adiabatic basis.
            for (int a = 0; a < n; ++a) s.c(a) = s.frame.vectors(cfg_.initial.state, a);
            // Active state sampled from the adiabatic populations.
            const double u = rng.pairs.uniform();
            double run = 0.0;
            s.active = n - 1;
            for (int a = 0; a < n; ++a) {
                run += std::norm(s.c(a));
                if (u < run) {
                    s.active = a;
                    break;
                }
            }
        }
    }

    void step(State& s, int, TrajectoryRng& rng) const {
        const int n = model_.n_states;
        const AdiabaticFrame base = s.frame;
        // RK4 on (R, P, c) with the active-surface force.
        Vector kR[4], kP[4];
        CVector kC[4];
        AdiabaticFrame stage = base;
        for (int k = 0; k < 4; ++k) {
            const double f = k == 3 ? 1.0 : 0.5;
            const Vector Rk = k == 0 ? s.R : (s.R + f * dt_ * kR[k - 1]).eval();
            const Vector Pk = k == 0 ? s.P : (s.P + f * dt_ * kP[k - 1]).eval();
            const CVector ck = k == 0 ? s.c : (s.c + f * dt_ * kC[k - 1]).eval();
            if (k > 0) adiabatize_into(model_, Rk, &base, cfg_.eps_degen, s.ws, stage);
            const AdiabaticFrame& fr = k == 0 ? base : stage;
            derivative(fr, Rk, Pk, ck, s.active, kR[k], kP[k], kC[k]);
        }
        (void)n;
        s.R += dt_ / 6.0 * (kR[0] + 2.0 * kR[1] + 2.0 * kR[2] + kR[3]);
        s.P += dt_ / 6.0 * (kP[0] + 2.0 * kP[1] + 2.0 * kP[2] + kP[3]);
        s.c += dt_ / 6.0 * (kC[0] + 2.0 * kC[1] + 2.0 * kC[2] + kC[3]);
        adiabatize_into(model_, s.R, &base, cfg_.eps_degen, s.ws, s.frame);
        hop_stage(s, rng);
        if (!s.P.allFinite() || !s.c.allFinite()) throw StepDiverged("fssh diverged");
    }

    void measure(const State& s, MeasureSink& sink) const {
        sink.weight_magnitude(1.0);
        const int n = model_.n_states;
        for (int i = 0; i < obs_.n_series(); ++i) {
            const auto& e = obs_.entries[i];
            const CMatrix b = e.needs_frame
                                  ? basis_transform(e.spec, s.frame,
                                                    ObservableSpec::Basis::adiabatic)
                                  : to_adiabatic(e.fixed, s.frame);
            // Populations from the active state, coherences from the amplitudes.
            Complex c = b(s.active, s.active);
            for (int a = 0; a < n; ++a)
                for (int bb = 0; bb < n; ++bb)
                    if (a != bb) c += b(a, bb) * s.c(bb) * std::conj(s.c(a));
            const bool im = e.spec.component == ObservableSpec::Component::im;
            sink.add_raw(i, im ? Complex(c.imag(), 0.0) : Complex(c.real(), 0.0));
        }
    }

    void finalize(const State& s, MeasureSink& sink) const {
        for (size_t h = 0; h < obs_.histograms.size(); ++h) {
            const auto& spec = obs_.histograms[h];
            if (model_.n_bath != 1)
                throw Error("momentum histogram requires a one-dimensional bath");
            const double ww =
                spec.projection >= 0 ? (s.active == spec.projection ? 1.0 : 0.0) : 1.0;
            sink.hist_add(static_cast<int>(h), s.P(0), ww);
            sink.hist_total(static_cast<int>(h), ww);
        }
    }

    double energy(const State& s) const {
        double e = model_.v_bath(s.R) + s.frame.energies(s.active);
        for (int i = 0; i < model_.n_bath; ++i) e += 0.5 * s.P(i) * s.P(i) / model_.masses(i);
        return e;
    }

private:
    void derivative(const AdiabaticFrame& fr, const Vector& R, const Vector& P,
                    const CVector& c, int active, Vector& dR, Vector& dP, CVector& dC) const {
        const int n = model_.n_states;
        dR.resize(model_.n_bath);
        dP.resize(model_.n_bath);
        for (int i = 0; i < model_.n_bath; ++i) dR(i) = P(i) / model_.masses(i);
        // Active-surface force plus the bath-only force.
        Vector fb;
        model_.f_bath(R, fb);
        for (int i = 0; i < model_.n_bath; ++i) dP(i) = fr.forces(i, active) + fb(i);
        Matrix D;
        detail::velocity_coupling(fr, model_, P, D);
        dC.resize(n);
        for (int a = 0; a < n; ++a) {
            Complex v = Complex(0, -fr.energies(a)) * c(a);
            for (int b = 0; b < n; ++b) v -= D(a, b) * c(b);
            dC(a) = v;
        }
    }

    void hop_stage(State& s, TrajectoryRng& rng) const {
        const int n = model_.n_states;
        const double paa = std::norm(s.c(s.active));
        if (paa <= 1e-12) return;
        Matrix D;
        detail::velocity_coupling(s.frame, model_, s.P, D);
        const double u = rng.hops.uniform();
        double run = 0.0;
        for (int b = 0; b < n; ++b) {
            if (b == s.active) continue;
            const Complex rho_ba = s.c(b) * std::conj(s.c(s.active));
            const double rate = -2.0 * (D(s.active, b) * rho_ba).real() / paa;
            const double p = std::max(0.0, rate * dt_);
            run += p;
            if (u < run) {
                attempt_hop(s, b);
                return;
            }
        }
    }

    void attempt_hop(State& s, int target) const {
        Vector d(model_.n_bath);
        for (int i = 0; i < model_.n_bath; ++i)
            d(i) = s.frame.coupling[i](s.active, target);
        const double dn = d.norm();
        if (dn <= 0.0) return;
        d /= dn;
        const double pd = s.P.dot(d);
        const double dE = s.frame.energies(s.active) - s.frame.energies(target);
        const double disc = pd * pd + 2.0 * dE * mass_;
        if (disc < 0.0) return;  // frustrated: reject, no velocity reversal
        const double sign = pd >= 0.0 ? 1.0 : -1.0;
        s.P += d * (sign * std::sqrt(disc) - pd);
        s.active = target;
    }

    ReferenceSolverConfig cfg_;
    const DiabaticModel& model_;
    ObservablePlan obs_;
    double dt_;
    double mass_;
};

}  // namespace qcldyn
