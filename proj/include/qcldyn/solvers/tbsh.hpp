#pragma once

// Trotter-based surface hopping: Monte Carlo evaluation of the short-time
// factorized adiabatic propagator over density-matrix pair indices (a, a').
// Each step evolves the bath on the mean of the two adiabatic surfaces and
// accumulates the coherence phase; a uniformly chosen single-index change is
// then accepted with probability pi = |v.d dt| / (1 + |v.d dt|), reweighting
// by 1/pi (with the candidate-count factor and the signed v.d dt matrix
// element) on a hop and 1/(1 - pi) otherwise. Hops shift the bath momentum
// along the coupling direction (half jump: (P'.d)^2 = (P.d)^2 + M dE).
// Frustrated upward half-jumps continue on the current pair with the no-hop
// weight. A configurable bound on |weight| filters unstable trajectories at
// measurement time; clamped mass is reported, not silently dropped.

#include "../adiabatic.hpp"
#include "../ensemble.hpp"
#include "../sampling.hpp"

namespace qcldyn {

struct TbshSolverConfig {
    const DiabaticModel* model = nullptr;
    BathSamplerSpec bath;
    InitialState initial;
    std::vector<ObservableSpec> observables;
    double eps_degen = 1e-10;
    int max_step_retries = 4;
};

// P' = P + d_hat (sgn(P.d_hat) sqrt((P.d_hat)^2 + dE M) - P.d_hat), or
// frustrated when the discriminant is negative.
inline bool momentum_jump(Vector& P, const Vector& d_hat, double dE, double mass) {
    const double pd = P.dot(d_hat);
    const double disc = pd * pd + dE * mass;
    if (disc < 0.0) return false;
    const double sign = pd >= 0.0 ? 1.0 : -1.0;
    P += d_hat * (sign * std::sqrt(disc) - pd);
    return true;
}

inline double hop_probability(double v_dot_d_dt) {
    const double a = std::abs(v_dot_d_dt);
    return a / (1.0 + a);
}

class TbshKernel {
public:
    TbshKernel(const TbshSolverConfig& cfg, const EnsembleOptions& opt)
        : cfg_(cfg),
          model_(*cfg.model),
          obs_(cfg.observables, model_.n_states),
          dt_(opt.dt),
          mass_(model_.common_mass()),
          n_traj_(opt.trajectories) {
        // Golden-ratio stratification offset for the initial pair choice.
        Rng r(opt.seed, Stream::pairs, 0xfffffffffULL);
        pair_offset_ = r.uniform();
    }

    int n_states() const { return model_.n_states; }
    int n_series() const { return obs_.n_series(); }
    const std::vector<ObservableSpec>& histograms() const { return obs_.histograms; }

    struct State {
        Vector R, P;
        int a = 0, b = 0;        // pair index s = (a, b)
        Complex phase{1.0, 0.0}; // W, unit modulus
        Complex weight{1.0, 0.0};
        long hops = 0;
        AdiabaticFrame frame;          // midpoint frame of the last step
        AdiabaticFrame measure_frame;  // frame at measurement configurations
        FrameWorkspace ws;
        Vector fbath, d;
        bool has_frame = false;
    };

    void init(State& s, long long traj, TrajectoryRng& rng, const QmcSequence*, uint64_t) const {
        BathSample bath = sample_bath(model_, cfg_.bath, rng.bath);
        s.R = std::move(bath.R);
        s.P = std::move(bath.P);
        s.phase = Complex(1.0, 0.0);
        s.hops = 0;
        adiabatize_into(model_, s.R, nullptr, cfg_.eps_degen, s.ws, s.frame);
        s.has_frame = true;  // gauge chains from this frame onward

        // rho(0) in the adiabatic frame at the sampled configuration.
        CMatrix rho0 = cfg_.initial.kind == InitialState::Kind::adiabatic_ground
                           ? cfg_.initial.density(model_.n_states, &s.frame)
                           : to_adiabatic(cfg_.initial.density(model_.n_states), s.frame);

        // Stratified choice over the nonzero elements: trajectory index walks a
        // golden-ratio sequence through the cumulative |rho0| distribution.
        const int n = model_.n_states;
        double total = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) total += std::abs(rho0(i, j));
        if (total <= 0.0) throw Error("initial density matrix is zero");
        double u = std::fmod(pair_offset_ + 0.6180339887498949 * static_cast<double>(traj), 1.0);
        u *= total;
        double run = 0.0;
        int ia = 0, ib = 0;
        double prob = 1.0;
        for (int i = 0; i < n && run <= u; ++i)
            for (int j = 0; j < n; ++j) {
                const double m = std::abs(rho0(i, j));
                if (m <= 0.0) continue;
                run += m;
                if (run > u) {
                    ia = i;
                    ib = j;
                    prob = m / total;
                    break;
                }
            }
        // Trajectory labeled s = (a, b) estimates B^{ab}(t) against rho^{ba}(0).
        s.a = ib;
        s.b = ia;
        s.weight = rho0(ia, ib) / prob;
    }

    void step(State& s, int, TrajectoryRng& rng) const {
        double dt = dt_;
        for (int attempt = 0;; ++attempt) {
            try {
                advance(s, dt);
                break;
            } catch (const DegenerateEigenvalues&) {
                // Measure-zero crossing hit head on: retry the segment with half step.
                if (attempt >= cfg_.max_step_retries)
                    throw StepDiverged("degenerate surface encountered repeatedly");
                dt *= 0.5;
            }
        }
        hop_stage(s, dt_, rng);
        if (!s.P.allFinite() || !s.R.allFinite()) throw StepDiverged("tbsh coordinates diverged");
    }

    void measure(const State& s, MeasureSink& sink) const {
        sink.weight_magnitude(std::abs(s.weight));
        const Complex w = sink.filtered_weight(s.weight) * s.phase;
        auto& mut = const_cast<State&>(s);
        adiabatize_into(model_, s.R, s.has_frame ? &s.frame : nullptr, cfg_.eps_degen, mut.ws,
                        mut.measure_frame);
        for (int i = 0; i < obs_.n_series(); ++i) {
            const auto& e = obs_.entries[i];
            const CMatrix b = e.needs_frame
                                  ? basis_transform(e.spec, mut.measure_frame,
                                                    ObservableSpec::Basis::adiabatic)
                                  : to_adiabatic(e.fixed, mut.measure_frame);
            Complex c = w * b(s.a, s.b);
            const bool im = e.spec.component == ObservableSpec::Component::im;
            sink.add_raw(i, im ? Complex(c.imag(), 0.0) : Complex(c.real(), 0.0));
        }
    }

    void finalize(const State& s, MeasureSink& sink) const {
        for (size_t h = 0; h < obs_.histograms.size(); ++h) {
            const auto& spec = obs_.histograms[h];
            if (model_.n_bath != 1)
                throw Error("momentum histogram requires a one-dimensional bath");
            // Diagonal (population) contributions only.
            double ww = 0.0;
            if (s.a == s.b && (spec.projection < 0 || spec.projection == s.a))
                ww = (sink.filtered_weight(s.weight) * s.phase).real();
            sink.hist_add(static_cast<int>(h), s.P(0), ww);
            sink.hist_total(static_cast<int>(h), ww);
        }
    }

private:
    void advance(State& s, double dt) const {
        // Position-Verlet on the mean surface; the frame (and the phase
        // frequency) is evaluated at the true midpoint.
        const double half = 0.5 * dt;
        Vector R_mid = s.R;
        for (int i = 0; i < model_.n_bath; ++i) R_mid(i) += half * s.P(i) / model_.masses(i);
        AdiabaticFrame next;
        adiabatize_into(model_, R_mid, s.has_frame ? &s.frame : nullptr, cfg_.eps_degen, s.ws,
                        next);
        s.frame = std::move(next);
        s.has_frame = true;
        // Density element rho^{(s.b)(s.a)} rotates as e^{-i w_{ba} dt}; the midpoint
        // frame supplies the frequency.
        if (s.a != s.b)
            s.phase *= std::polar(1.0, (s.frame.energies(s.a) - s.frame.energies(s.b)) * dt);
        model_.f_bath(R_mid, s.fbath);
        for (int i = 0; i < model_.n_bath; ++i) {
            const double f =
                0.5 * (s.frame.forces(i, s.a) + s.frame.forces(i, s.b)) + s.fbath(i);
            s.P(i) += dt * f;
        }
        s.R = R_mid;
        for (int i = 0; i < model_.n_bath; ++i) s.R(i) += half * s.P(i) / model_.masses(i);
    }

    void hop_stage(State& s, double dt, TrajectoryRng& rng) const {
        const int n = model_.n_states;
        if (n < 2) return;
        const int n_cand = 2 * (n - 1);
        const int pick = static_cast<int>(rng.hops.below(static_cast<uint32_t>(n_cand)));
        // Candidates: first-index changes a -> c, then second-index changes b -> c.
        const bool first_index = pick < (n - 1);
        const int from = first_index ? s.a : s.b;
        int to = pick % (n - 1);
        if (to >= from) ++to;

        s.d.resize(model_.n_bath);
        double vdd = 0.0;
        for (int i = 0; i < model_.n_bath; ++i) {
            s.d(i) = s.frame.coupling[i](from, to);
            vdd += s.P(i) / model_.masses(i) * s.d(i);
        }
        const double a_dot = vdd * dt;
        const double pi = hop_probability(a_dot);
        if (pi <= 0.0) return;  // uncoupled candidate, nothing to decide

        if (rng.hops.uniform() < pi) {
            const double dnorm = s.d.norm();
            const double dE = s.frame.energies(from) - s.frame.energies(to);
            Vector d_hat = s.d / dnorm;
            if (momentum_jump(s.P, d_hat, dE, mass_)) {
                if (first_index)
                    s.a = to;
                else
                    s.b = to;
                ++s.hops;
                // Transfer amplitude dt J_{new,old} = +(P/M . d_{from,to}) dt for a
                // single-index change (antisymmetry of d), divided by the branch
                // probability pi and the uniform candidate weight.
                s.weight *= static_cast<double>(n_cand) * a_dot / pi;
            } else {
                // Frustrated: continue on the current pair with the no-hop weight.
                s.weight *= 1.0 / (1.0 - pi);
            }
        } else {
            s.weight *= 1.0 / (1.0 - pi);
        }
    }

    TbshSolverConfig cfg_;
    const DiabaticModel& model_;
    ObservablePlan obs_;
    double dt_;
    double mass_;
    long long n_traj_;
    double pair_offset_ = 0.0;
};

}  // namespace qcldyn
