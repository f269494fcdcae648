#pragma once

// Initial-condition samplers: thermal Wigner / classical Boltzmann bath phase
// points, minimum-uncertainty Gaussian wavepackets, mapping-variable Gaussians,
// and the initial subsystem state (pure index, Pauli eigenstate, matrix, or the
// adiabatic ground state at the sampled bath configuration).

#include <cmath>
#include <string>

#include "adiabatic.hpp"
#include "model.hpp"
#include "rng.hpp"

namespace qcldyn {

struct BathSample {
    Vector R;
    Vector P;
    double log_weight = 0.0;  // 0 for all direct (non-importance) samplers
};

// Thermal harmonic Wigner distribution for one oscillator:
// Var(R) = coth(beta w / 2) / (2 M w), Var(P) = (M w / 2) coth(beta w / 2).
inline void wigner_thermal_harmonic(double omega, double mass, double beta, Rng& rng,
                                    double& R, double& P, double mean_R = 0.0,
                                    double mean_P = 0.0) {
    const double coth = 1.0 / std::tanh(0.5 * beta * omega);
    const double sr = std::sqrt(coth / (2.0 * mass * omega));
    const double sp = std::sqrt(0.5 * mass * omega * coth);
    double g0, g1;
    rng.gaussian_pair(g0, g1);
    R = mean_R + sr * g0;
    P = mean_P + sp * g1;
}

// Classical Boltzmann limit of the same oscillator.
inline void boltzmann_harmonic(double omega, double mass, double beta, Rng& rng, double& R,
                               double& P) {
    const double sr = std::sqrt(1.0 / (beta * mass * omega * omega));
    const double sp = std::sqrt(mass / beta);
    double g0, g1;
    rng.gaussian_pair(g0, g1);
    R = sr * g0;
    P = sp * g1;
}

// Minimum-uncertainty packet: Var(R) = sigma_r^2, Var(P) = 1/(4 sigma_r^2).
inline void gaussian_wavepacket(double r0, double p0, double sigma_r, Rng& rng, double& R,
                                double& P) {
    double g0, g1;
    rng.gaussian_pair(g0, g1);
    R = r0 + sigma_r * g0;
    P = p0 + (0.5 / sigma_r) * g1;
}

enum class BathSampling { wigner, boltzmann, wavepacket };

struct BathSamplerSpec {
    BathSampling kind = BathSampling::wigner;
    double beta = 0.0;          // overrides model default when > 0
    WavepacketSpec wavepacket;  // overrides model default when non-empty
};

inline BathSample sample_bath(const DiabaticModel& model, const BathSamplerSpec& spec,
                              Rng& rng) {
    BathSample s;
    s.R.resize(model.n_bath);
    s.P.resize(model.n_bath);
    switch (spec.kind) {
        case BathSampling::wigner:
        case BathSampling::boltzmann: {
            if (static_cast<int>(model.bath_modes.size()) != model.n_bath)
                throw Error("model '" + model.name + "' has no harmonic bath metadata");
            const double beta = spec.beta > 0 ? spec.beta : model.beta;
            if (beta <= 0) throw Error("thermal sampling requires beta > 0");
            for (int i = 0; i < model.n_bath; ++i) {
                const auto& mode = model.bath_modes[i];
                if (spec.kind == BathSampling::wigner)
                    wigner_thermal_harmonic(mode.omega, mode.mass, beta, rng, s.R(i), s.P(i));
                else
                    boltzmann_harmonic(mode.omega, mode.mass, beta, rng, s.R(i), s.P(i));
            }
            break;
        }
        case BathSampling::wavepacket: {
            const WavepacketSpec& wp =
                spec.wavepacket.center.size() > 0 ? spec.wavepacket : model.wavepacket;
            if (wp.center.size() != model.n_bath)
                throw Error("wavepacket spec does not match bath dimension");
            for (int i = 0; i < model.n_bath; ++i)
                gaussian_wavepacket(wp.center(i), wp.momentum(i), wp.sigma_r(i), rng, s.R(i),
                                    s.P(i));
            break;
        }
    }
    if (!all_finite(s.R) || !all_finite(s.P)) throw StepDiverged("bath sample not finite");
    return s;
}

// ---------------------------------------------------------------------------
// Mapping-variable sampling
// ---------------------------------------------------------------------------

// Forward and backward coherent-state variables drawn from the normalized
// Gaussian phi(x) = (pi hbar)^-n exp(-sum(q^2+p^2)/hbar): each component is
// N(0, hbar/2) with hbar = 1.
struct MappingSample {
    Vector q, p;    // forward
    Vector qb, pb;  // backward
};

inline MappingSample sample_mapping_pair(int n_states, Rng& rng) {
    MappingSample s;
    s.q.resize(n_states);
    s.p.resize(n_states);
    s.qb.resize(n_states);
    s.pb.resize(n_states);
    const double w = std::sqrt(0.5);
    for (int k = 0; k < n_states; ++k) {
        double g0, g1;
        rng.gaussian_pair(g0, g1);
        s.q(k) = w * g0;
        s.p(k) = w * g1;
        rng.gaussian_pair(g0, g1);
        s.qb(k) = w * g0;
        s.pb(k) = w * g1;
    }
    return s;
}

// Same draw fed from a low-discrepancy point (4 n_states dimensions; the
// forward variables take the leading dimensions).
inline MappingSample sample_mapping_pair(int n_states, const QmcSequence& seq,
                                         uint64_t point_index) {
    MappingSample s;
    s.q.resize(n_states);
    s.p.resize(n_states);
    s.qb.resize(n_states);
    s.pb.resize(n_states);
    std::vector<double> g(4 * n_states);
    seq.gaussians(point_index, g.data(), 4 * n_states);
    const double w = std::sqrt(0.5);
    for (int k = 0; k < n_states; ++k) {
        s.q(k) = w * g[2 * k + 0];
        s.p(k) = w * g[2 * k + 1];
        s.qb(k) = w * g[2 * n_states + 2 * k + 0];
        s.pb(k) = w * g[2 * n_states + 2 * k + 1];
    }
    return s;
}

// FBTS estimator prefactor for an initial subsystem density matrix rho(0):
// sum_{l,l'} rho^{ll'} (1/hbar)(q_l + i p_l)(q'_l' - i p'_l').
inline Complex fbts_prefactor(const MappingSample& s, const CMatrix& rho0) {
    const int n = static_cast<int>(s.q.size());
    Complex zsum = 0.0;
    for (int l = 0; l < n; ++l) {
        if (rho0.row(l).isZero(0.0)) continue;
        const Complex zf(s.q(l), s.p(l));
        for (int lp = 0; lp < n; ++lp) {
            const Complex c = rho0(l, lp);
            if (c == Complex(0.0)) continue;
            zsum += c * zf * Complex(s.qb(lp), -s.pb(lp));
        }
    }
    return zsum;
}

// ---------------------------------------------------------------------------
// Initial subsystem state
// ---------------------------------------------------------------------------

struct InitialState {
    enum class Kind { pure, matrix, adiabatic_ground } kind = Kind::pure;
    int state = 0;        // pure index (0-based)
    CMatrix rho;          // explicit density matrix
    std::string label;    // config echo

    // Density matrix in the subsystem (diabatic) basis; for adiabatic_ground the
    // frame at the sampled bath configuration is required.
    CMatrix density(int n_states, const AdiabaticFrame* frame = nullptr) const {
        switch (kind) {
            case Kind::pure: {
                CMatrix r = CMatrix::Zero(n_states, n_states);
                if (state < 0 || state >= n_states) throw Error("initial state out of range");
                r(state, state) = 1.0;
                return r;
            }
            case Kind::matrix:
                if (rho.rows() != n_states) throw Error("initial density matrix has wrong size");
                return rho;
            case Kind::adiabatic_ground: {
                if (!frame) throw Error("adiabatic_ground initial state needs a frame");
                const Vector u = frame->vectors.col(0);
                return (u * u.transpose()).cast<Complex>();
            }
        }
        throw Error("unreachable");
    }
};

// Named initial states: "1".."9" (pure, 1-based), "sx+", "sx-", "adiabatic_ground".
inline InitialState parse_initial_state(const std::string& text) {
    InitialState s;
    s.label = text;
    if (text == "adiabatic_ground") {
        s.kind = InitialState::Kind::adiabatic_ground;
        return s;
    }
    if (text == "sx+" || text == "sx-") {
        s.kind = InitialState::Kind::matrix;
        s.rho = CMatrix::Zero(2, 2);
        const double off = text == "sx+" ? 0.5 : -0.5;
        s.rho(0, 0) = s.rho(1, 1) = 0.5;
        s.rho(0, 1) = s.rho(1, 0) = off;
        return s;
    }
    try {
        const int idx = std::stoi(text);
        if (idx < 1) throw Error("state index is 1-based");
        s.kind = InitialState::Kind::pure;
        s.state = idx - 1;
        return s;
    } catch (const std::invalid_argument&) {
        throw ConfigError("unknown initial state '" + text + "'");
    }
}

}  // namespace qcldyn
