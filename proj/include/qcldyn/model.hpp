#pragma once

// Diabatic model abstraction: a callable bundle giving the n x n subsystem-plus-coupling
// matrix h(R), its bath-coordinate gradient, and the bath-only potential V_b(R).
// The h / V_b split is the convention used by every solver: adiabatic energies and
// Hellmann-Feynman forces cover only h, the bath-only force is added separately.

#include <functional>
#include <string>
#include <vector>

#include "core.hpp"

namespace qcldyn {

// One harmonic bath mode (used for thermal Wigner sampling).
struct HarmonicMode {
    double omega = 0.0;
    double mass = 1.0;
};

// Gaussian wavepacket defaults for scattering-type models (per bath coordinate).
struct WavepacketSpec {
    Vector center;   // R0
    Vector momentum; // P0
    Vector sigma_r;  // position standard deviation
};

struct DiabaticModel {
    std::string name;
    int n_states = 0;
    int n_bath = 0;

    // h(R): real symmetric n x n (hartree).
    std::function<void(const Vector& R, Matrix& h)> h;
    // dh/dR_i for every bath coordinate, packed as out[i] (n x n each).
    // Implementations fill in place and only reallocate on size mismatch, so a
    // caller-owned scratch vector makes repeated evaluation allocation-free.
    std::function<void(const Vector& R, std::vector<Matrix>& out)> dh_dR;
    // Bath-only potential and force f = -dV_b/dR.
    std::function<double(const Vector& R)> v_bath;
    std::function<void(const Vector& R, Vector& f)> f_bath;

    // Optional fast paths; solvers fall back to dh_dR when absent.
    // dh_contract: out_i = sum_{ab} dh_i(a,b) G(a,b) for symmetric G.
    std::function<void(const Vector& R, const Matrix& G, Vector& out)> dh_contract;
    // dh_trace: out_i = tr dh_i.
    std::function<void(const Vector& R, Vector& out)> dh_trace;

    Vector masses;  // per bath coordinate (a.u.)

    // Optional metadata consumed by the initial-condition module.
    std::vector<HarmonicMode> bath_modes;  // thermal baths (spin-boson, FMO)
    WavepacketSpec wavepacket;             // scattering models (Tully, FLV)
    double beta = 0.0;                     // default inverse temperature, 0 = unset

    Matrix h_at(const Vector& R) const {
        Matrix m(n_states, n_states);
        h(R, m);
        return m;
    }

    double common_mass() const {
        for (int i = 1; i < n_bath; ++i)
            if (masses[i] != masses[0])
                throw Error("model '" + name + "' has non-uniform bath masses; "
                            "momentum-jump solvers require a single bath mass");
        return masses[0];
    }
};

// Central finite-difference check of dh_dR against h. Returns the worst relative
// mismatch over all coordinates and matrix entries.
inline double check_dh_dR(const DiabaticModel& m, const Vector& R, double delta = 1e-5) {
    std::vector<Matrix> analytic;
    m.dh_dR(R, analytic);
    Matrix hp(m.n_states, m.n_states), hm(m.n_states, m.n_states);
    double worst = 0.0;
    Vector Rp = R, Rm = R;
    for (int i = 0; i < m.n_bath; ++i) {
        Rp(i) += delta;
        Rm(i) -= delta;
        m.h(Rp, hp);
        m.h(Rm, hm);
        Rp(i) = R(i);
        Rm(i) = R(i);
        const Matrix fd = (hp - hm) / (2.0 * delta);
        const double scale = std::max(1.0, analytic[i].cwiseAbs().maxCoeff());
        worst = std::max(worst, (fd - analytic[i]).cwiseAbs().maxCoeff() / scale);
    }
    return worst;
}

inline double check_f_bath(const DiabaticModel& m, const Vector& R, double delta = 1e-5) {
    Vector f;
    m.f_bath(R, f);
    double worst = 0.0;
    Vector Rp = R, Rm = R;
    for (int i = 0; i < m.n_bath; ++i) {
        Rp(i) += delta;
        Rm(i) -= delta;
        const double fd = -(m.v_bath(Rp) - m.v_bath(Rm)) / (2.0 * delta);
        Rp(i) = R(i);
        Rm(i) = R(i);
        worst = std::max(worst, std::abs(fd - f(i)) / std::max(1.0, std::abs(f(i))));
    }
    return worst;
}

inline double symmetry_defect(const Matrix& h) {
    return (h - h.transpose()).cwiseAbs().maxCoeff();
}

}  // namespace qcldyn
