#pragma once

// Adiabatic frame at a bath configuration: eigenvalues of h(R) in ascending order,
// gauge-aligned eigenvectors, nonadiabatic coupling vectors and Hellmann-Feynman
// forces. Forces cover only the h(R) part; solvers add the bath-only force.

#include <Eigen/Eigenvalues>
#include <cmath>
#include <optional>
#include <vector>

#include "model.hpp"

namespace qcldyn {

struct AdiabaticFrame {
    Vector energies;                 // ascending (hartree)
    Matrix vectors;                  // columns orthonormal
    std::vector<Matrix> coupling;    // coupling[i](a,b) = d_ab component along R_i
    Matrix forces;                   // forces(i, a) = F_a component along R_i
    // <a|dh/dR_i|b> sandwiches, kept for mean-field force matrices.
    std::vector<Matrix> dh_sandwich;

    int n_states() const { return static_cast<int>(energies.size()); }
    double gap(int a, int b) const { return energies(a) - energies(b); }

    // d_ab as a bath-space vector.
    Vector coupling_vector(int a, int b) const {
        Vector d(static_cast<int>(coupling.size()));
        for (size_t i = 0; i < coupling.size(); ++i) d(static_cast<int>(i)) = coupling[i](a, b);
        return d;
    }
};

// Reusable scratch for repeated frame evaluation along a trajectory.
struct FrameWorkspace {
    Matrix h;
    std::vector<Matrix> dh;
    Matrix tmp;
};

inline void adiabatize_into(const DiabaticModel& model, const Vector& R,
                            const AdiabaticFrame* prev, double eps_degen, FrameWorkspace& ws,
                            AdiabaticFrame& frame) {
    const int n = model.n_states;
    ws.h.resize(n, n);
    model.h(R, ws.h);
    if (!ws.h.allFinite()) throw StepDiverged("h(R) is not finite");

    Eigen::SelfAdjointEigenSolver<Matrix> es(ws.h);
    frame.energies = es.eigenvalues();  // ascending
    frame.vectors = es.eigenvectors();

    for (int a = 0; a + 1 < n; ++a)
        if (frame.energies(a + 1) - frame.energies(a) < eps_degen)
            throw DegenerateEigenvalues("adiabatic gap below tolerance at requested R");

    // Gauge continuity: flip signs so every eigenvector overlaps non-negatively
    // with its predecessor.
    if (prev) {
        for (int a = 0; a < n; ++a)
            if (prev->vectors.col(a).dot(frame.vectors.col(a)) < 0.0)
                frame.vectors.col(a) *= -1.0;
    }

    model.dh_dR(R, ws.dh);
    if (static_cast<int>(frame.dh_sandwich.size()) != model.n_bath)
        frame.dh_sandwich.assign(model.n_bath, Matrix::Zero(n, n));
    if (static_cast<int>(frame.coupling.size()) != model.n_bath)
        frame.coupling.assign(model.n_bath, Matrix::Zero(n, n));
    frame.forces.resize(model.n_bath, n);
    ws.tmp.resize(n, n);
    for (int i = 0; i < model.n_bath; ++i) {
        ws.tmp.noalias() = ws.dh[i] * frame.vectors;
        frame.dh_sandwich[i].noalias() = frame.vectors.transpose() * ws.tmp;
        for (int a = 0; a < n; ++a) {
            frame.forces(i, a) = -frame.dh_sandwich[i](a, a);
            for (int b = 0; b < n; ++b) {
                if (a == b) continue;
                frame.coupling[i](a, b) =
                    frame.dh_sandwich[i](a, b) / (frame.energies(b) - frame.energies(a));
            }
        }
    }
}

inline AdiabaticFrame adiabatize(const DiabaticModel& model, const Vector& R,
                                 const AdiabaticFrame* prev = nullptr,
                                 double eps_degen = 1e-10) {
    FrameWorkspace ws;
    AdiabaticFrame frame;
    adiabatize_into(model, R, prev, eps_degen, ws, frame);
    return frame;
}

// F_a = -dE_a/dR for one state, as a bath-space vector.
inline Vector hellmann_feynman_force(const AdiabaticFrame& frame, int state) {
    return frame.forces.col(state);
}

}  // namespace qcldyn
