#pragma once

// Shared fixtures for the unit suite: small synthetic models and an exact
// quantum reference for a two-level system coupled to one harmonic oscillator
// (dense diagonalization in a truncated oscillator basis). The reference is
// independent of every trajectory-solver code path.

#include <Eigen/Eigenvalues>

#include "qcldyn/experiment.hpp"

namespace testutil {

using namespace qcldyn;

// Static two-level system: h = eps sz - omega sx, flat bath.
inline DiabaticModel frozen_two_level(double eps, double omega) {
    DiabaticModel m;
    m.name = "frozen";
    m.n_states = 2;
    m.n_bath = 1;
    m.masses = Vector::Constant(1, 1.0);
    m.bath_modes = {{1.0, 1.0}};
    m.beta = 1.0;
    m.h = [eps, omega](const Vector&, Matrix& h) {
        h.resize(2, 2);
        h(0, 0) = eps;
        h(1, 1) = -eps;
        h(0, 1) = h(1, 0) = -omega;
    };
    m.dh_dR = [](const Vector&, std::vector<Matrix>& out) {
        if (out.size() != 1) out.assign(1, Matrix::Zero(2, 2));
    };
    m.v_bath = [](const Vector&) { return 0.0; };
    m.f_bath = [](const Vector&, Vector& f) { f = Vector::Zero(1); };
    return m;
}

// Spin-boson with a single explicit oscillator.
inline DiabaticModel one_mode_spin_boson(double eps, double omega, double w, double c,
                                         double beta) {
    DiabaticModel m;
    m.name = "one_mode";
    m.n_states = 2;
    m.n_bath = 1;
    m.masses = Vector::Constant(1, 1.0);
    m.bath_modes = {{w, 1.0}};
    m.beta = beta;
    m.h = [eps, omega, c](const Vector& R, Matrix& h) {
        h.resize(2, 2);
        const double z = eps - c * R(0);
        h(0, 0) = z;
        h(1, 1) = -z;
        h(0, 1) = h(1, 0) = -omega;
    };
    m.dh_dR = [c](const Vector&, std::vector<Matrix>& out) {
        if (out.size() != 1) out.assign(1, Matrix::Zero(2, 2));
        out[0](0, 0) = -c;
        out[0](1, 1) = c;
    };
    const double w2 = w * w;
    m.v_bath = [w2](const Vector& R) { return 0.5 * w2 * R(0) * R(0); };
    m.f_bath = [w2](const Vector& R, Vector& f) {
        f.resize(1);
        f(0) = -w2 * R(0);
    };
    return m;
}

// Exact quantum <B(t)> for the one-mode spin-boson model with the subsystem in
// |1> and the oscillator thermal. B is a 2x2 subsystem observable.
class OneModeReference {
public:
    OneModeReference(double eps, double omega, double w, double c, double beta,
                     int levels = 48)
        : n_(levels) {
        const int N = 2 * n_;
        Matrix bdag = Matrix::Zero(n_, n_);
        for (int k = 1; k < n_; ++k) bdag(k, k - 1) = std::sqrt(static_cast<double>(k));
        const Matrix rhat = (bdag + bdag.transpose()) / std::sqrt(2.0 * w);
        Matrix hosc = Matrix::Zero(n_, n_);
        for (int k = 0; k < n_; ++k) hosc(k, k) = w * (k + 0.5);
        Matrix H = Matrix::Zero(N, N);
        H.block(0, 0, n_, n_) = hosc + eps * Matrix::Identity(n_, n_) - c * rhat;
        H.block(n_, n_, n_, n_) = hosc - eps * Matrix::Identity(n_, n_) + c * rhat;
        H.block(0, n_, n_, n_) = -omega * Matrix::Identity(n_, n_);
        H.block(n_, 0, n_, n_) = -omega * Matrix::Identity(n_, n_);
        Eigen::SelfAdjointEigenSolver<Matrix> es(H);
        U_ = es.eigenvectors();
        E_ = es.eigenvalues();
        Matrix rho_b = Matrix::Zero(n_, n_);
        double z = 0.0;
        for (int k = 0; k < n_; ++k) z += std::exp(-beta * w * (k + 0.5));
        for (int k = 0; k < n_; ++k) rho_b(k, k) = std::exp(-beta * w * (k + 0.5)) / z;
        Matrix rho0 = Matrix::Zero(N, N);
        rho0.block(0, 0, n_, n_) = rho_b;
        rho0_eig_ = U_.transpose() * rho0 * U_;
    }

    double expectation(const CMatrix& b_subsystem, double t) const {
        const int N = 2 * n_;
        Matrix B = Matrix::Zero(N, N);
        // Real observables suffice for the unit suite (sz, sx, populations);
        // sy handled through its imaginary parts explicitly.
        CMatrix Bc = CMatrix::Zero(N, N);
        for (int s = 0; s < 2; ++s)
            for (int sp = 0; sp < 2; ++sp)
                Bc.block(s * n_, sp * n_, n_, n_) =
                    b_subsystem(s, sp) * CMatrix::Identity(n_, n_);
        const CMatrix Beig = U_.cast<Complex>().adjoint() * Bc * U_.cast<Complex>();
        Complex acc = 0.0;
        for (int i = 0; i < N; ++i)
            for (int j = 0; j < N; ++j)
                acc += rho0_eig_(i, j) * std::polar(1.0, (E_(j) - E_(i)) * t) * Beig(j, i);
        (void)B;
        return acc.real();
    }

private:
    int n_;
    Matrix U_;
    Vector E_;
    Matrix rho0_eig_;
};

inline Config solver_config(const std::string& solver, const std::string& body) {
    return Config::parse_string(
        "[model]\nname = external\n[initial]\nstate = 1\n[observables]\nobs = sz\n"
        "[run]\nseed = 1\nthreads = 2\n[solver]\nname = " + solver + "\n" + body);
}

}  // namespace testutil
