#include <catch2/catch.hpp>

#include "qcldyn/adiabatic.hpp"
#include "qcldyn/models.hpp"
#include "qcldyn/rng.hpp"

using namespace qcldyn;

namespace {

// Two-level model with constant diagonal entries (already diagonal).
DiabaticModel diagonal_model(double e1, double e2) {
    DiabaticModel m;
    m.name = "diag";
    m.n_states = 2;
    m.n_bath = 1;
    m.masses = Vector::Constant(1, 1.0);
    m.h = [e1, e2](const Vector&, Matrix& h) {
        h.resize(2, 2);
        h.setZero();
        h(0, 0) = e1;
        h(1, 1) = e2;
    };
    m.dh_dR = [](const Vector&, std::vector<Matrix>& out) {
        if (out.size() != 1) out.assign(1, Matrix::Zero(2, 2));
    };
    m.v_bath = [](const Vector&) { return 0.0; };
    m.f_bath = [](const Vector&, Vector& f) { f = Vector::Zero(1); };
    return m;
}

// Harmonic diagonal model: h_aa = (1/2) M w^2 (R - R_a)^2.
DiabaticModel harmonic_diagonal(double mass, double w, double r1, double r2) {
    DiabaticModel m;
    m.name = "harm";
    m.n_states = 2;
    m.n_bath = 1;
    m.masses = Vector::Constant(1, mass);
    const double k = mass * w * w;
    m.h = [k, r1, r2](const Vector& R, Matrix& h) {
        h.resize(2, 2);
        h.setZero();
        h(0, 0) = 0.5 * k * (R(0) - r1) * (R(0) - r1);
        h(1, 1) = 0.5 * k * (R(0) - r2) * (R(0) - r2) + 1.0;  // keep gap open
    };
    m.dh_dR = [k, r1, r2](const Vector& R, std::vector<Matrix>& out) {
        if (out.size() != 1) out.assign(1, Matrix::Zero(2, 2));
        out[0](0, 0) = k * (R(0) - r1);
        out[0](1, 1) = k * (R(0) - r2);
    };
    m.v_bath = [](const Vector&) { return 0.0; };
    m.f_bath = [](const Vector&, Vector& f) { f = Vector::Zero(1); };
    return m;
}

double fd_energy_derivative(const DiabaticModel& m, double r, int state, double delta) {
    Vector Rp = Vector::Constant(1, r + delta), Rm = Vector::Constant(1, r - delta);
    const AdiabaticFrame fp = adiabatize(m, Rp);
    const AdiabaticFrame fm = adiabatize(m, Rm);
    return (fp.energies(state) - fm.energies(state)) / (2.0 * delta);
}

}  // namespace

TEST_CASE("already diagonal model: energies sorted, coupling zero") {
    DiabaticModel m = diagonal_model(0.7, -0.3);
    const AdiabaticFrame f = adiabatize(m, Vector::Zero(1));
    REQUIRE(f.energies(0) == Approx(-0.3));
    REQUIRE(f.energies(1) == Approx(0.7));
    REQUIRE(f.coupling[0](0, 1) == 0.0);
}

TEST_CASE("tully crossing point: analytic two-level eigenvalues") {
    DiabaticModel m = build_tully_sac(TullyParams{});
    const AdiabaticFrame f = adiabatize(m, Vector::Zero(1));
    // h11 = h22 = 0, h12 = C = 0.005 at R = 0.
    REQUIRE(f.energies(0) == Approx(-0.005).epsilon(1e-12));
    REQUIRE(f.energies(1) == Approx(0.005).epsilon(1e-12));
    REQUIRE(f.energies(1) - f.energies(0) == Approx(0.01).epsilon(1e-12));
}

TEST_CASE("coupling matches finite differences of eigenvectors") {
    DiabaticModel m = build_tully_sac(TullyParams{});
    const double r = 0.5, delta = 1e-5;
    const AdiabaticFrame f = adiabatize(m, Vector::Constant(1, r));
    const AdiabaticFrame fp = adiabatize(m, Vector::Constant(1, r + delta), &f);
    const AdiabaticFrame fm = adiabatize(m, Vector::Constant(1, r - delta), &f);
    const Vector dvec = (fp.vectors.col(1) - fm.vectors.col(1)) / (2.0 * delta);
    const double d_fd = f.vectors.col(0).dot(dvec);  // <0| d/dR |1>
    REQUIRE(f.coupling[0](0, 1) == Approx(d_fd).margin(1e-5));
}

TEST_CASE("hellmann-feynman force equals minus energy gradient") {
    SECTION("harmonic diagonal model is exact") {
        DiabaticModel m = harmonic_diagonal(2.0, 0.5, -1.0, 1.0);
        const double r = 0.3;
        const AdiabaticFrame f = adiabatize(m, Vector::Constant(1, r));
        // F_a = -M w^2 (R - R_a) on each diagonal surface.
        REQUIRE(hellmann_feynman_force(f, 0)(0) == Approx(-2.0 * 0.25 * (r + 1.0)).epsilon(1e-12));
        REQUIRE(hellmann_feynman_force(f, 1)(0) == Approx(-2.0 * 0.25 * (r - 1.0)).epsilon(1e-12));
    }
    SECTION("tully ground state at R = 2 vs finite differences") {
        DiabaticModel m = build_tully_sac(TullyParams{});
        const AdiabaticFrame f = adiabatize(m, Vector::Constant(1, 2.0));
        REQUIRE(f.forces(0, 0) == Approx(-fd_energy_derivative(m, 2.0, 0, 1e-4)).margin(1e-6));
    }
    SECTION("100 random points on all shipped two-level models") {
        SpinBosonParams sb;
        sb.n_bath = 8;
        std::vector<DiabaticModel> models;
        models.push_back(build_spin_boson(sb));
        models.push_back(build_tully_sac(TullyParams{}));
        models.push_back(build_flv(FLVParams{}));
        Rng rng(5, Stream::bath, 0);
        for (const auto& m : models) {
            for (int trial = 0; trial < 100; ++trial) {
                Vector R(m.n_bath);
                for (int i = 0; i < m.n_bath; ++i) R(i) = 3.0 * (rng.uniform() - 0.5);
                AdiabaticFrame f;
                try {
                    f = adiabatize(m, R);
                } catch (const DegenerateEigenvalues&) {
                    continue;
                }
                for (int a = 0; a < m.n_states; ++a)
                    for (int i = 0; i < m.n_bath; ++i) {
                        Vector Rp = R, Rm = R;
                        Rp(i) += 1e-4;
                        Rm(i) -= 1e-4;
                        const double fd = (adiabatize(m, Rp).energies(a) -
                                           adiabatize(m, Rm).energies(a)) / 2e-4;
                        const double scale = std::max(1.0, std::abs(fd));
                        REQUIRE(std::abs(f.forces(i, a) + fd) / scale < 1e-5);
                    }
            }
        }
    }
}

TEST_CASE("spin-boson adiabatic force approaches the diabatic +-c limit") {
    SpinBosonParams p;
    p.n_bath = 1;
    p.eps = 0.0;
    p.omega = 0.05;
    DiabaticModel m = build_spin_boson(p);
    const double c = -m.h_at(Vector::Constant(1, 1.0))(0, 0);  // h11 = -c R at R=1
    // Far from the crossing the lower adiabat follows one diabat: F -> +-c.
    const AdiabaticFrame f = adiabatize(m, Vector::Constant(1, 60.0));
    REQUIRE(f.forces(0, 0) == Approx(-c).epsilon(1e-3));
    const AdiabaticFrame g = adiabatize(m, Vector::Constant(1, -60.0));
    REQUIRE(g.forces(0, 0) == Approx(c).epsilon(1e-3));
}

TEST_CASE("frame invariants: orthogonality, antisymmetry, gauge continuity") {
    DiabaticModel m = build_flv(FLVParams{});
    Rng rng(9, Stream::bath, 3);
    AdiabaticFrame prev;
    bool have_prev = false;
    Vector R(2);
    R << 1.0, 0.4;
    for (int step = 0; step < 200; ++step) {
        AdiabaticFrame f = have_prev ? adiabatize(m, R, &prev) : adiabatize(m, R);
        const Matrix gram = f.vectors.transpose() * f.vectors;
        REQUIRE((gram - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-12);
        REQUIRE(f.coupling[0](0, 0) == 0.0);
        REQUIRE(f.coupling[0](0, 1) == Approx(-f.coupling[0](1, 0)).margin(0.0));
        REQUIRE(f.coupling[1](0, 1) == Approx(-f.coupling[1](1, 0)).margin(0.0));
        if (have_prev)
            for (int a = 0; a < 2; ++a)
                REQUIRE(prev.vectors.col(a).dot(f.vectors.col(a)) >= 0.0);
        prev = f;
        have_prev = true;
        R(0) += 0.02 * (rng.uniform() - 0.3);
        R(1) += 0.02 * (rng.uniform() - 0.5);
    }
}

TEST_CASE("degenerate eigenvalues are reported") {
    DiabaticModel m = diagonal_model(0.2, 0.2);
    REQUIRE_THROWS_AS(adiabatize(m, Vector::Zero(1)), DegenerateEigenvalues);
}

TEST_CASE("model derivative bundles are consistent") {
    SpinBosonParams sb;
    sb.n_bath = 6;
    std::vector<DiabaticModel> models;
    models.push_back(build_spin_boson(sb));
    models.push_back(build_tully_sac(TullyParams{}));
    models.push_back(build_flv(FLVParams{}));
    FMOParams fp;
    fp.site_hamiltonian = Matrix::Zero(7, 7);
    for (int i = 0; i < 7; ++i) fp.site_hamiltonian(i, i) = 1e-3 * (i + 1);
    fp.site_hamiltonian(0, 1) = fp.site_hamiltonian(1, 0) = -4e-4;
    fp.lambda = 1.6e-4;
    fp.gamma_debye = 4.8e-4;
    fp.beta = 1.0 / (units::k_boltzmann * 77.0);
    fp.modes_per_site = 3;
    models.push_back(build_fmo(fp));

    Rng rng(11, Stream::bath, 1);
    for (const auto& m : models) {
        Vector R(m.n_bath);
        for (int i = 0; i < m.n_bath; ++i) R(i) = 2.0 * (rng.uniform() - 0.5);
        Matrix h(m.n_states, m.n_states);
        m.h(R, h);
        REQUIRE(symmetry_defect(h) < 1e-14);
        REQUIRE(check_dh_dR(m, R) < 1e-6);
        REQUIRE(check_f_bath(m, R) < 1e-6);

        // Fast contraction paths agree with the dense derivative.
        if (m.dh_contract) {
            Matrix G(m.n_states, m.n_states);
            for (int a = 0; a < m.n_states; ++a)
                for (int b = a; b < m.n_states; ++b)
                    G(a, b) = G(b, a) = rng.uniform() - 0.5;
            std::vector<Matrix> dh;
            m.dh_dR(R, dh);
            Vector fast;
            m.dh_contract(R, G, fast);
            for (int i = 0; i < m.n_bath; ++i) {
                const double dense = (dh[i].array() * G.array()).sum();
                REQUIRE(fast(i) == Approx(dense).margin(1e-12));
            }
        }
        if (m.dh_trace) {
            std::vector<Matrix> dh;
            m.dh_dR(R, dh);
            Vector tr;
            m.dh_trace(R, tr);
            for (int i = 0; i < m.n_bath; ++i)
                REQUIRE(tr(i) == Approx(dh[i].trace()).margin(1e-12));
        }
    }
}
