#include <catch2/catch.hpp>

#include <numeric>

#include "qcldyn/adiabatic.hpp"
#include "qcldyn/models.hpp"

using namespace qcldyn;

TEST_CASE("ohmic discretization formulas") {
    SpinBosonParams p;
    p.xi = 0.13;
    p.omega_c = 1.0;
    p.omega_max = 3.0;
    p.n_bath = 100;
    const auto osc = discretize_ohmic(p);
    REQUIRE(osc.size() == 100);

    const double dw = (1.0 - std::exp(-3.0)) / 100.0;
    REQUIRE(dw == Approx(9.50212931632136e-3).epsilon(1e-12));
    REQUIRE(osc[0].omega == Approx(-std::log1p(-dw)).epsilon(1e-12));
    REQUIRE(osc[0].omega == Approx(9.5475e-3).epsilon(1e-3));
    for (size_t i = 1; i < osc.size(); ++i) REQUIRE(osc[i].omega > osc[i - 1].omega);
    REQUIRE(osc[0].c == Approx(std::sqrt(p.xi * dw) * osc[0].omega).epsilon(1e-12));
}

TEST_CASE("ohmic discretization rejects the divergent limit") {
    SpinBosonParams p;
    p.n_bath = 1;
    p.omega_max = 1e6;  // delta_w -> omega_c, log(1 - 1) diverges
    REQUIRE_THROWS_AS(discretize_ohmic(p), NonPositiveFrequency);
}

TEST_CASE("zero kondo parameter decouples the bath") {
    SpinBosonParams p;
    p.xi = 0.0;
    p.n_bath = 10;
    for (const auto& o : discretize_ohmic(p)) REQUIRE(o.c == 0.0);
}

TEST_CASE("discrete bath reproduces the continuum spectral density integral") {
    // sum pi c_i^2 / (2 M w_i) approximates int J dw over [0, w_max] with
    // J(w) = (pi/2) xi w exp(-w/w_c).
    SpinBosonParams p;
    p.xi = 0.09;
    p.omega_c = 1.0;
    p.omega_max = 4.0;
    p.n_bath = 200;
    const auto osc = discretize_ohmic(p);
    double discrete = 0.0;
    for (const auto& o : osc) discrete += M_PI * o.c * o.c / (2.0 * o.mass * o.omega);
    const double x = p.omega_max / p.omega_c;
    const double continuum =
        0.5 * M_PI * p.xi * p.omega_c * p.omega_c * (1.0 - std::exp(-x) * (1.0 + x));
    REQUIRE(discrete == Approx(continuum).epsilon(0.02));
}

TEST_CASE("spin-boson structure") {
    SECTION("xi = 0, eps = 0: eigenvalues are -+Omega everywhere") {
        SpinBosonParams p;
        p.xi = 0.0;
        p.eps = 0.0;
        p.omega = 0.4;
        p.n_bath = 5;
        DiabaticModel m = build_spin_boson(p);
        for (double r : {-2.0, 0.0, 1.5}) {
            const AdiabaticFrame f = adiabatize(m, Vector::Constant(5, r));
            REQUIRE(f.energies(0) == Approx(-0.4).epsilon(1e-12));
            REQUIRE(f.energies(1) == Approx(0.4).epsilon(1e-12));
        }
    }
    SECTION("diagonal derivative carries (-c, +c) and the bath force is separate") {
        SpinBosonParams p;
        p.n_bath = 4;
        DiabaticModel m = build_spin_boson(p);
        std::vector<Matrix> dh;
        m.dh_dR(Vector::Zero(4), dh);
        const auto osc = discretize_ohmic(p);
        for (int i = 0; i < 4; ++i) {
            REQUIRE(dh[i](0, 0) == Approx(-osc[i].c).epsilon(1e-12));
            REQUIRE(dh[i](1, 1) == Approx(osc[i].c).epsilon(1e-12));
            REQUIRE(dh[i](0, 1) == 0.0);
        }
        // v_bath carries the harmonic wells.
        Vector R = Vector::Constant(4, 0.7);
        double v = 0.0;
        for (const auto& o : osc) v += 0.5 * o.mass * o.omega * o.omega * 0.49;
        REQUIRE(m.v_bath(R) == Approx(v).epsilon(1e-12));
    }
    SECTION("asymmetric benchmark parameterization") {
        SpinBosonParams p;
        p.eps = p.omega = 0.4;
        p.xi = 0.13;
        p.beta = 12.5;
        p.omega_c = 1.0;
        DiabaticModel m = build_spin_boson(p);
        const Matrix h = m.h_at(Vector::Zero(p.n_bath));
        REQUIRE(h(0, 0) == Approx(0.4));
        REQUIRE(h(0, 1) == Approx(-0.4));
        REQUIRE(m.beta == 12.5);
    }
}

TEST_CASE("tully single avoided crossing") {
    DiabaticModel m = build_tully_sac(TullyParams{});
    SECTION("asymptotic gap 2A") {
        const AdiabaticFrame f = adiabatize(m, Vector::Constant(1, 14.0));
        REQUIRE(f.energies(1) - f.energies(0) == Approx(0.02).epsilon(1e-6));
    }
    SECTION("odd and continuous diagonal at the origin") {
        const double d = 1e-7;
        REQUIRE(m.h_at(Vector::Constant(1, 0.0))(0, 0) == 0.0);
        REQUIRE(m.h_at(Vector::Constant(1, d))(0, 0) ==
                Approx(-m.h_at(Vector::Constant(1, -d))(0, 0)).epsilon(1e-12));
        REQUIRE(m.h_at(Vector::Constant(1, d))(0, 0) == Approx(0.01 * 1.6 * d).epsilon(1e-5));
    }
}

TEST_CASE("flv conical intersection model") {
    FLVParams p;
    DiabaticModel m = build_flv(p);
    SECTION("coupling vanishes on the Y = 0 seam") {
        for (double x : {-1.0, 3.0, 5.0}) {
            Vector R(2);
            R << x, 0.0;
            REQUIRE(m.h_at(R)(0, 1) == 0.0);
        }
    }
    SECTION("conical intersection location solves h11 = h22 on the seam") {
        const double xci = flv_conical_intersection_x(p);
        Vector R(2);
        R << xci, 0.0;
        const Matrix h = m.h_at(R);
        REQUIRE(h(0, 0) == Approx(h(1, 1)).margin(1e-12));
        REQUIRE_THROWS_AS(adiabatize(m, R), DegenerateEigenvalues);
    }
    SECTION("gamma sweep grid stays constructible") {
        for (double g : {0.005, 0.02, 0.08}) {
            FLVParams q;
            q.gamma = g;
            DiabaticModel mm = build_flv(q);
            Vector R(2);
            R << 2.0, 0.3;
            REQUIRE(std::abs(mm.h_at(R)(0, 1)) > 0.0);
        }
    }
}

TEST_CASE("flv card round trip") {
    const FLVParams p = load_flv_card(data_dir() + "/flv.card");
    REQUIRE(p.mass_x == 20000.0);
    REQUIRE(p.omega_x == Approx(0.005));
    REQUIRE(p.delta == Approx(0.01));
    REQUIRE(p.x0 == Approx(2.0));
}

TEST_CASE("fmo model construction from the bundled card") {
    const FMOParams p = load_fmo_card(data_dir() + "/fmo.card");
    SECTION("site matrix is symmetric and echoes the card") {
        REQUIRE(symmetry_defect(p.site_hamiltonian) < 1e-15);
        REQUIRE(p.site_hamiltonian(0, 1) == Approx(-87.7 * units::wavenumber));
        REQUIRE(p.site_hamiltonian(2, 2) == Approx(0.0).margin(1e-18));
    }
    SECTION("unit conversions") {
        REQUIRE(p.lambda == Approx(35.0 * units::wavenumber));
        REQUIRE(p.gamma_debye == Approx(1.0 / (50.0 * units::fs)));
        REQUIRE(p.beta == Approx(1.0 / (units::k_boltzmann * 77.0)));
    }
    SECTION("debye discretization conserves the reorganization energy") {
        const auto osc = discretize_debye(p.lambda, p.gamma_debye, 60);
        double lam = 0.0;
        for (const auto& o : osc) lam += o.c * o.c / (2.0 * o.mass * o.omega * o.omega);
        REQUIRE(lam == Approx(p.lambda).epsilon(1e-12));
    }
    SECTION("bath mode count and trace bookkeeping") {
        FMOParams q = p;
        q.modes_per_site = 12;
        DiabaticModel m = build_fmo(q);
        REQUIRE(m.n_bath == 7 * 12);
        REQUIRE(static_cast<int>(m.bath_modes.size()) == m.n_bath);
        // Trace of h splits into the card trace minus the linear coupling shifts.
        Vector R = Vector::Constant(m.n_bath, 0.2);
        std::vector<Matrix> dh;
        m.dh_dR(R, dh);
        double shift = 0.0;
        for (int i = 0; i < m.n_bath; ++i) shift += dh[i].trace() * R(i);
        REQUIRE(m.h_at(R).trace() ==
                Approx(q.site_hamiltonian.trace() + shift).epsilon(1e-10));
    }
}
