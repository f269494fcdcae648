#include <catch2/catch.hpp>

#include "qcldyn/models.hpp"
#include "qcldyn/sampling.hpp"

using namespace qcldyn;

TEST_CASE("thermal wigner widths") {
    SECTION("zero-temperature limit: ground-state width") {
        // coth -> 1: Var(R) -> 1/(2 M w).
        Rng rng(1, Stream::bath, 0);
        const double w = 0.7, M = 2.0, beta = 1e4;
        double s2 = 0.0;
        const int n = 200000;
        for (int i = 0; i < n; ++i) {
            double R, P;
            wigner_thermal_harmonic(w, M, beta, rng, R, P);
            s2 += R * R;
        }
        REQUIRE(s2 / n == Approx(1.0 / (2.0 * M * w)).epsilon(0.02));
    }
    SECTION("classical equipartition at high temperature") {
        // beta w << 1: Var(P) -> M / beta.
        Rng rng(2, Stream::bath, 0);
        const double w = 0.01, M = 1.5, beta = 0.5;
        double p2 = 0.0;
        const int n = 200000;
        for (int i = 0; i < n; ++i) {
            double R, P;
            wigner_thermal_harmonic(w, M, beta, rng, R, P);
            p2 += P * P;
        }
        REQUIRE(p2 / n == Approx(M / beta).epsilon(0.02));
    }
    SECTION("sample moments match the coth formulas at 1e6 draws") {
        Rng rng(3, Stream::bath, 0);
        const double w = 1.3, M = 1.0, beta = 2.0;
        const double coth = 1.0 / std::tanh(0.5 * beta * w);
        double r2 = 0.0, p2 = 0.0, r1 = 0.0, p1 = 0.0;
        const int n = 1000000;
        for (int i = 0; i < n; ++i) {
            double R, P;
            wigner_thermal_harmonic(w, M, beta, rng, R, P);
            r1 += R;
            p1 += P;
            r2 += R * R;
            p2 += P * P;
        }
        REQUIRE(r2 / n == Approx(coth / (2.0 * M * w)).epsilon(0.01));
        REQUIRE(p2 / n == Approx(0.5 * M * w * coth).epsilon(0.01));
        REQUIRE(std::abs(r1 / n) < 5e-3);
        REQUIRE(std::abs(p1 / n) < 5e-3);
    }
}

TEST_CASE("gaussian wavepacket sampling") {
    // Var(R) Var(P) = 1/4 by construction of the sampler widths.
    const double sr = 0.8;
    REQUIRE(sr * sr * (0.25 / (sr * sr)) == Approx(0.25));
    Rng rng(5, Stream::bath, 0);
    double rm = 0.0, pm = 0.0, r2 = 0.0, p2 = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        double R, P;
        gaussian_wavepacket(-10.0, 11.0, sr, rng, R, P);
        rm += R;
        pm += P;
        r2 += R * R;
        p2 += P * P;
    }
    rm /= n;
    pm /= n;
    REQUIRE(rm == Approx(-10.0).epsilon(0.005));
    REQUIRE(pm == Approx(11.0).epsilon(0.005));
    REQUIRE(r2 / n - rm * rm == Approx(sr * sr).epsilon(0.03));
    REQUIRE(p2 / n - pm * pm == Approx(0.25 / (sr * sr)).epsilon(0.03));
}

TEST_CASE("mapping pair sampling and estimator prefactor") {
    SECTION("second moments of phi") {
        Rng rng(7, Stream::mapping, 0);
        const int n = 400000;
        double qq = 0, q12 = 0;
        for (int i = 0; i < n; ++i) {
            const MappingSample s = sample_mapping_pair(2, rng);
            qq += s.q(0) * s.q(0);
            q12 += s.q(0) * s.q(1);
        }
        REQUIRE(qq / n == Approx(0.5).epsilon(0.01));
        REQUIRE(std::abs(q12 / n) < 5e-3);
    }
    SECTION("prefactor mean is one for a diagonal initial element") {
        Rng rng(8, Stream::mapping, 0);
        CMatrix rho0 = CMatrix::Zero(2, 2);
        rho0(0, 0) = 1.0;
        const int n = 400000;
        Complex acc = 0.0;
        for (int i = 0; i < n; ++i) acc += fbts_prefactor(sample_mapping_pair(2, rng), rho0);
        REQUIRE((acc / static_cast<double>(n)).real() == Approx(1.0).margin(0.01));
        REQUIRE((acc / static_cast<double>(n)).imag() == Approx(0.0).margin(0.01));
    }
    SECTION("single state: prefactor reduces to (q^2 + p^2) with mean one") {
        Rng rng(9, Stream::mapping, 0);
        CMatrix rho0 = CMatrix::Constant(1, 1, Complex(1.0, 0.0));
        const MappingSample s = sample_mapping_pair(1, rng);
        const Complex pf = fbts_prefactor(s, rho0);
        REQUIRE(pf.real() ==
                Approx(s.q(0) * s.qb(0) + s.p(0) * s.pb(0)).epsilon(1e-12));
        const int n = 200000;
        Complex acc = 0.0;
        for (int i = 0; i < n; ++i) acc += fbts_prefactor(sample_mapping_pair(1, rng), rho0);
        REQUIRE((acc / static_cast<double>(n)).real() == Approx(1.0).margin(0.01));
    }
}

TEST_CASE("initial subsystem states") {
    SECTION("pure state |1>") {
        const InitialState s = parse_initial_state("1");
        const CMatrix r = s.density(2);
        REQUIRE(r(0, 0) == Complex(1.0, 0.0));
        REQUIRE(r(1, 1) == Complex(0.0, 0.0));
    }
    SECTION("sigma_x eigenstate has rho12 = 1/2") {
        const InitialState s = parse_initial_state("sx+");
        const CMatrix r = s.density(2);
        REQUIRE(r(0, 1).real() == Approx(0.5));
        REQUIRE(r.trace().real() == Approx(1.0));
    }
    SECTION("fmo-style 7-level pure state") {
        const InitialState s = parse_initial_state("1");
        const CMatrix r = s.density(7);
        REQUIRE(r(0, 0) == Complex(1.0, 0.0));
        for (int k = 1; k < 7; ++k) REQUIRE(r(k, k) == Complex(0.0, 0.0));
    }
    SECTION("unknown state rejected") {
        REQUIRE_THROWS_AS(parse_initial_state("bogus"), ConfigError);
    }
}

TEST_CASE("bath sampling is a deterministic function of params and seed") {
    SpinBosonParams p;
    p.n_bath = 6;
    DiabaticModel m = build_spin_boson(p);
    BathSamplerSpec spec;
    Rng r1(21, Stream::bath, 5), r2(21, Stream::bath, 5);
    const BathSample a = sample_bath(m, spec, r1);
    const BathSample b = sample_bath(m, spec, r2);
    REQUIRE(a.R == b.R);
    REQUIRE(a.P == b.P);
    REQUIRE(a.log_weight == 0.0);  // direct sampling carries unit weight
}
