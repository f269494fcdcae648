#include <catch2/catch.hpp>

#include <cmath>

#include "qcldyn/rng.hpp"

using namespace qcldyn;

TEST_CASE("philox streams are deterministic and independent") {
    Rng a(42, Stream::bath, 7);
    Rng b(42, Stream::bath, 7);
    for (int i = 0; i < 100; ++i) REQUIRE(a.uniform() == b.uniform());

    Rng c(42, Stream::bath, 8);
    Rng d(42, Stream::mapping, 7);
    Rng e(43, Stream::bath, 7);
    Rng base(42, Stream::bath, 7);
    bool all_equal_c = true, all_equal_d = true, all_equal_e = true;
    for (int i = 0; i < 16; ++i) {
        const double u = base.uniform();
        all_equal_c &= u == c.uniform();
        all_equal_d &= u == d.uniform();
        all_equal_e &= u == e.uniform();
    }
    REQUIRE_FALSE(all_equal_c);
    REQUIRE_FALSE(all_equal_d);
    REQUIRE_FALSE(all_equal_e);
}

TEST_CASE("uniforms live strictly inside (0,1)") {
    Rng r(1, Stream::hops, 0);
    for (int i = 0; i < 100000; ++i) {
        const double u = r.uniform();
        REQUIRE(u > 0.0);
        REQUIRE(u < 1.0);
    }
}

TEST_CASE("gaussian moments") {
    Rng r(3, Stream::mapping, 1);
    const int n = 200000;
    double s1 = 0, s2 = 0, s4 = 0;
    for (int i = 0; i < n; ++i) {
        const double g = r.gaussian();
        s1 += g;
        s2 += g * g;
        s4 += g * g * g * g;
    }
    REQUIRE(std::abs(s1 / n) < 4.0 / std::sqrt(static_cast<double>(n)));
    REQUIRE(s2 / n == Approx(1.0).margin(0.02));
    REQUIRE(s4 / n == Approx(3.0).margin(0.15));
}

TEST_CASE("inverse normal cdf inverts the normal cdf") {
    for (double p : {1e-10, 1e-4, 0.02, 0.3, 0.5, 0.77, 0.999, 1.0 - 1e-12}) {
        const double x = inverse_normal_cdf(p);
        const double back = 0.5 * std::erfc(-x / std::sqrt(2.0));
        REQUIRE(back == Approx(p).epsilon(1e-12).margin(1e-14));
    }
    REQUIRE(inverse_normal_cdf(0.5) == Approx(0.0).margin(1e-14));
}

TEST_CASE("sobol sequence equidistributes and is replicate-deterministic") {
    QmcSequence s(11, 0, 8);
    QmcSequence same(11, 0, 8);
    QmcSequence other(11, 1, 8);
    double g1[8], g2[8], g3[8];
    s.gaussians(5, g1, 8);
    same.gaussians(5, g2, 8);
    other.gaussians(5, g3, 8);
    for (int j = 0; j < 8; ++j) REQUIRE(g1[j] == g2[j]);
    bool any_diff = false;
    for (int j = 0; j < 8; ++j) any_diff |= g1[j] != g3[j];
    REQUIRE(any_diff);

    // First 4096 points: per-dimension mean of Phi(g) must be very close to 1/2
    // (each dimension is a permuted van der Corput sequence).
    for (int dim : {0, 3, 7}) {
        double acc = 0.0;
        double g[8];
        for (int i = 0; i < 4096; ++i) {
            s.gaussians(i, g, 8);
            acc += 0.5 * std::erfc(-g[dim] / std::sqrt(2.0));
        }
        REQUIRE(acc / 4096 == Approx(0.5).margin(2e-4));
    }
}

TEST_CASE("gaussian variance of sobol dimensions") {
    QmcSequence s(7, 2, 4);
    double g[4];
    double s2 = 0;
    const int n = 4096;
    for (int i = 0; i < n; ++i) {
        s.gaussians(i, g, 4);
        s2 += g[2] * g[2];
    }
    REQUIRE(s2 / n == Approx(1.0).margin(0.01));
}
