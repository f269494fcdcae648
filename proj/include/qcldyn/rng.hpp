#pragma once

// Counter-based random numbers (Philox-4x32-10). Every trajectory owns independent
// streams keyed by (master seed, stream id, trajectory index), so results do not
// depend on thread count or execution order, and substreams (bath / mapping / hops)
// can be varied independently of one another.

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

namespace qcldyn {

namespace detail {
inline void philox_round(std::array<uint32_t, 4>& c, std::array<uint32_t, 2>& k) {
    const uint64_t m0 = 0xD2511F53ull * c[0];
    const uint64_t m1 = 0xCD9E8D57ull * c[2];
    const uint32_t hi0 = static_cast<uint32_t>(m0 >> 32), lo0 = static_cast<uint32_t>(m0);
    const uint32_t hi1 = static_cast<uint32_t>(m1 >> 32), lo1 = static_cast<uint32_t>(m1);
    c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
    k[0] += 0x9E3779B9u;
    k[1] += 0xBB67AE85u;
}
}  // namespace detail

inline std::array<uint32_t, 4> philox4x32(uint64_t counter, uint64_t index, uint64_t key) {
    std::array<uint32_t, 4> c = {
        static_cast<uint32_t>(counter), static_cast<uint32_t>(counter >> 32),
        static_cast<uint32_t>(index), static_cast<uint32_t>(index >> 32)};
    std::array<uint32_t, 2> k = {static_cast<uint32_t>(key), static_cast<uint32_t>(key >> 32)};
    for (int r = 0; r < 10; ++r) detail::philox_round(c, k);
    return c;
}

// Substream ids.
enum class Stream : uint32_t {
    bath = 1,
    mapping = 2,
    hops = 3,
    pairs = 4,
    shifts = 5,
};

class Rng {
public:
    Rng() = default;
    Rng(uint64_t seed, Stream stream, uint64_t trajectory)
        : key_(seed ^ (0x9E3779B97F4A7C15ull * static_cast<uint64_t>(stream))),
          index_(trajectory) {}

    // Uniform double in (0,1), 53 significant bits, never exactly 0 or 1.
    double uniform() {
        if (have_ == 0) refill();
        const uint32_t a = buf_[--have_];
        if (have_ == 0) refill();
        const uint32_t b = buf_[--have_];
        const uint64_t hi = static_cast<uint64_t>(a) >> 5;   // 27 bits
        const uint64_t lo = static_cast<uint64_t>(b) >> 6;   // 26 bits
        return ((hi * 67108864.0 + lo) + 0.5) * (1.0 / 9007199254740992.0);
    }

    // Standard normal via Box-Muller; draws two uniforms per pair.
    void gaussian_pair(double& g0, double& g1) {
        const double u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        g0 = r * std::cos(6.283185307179586476925287 * u2);
        g1 = r * std::sin(6.283185307179586476925287 * u2);
    }

    double gaussian() {
        if (has_gauss_) {
            has_gauss_ = false;
            return gauss_;
        }
        double g0, g1;
        gaussian_pair(g0, g1);
        gauss_ = g1;
        has_gauss_ = true;
        return g0;
    }

    uint32_t uint32() {
        if (have_ == 0) refill();
        return buf_[--have_];
    }

    // Uniform integer in [0, n).
    uint32_t below(uint32_t n) {
        // n is tiny here (candidate counts, state counts); modulo bias is < 2^-28.
        return uint32() % n;
    }

private:
    void refill() {
        buf_ = philox4x32(counter_++, index_, key_);
        have_ = 4;
    }

    uint64_t key_ = 0;
    uint64_t index_ = 0;
    uint64_t counter_ = 0;
    std::array<uint32_t, 4> buf_{};
    int have_ = 0;
    bool has_gauss_ = false;
    double gauss_ = 0.0;
};

// Per-trajectory substream bundle.
struct TrajectoryRng {
    Rng bath;
    Rng mapping;
    Rng hops;
    Rng pairs;
    TrajectoryRng(uint64_t seed, uint64_t bath_seed_offset, uint64_t traj)
        : bath(seed + bath_seed_offset, Stream::bath, traj),
          mapping(seed, Stream::mapping, traj),
          hops(seed, Stream::hops, traj),
          pairs(seed, Stream::pairs, traj) {}
};

// Inverse standard-normal CDF (Acklam's rational approximation polished with one
// Halley step through erfc); smooth one-dimensional map for the low-discrepancy
// sampling path.
inline double inverse_normal_cdf(double p) {
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425, phigh = 1.0 - plow;
    double x;
    if (p < plow) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= phigh) {
        const double q = p - 0.5, r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log(1.0 - p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    // One Halley refinement against the exact CDF.
    const double e = 0.5 * std::erfc(-x / 1.4142135623730951) - p;
    const double u = e * 2.5066282746310002 * std::exp(0.5 * x * x);
    x = x - u / (1.0 + 0.5 * x * u);
    return x;
}

// Digitally shifted Sobol sequence over [0,1)^dim (direction numbers for up to
// 28 dimensions). Optional low-discrepancy source for the mapping-variable
// Gaussians; replicate shifts are digital XOR shifts drawn from the master seed.
class QmcSequence {
public:
    QmcSequence() = default;
    QmcSequence(uint64_t seed, uint32_t replicate, int dim) : dim_(dim) {
        if (dim > 28) throw std::length_error("low-discrepancy sampling supports <= 28 dims");
        // Primitive polynomial degree s, coefficient a, and initial m values per
        // dimension (dimension 1 is the van der Corput sequence in base 2).
        static const int S[] = {0, 1, 2, 3, 3, 4, 4, 5, 5, 5, 5, 5, 5, 6,
                                6, 6, 6, 6, 6, 7, 7, 7, 7, 7, 7, 7, 7, 7};
        static const int A[] = {0, 0, 1, 1, 2, 1, 4, 2, 4, 7, 11, 13, 14, 1,
                                13, 16, 19, 22, 25, 1, 4, 7, 8, 14, 19, 21, 28, 31};
        static const int M[][7] = {
            {1, 0, 0, 0, 0, 0, 0},      {1, 0, 0, 0, 0, 0, 0},
            {1, 3, 0, 0, 0, 0, 0},      {1, 3, 1, 0, 0, 0, 0},
            {1, 1, 1, 0, 0, 0, 0},      {1, 1, 3, 3, 0, 0, 0},
            {1, 3, 5, 13, 0, 0, 0},     {1, 1, 5, 5, 17, 0, 0},
            {1, 1, 5, 5, 5, 0, 0},      {1, 1, 7, 11, 19, 0, 0},
            {1, 1, 5, 1, 1, 0, 0},      {1, 1, 1, 3, 11, 0, 0},
            {1, 3, 5, 5, 31, 0, 0},     {1, 3, 3, 9, 7, 49, 0},
            {1, 1, 1, 15, 21, 21, 0},   {1, 3, 1, 13, 27, 49, 0},
            {1, 1, 1, 15, 7, 5, 0},     {1, 3, 1, 15, 13, 25, 0},
            {1, 1, 5, 5, 19, 61, 0},    {1, 3, 7, 11, 23, 15, 103},
            {1, 3, 7, 13, 13, 15, 69},  {1, 1, 3, 13, 7, 35, 63},
            {1, 3, 5, 9, 1, 25, 53},    {1, 3, 1, 13, 9, 35, 107},
            {1, 1, 1, 9, 23, 37, 103},  {1, 3, 1, 7, 13, 45, 95},
            {1, 1, 3, 3, 1, 41, 1},     {1, 3, 1, 9, 31, 25, 109}};
        v_.assign(dim, std::array<uint32_t, 32>{});
        for (int d = 0; d < dim; ++d) {
            uint32_t m[32];
            const int s = S[d];
            if (s == 0) {
                for (int k = 0; k < 32; ++k) v_[d][k] = 1u << (31 - k);
                continue;
            }
            for (int k = 0; k < s; ++k) m[k] = static_cast<uint32_t>(M[d][k]);
            for (int k = s; k < 32; ++k) {
                uint32_t mk = m[k - s] ^ (m[k - s] << s);
                for (int t = 1; t < s; ++t)
                    if ((A[d] >> (s - 1 - t)) & 1) mk ^= m[k - t] << t;
                m[k] = mk;
            }
            for (int k = 0; k < 32; ++k) v_[d][k] = m[k] << (31 - k);
        }
        shift_.resize(dim);
        Rng shift_rng(seed, Stream::shifts, replicate);
        for (int j = 0; j < dim; ++j) shift_[j] = shift_rng.uint32();
    }

    // Fills g with dim standard normals for point index i (inverse-CDF map,
    // one dimension per normal).
    void gaussians(uint64_t i, double* g, int count) const {
        const uint64_t gray = i ^ (i >> 1);
        for (int j = 0; j < count; ++j) {
            uint32_t x = shift_[j];
            uint64_t bits = gray;
            int k = 0;
            while (bits) {
                if (bits & 1) x ^= v_[j][k];
                bits >>= 1;
                ++k;
            }
            const double u = (static_cast<double>(x) + 0.5) * (1.0 / 4294967296.0);
            g[j] = inverse_normal_cdf(u);
        }
    }

    bool empty() const { return v_.empty(); }

private:
    int dim_ = 0;
    std::vector<std::array<uint32_t, 32>> v_;
    std::vector<uint32_t> shift_;
};



}  // namespace qcldyn
