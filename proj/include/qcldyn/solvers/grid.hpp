#pragma once

// Exact two-level 1-D split-operator propagation on a uniform grid: kinetic
// factor in momentum space, 2x2 potential exponential in position space.
// Serves as the quantum oracle for the scattering benchmarks: populations on
// the solver time grid plus the exact final-momentum density by momentum-space
// projection onto the asymptotic adiabatic channels.

#include <complex>
#include <vector>

#include "../adiabatic.hpp"
#include "../model.hpp"
#include "../observables.hpp"

namespace qcldyn {

namespace detail {

// Iterative radix-2 in-place FFT; sign = -1 forward, +1 inverse (no scaling).
inline void fft_radix2(std::vector<Complex>& a, int sign) {
    const size_t n = a.size();
    for (size_t i = 1, j = 0; i < n; ++i) {
        size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (size_t len = 2; len <= n; len <<= 1) {
        const double ang = sign * 2.0 * M_PI / static_cast<double>(len);
        const Complex wl = std::polar(1.0, ang);
        for (size_t i = 0; i < n; i += len) {
            Complex w(1.0, 0.0);
            for (size_t k = 0; k < len / 2; ++k) {
                const Complex u = a[i + k];
                const Complex v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wl;
            }
        }
    }
}

}  // namespace detail

struct GridOracleConfig {
    const DiabaticModel* model = nullptr;  // 2 states, 1 bath coordinate, analytic h
    double x_min = -25.0;
    double x_max = 25.0;
    int n_points = 4096;
    Vector packet_center;    // optional overrides; default taken from the model
    Vector packet_momentum;
    Vector packet_sigma;
    int initial_state = 0;   // diabatic
    double boundary_tol = 1e-10;
    std::vector<ObservableSpec> observables;
};

struct GridOracleResult {
    TimeSeries series;
    std::vector<Histogram> histograms;
    double final_norm = 1.0;
};

class GridOracle {
public:
    explicit GridOracle(const GridOracleConfig& cfg) : cfg_(cfg), model_(*cfg.model) {
        if (model_.n_states != 2 || model_.n_bath != 1)
            throw Error("grid oracle supports two-level one-dimensional models");
        n_ = cfg_.n_points;
        if (n_ & (n_ - 1)) throw ConfigError("grid points must be a power of two");
        dx_ = (cfg_.x_max - cfg_.x_min) / n_;
        x_.resize(n_);
        for (int i = 0; i < n_; ++i) x_[i] = cfg_.x_min + i * dx_;
        mass_ = model_.masses(0);
    }

    GridOracleResult run(double dt, int steps, int output_every) {
        if (output_every < 1 || steps % output_every != 0)
            throw ConfigError("output_every must divide steps");
        prepare(dt);
        initialize_packet();

        ObservablePlan plan(cfg_.observables, 2);
        const int n_out = steps / output_every + 1;
        GridOracleResult res;
        res.series.names.reserve(plan.n_series());
        for (const auto& e : plan.entries) res.series.names.push_back(e.spec.name);
        res.series.mean.assign(plan.n_series(), std::vector<Complex>(n_out));
        res.series.stderr_re.assign(plan.n_series(), std::vector<double>(n_out, 0.0));
        res.series.stderr_im.assign(plan.n_series(), std::vector<double>(n_out, 0.0));
        res.series.ess.assign(n_out, 1.0);
        res.series.trajectories = 1;

        int out = 0;
        res.series.times.resize(n_out);
        for (int s = 0; s <= steps; ++s) {
            if (s % output_every == 0) {
                res.series.times[out] = s * dt;
                measure(plan, out, res.series);
                check_boundary();
                ++out;
            }
            if (s == steps) break;
            step();
        }
        res.final_norm = norm();
        for (const auto& h : plan.histograms) res.histograms.push_back(momentum_density(h));
        return res;
    }

    double norm() const {
        double nsum = 0.0;
        for (int i = 0; i < n_; ++i) nsum += std::norm(psi0_[i]) + std::norm(psi1_[i]);
        return nsum * dx_;
    }

    // Packet position expectation (diagnostics and free-packet tests).
    double mean_position() const {
        double m = 0.0;
        for (int i = 0; i < n_; ++i) m += x_[i] * (std::norm(psi0_[i]) + std::norm(psi1_[i]));
        return m * dx_ / norm();
    }

private:
    void prepare(double dt) {
        // Potential half-step propagators per grid point (2x2 symmetric).
        e00_.resize(n_);
        e01_.resize(n_);
        e11_.resize(n_);
        u00_.resize(n_);
        u01_.resize(n_);
        u10_.resize(n_);
        u11_.resize(n_);
        Matrix h(2, 2);
        Vector R(1);
        AdiabaticFrame prev;
        bool have_prev = false;
        FrameWorkspace ws;
        for (int i = 0; i < n_; ++i) {
            R(0) = x_[i];
            model_.h(R, h);
            const double vb = model_.v_bath(R);
            const double a = 0.5 * (h(0, 0) + h(1, 1)) + vb;
            const double bz = 0.5 * (h(0, 0) - h(1, 1));
            const double bx = h(0, 1);
            const double bn = std::sqrt(bz * bz + bx * bx);
            const double tau = 0.5 * dt;
            const Complex ph = std::polar(1.0, -a * tau);
            const double cb = std::cos(bn * tau);
            const double sb = bn > 0 ? std::sin(bn * tau) / bn : tau;
            e00_[i] = ph * Complex(cb, -sb * bz);
            e11_[i] = ph * Complex(cb, sb * bz);
            e01_[i] = ph * Complex(0.0, -sb * bx);
            // Adiabatic channel vectors, gauge-continuous along the grid.
            AdiabaticFrame fr;
            adiabatize_into(model_, R, have_prev ? &prev : nullptr, 0.0, ws, fr);
            have_prev = true;
            prev = fr;
            u00_[i] = fr.vectors(0, 0);
            u10_[i] = fr.vectors(1, 0);
            u01_[i] = fr.vectors(0, 1);
            u11_[i] = fr.vectors(1, 1);
        }
        // Kinetic full-step phases in momentum space.
        kin_.resize(n_);
        k_.resize(n_);
        const double dk = 2.0 * M_PI / (n_ * dx_);
        for (int j = 0; j < n_; ++j) {
            const double k = (j < n_ / 2 ? j : j - n_) * dk;
            k_[j] = k;
            kin_[j] = std::polar(1.0, -k * k / (2.0 * mass_) * dt);
        }
    }

    void initialize_packet() {
        const Vector& c = cfg_.packet_center.size() ? cfg_.packet_center
                                                    : model_.wavepacket.center;
        const Vector& p = cfg_.packet_momentum.size() ? cfg_.packet_momentum
                                                      : model_.wavepacket.momentum;
        const Vector& sg = cfg_.packet_sigma.size() ? cfg_.packet_sigma
                                                    : model_.wavepacket.sigma_r;
        if (!c.size() || !p.size() || !sg.size())
            throw ConfigError("grid oracle needs a wavepacket specification");
        psi0_.assign(n_, Complex(0, 0));
        psi1_.assign(n_, Complex(0, 0));
        std::vector<Complex>& target = cfg_.initial_state == 0 ? psi0_ : psi1_;
        const double s2 = sg(0) * sg(0);
        double nrm = 0.0;
        for (int i = 0; i < n_; ++i) {
            const double d = x_[i] - c(0);
            target[i] = std::polar(std::exp(-d * d / (4.0 * s2)), p(0) * x_[i]);
            nrm += std::norm(target[i]);
        }
        nrm = 1.0 / std::sqrt(nrm * dx_);
        for (int i = 0; i < n_; ++i) target[i] *= nrm;
    }

    void apply_potential_half() {
        for (int i = 0; i < n_; ++i) {
            const Complex a = psi0_[i], b = psi1_[i];
            psi0_[i] = e00_[i] * a + e01_[i] * b;
            psi1_[i] = e01_[i] * a + e11_[i] * b;
        }
    }

    void step() {
        apply_potential_half();
        detail::fft_radix2(psi0_, -1);
        detail::fft_radix2(psi1_, -1);
        for (int j = 0; j < n_; ++j) {
            psi0_[j] *= kin_[j];
            psi1_[j] *= kin_[j];
        }
        detail::fft_radix2(psi0_, +1);
        detail::fft_radix2(psi1_, +1);
        const double inv = 1.0 / n_;
        for (int j = 0; j < n_; ++j) {
            psi0_[j] *= inv;
            psi1_[j] *= inv;
        }
        apply_potential_half();
    }

    void measure(const ObservablePlan& plan, int out, TimeSeries& series) const {
        for (int i = 0; i < plan.n_series(); ++i) {
            const auto& e = plan.entries[i];
            Complex acc = 0.0;
            if (e.needs_frame) {
                // Adiabatic population: project onto the channel per grid point.
                const int a = e.spec.state;
                for (int g = 0; g < n_; ++g) {
                    const Complex amp = a == 0 ? u00_[g] * psi0_[g] + u10_[g] * psi1_[g]
                                               : u01_[g] * psi0_[g] + u11_[g] * psi1_[g];
                    acc += std::norm(amp);
                }
            } else {
                const CMatrix& b = e.fixed;
                for (int g = 0; g < n_; ++g) {
                    const Complex p0 = psi0_[g], p1 = psi1_[g];
                    acc += std::conj(p0) * (b(0, 0) * p0 + b(0, 1) * p1) +
                           std::conj(p1) * (b(1, 0) * p0 + b(1, 1) * p1);
                }
            }
            Complex v = acc * dx_;
            series.mean[i][out] =
                e.spec.component == ObservableSpec::Component::im ? Complex(v.imag(), 0)
                                                                  : Complex(v.real(), 0);
        }
    }

    void check_boundary() const {
        double edge = 0.0;
        for (int i = 0; i < 8; ++i) {
            edge = std::max(edge, std::norm(psi0_[i]) + std::norm(psi1_[i]));
            edge = std::max(edge,
                            std::norm(psi0_[n_ - 1 - i]) + std::norm(psi1_[n_ - 1 - i]));
        }
        if (edge > cfg_.boundary_tol)
            throw GridTooSmall("wavepacket density reached the grid boundary");
    }

    Histogram momentum_density(const ObservableSpec& spec) const {
        // Project onto adiabatic channels, then transform to momentum space.
        std::vector<Complex> ch0(n_), ch1(n_);
        for (int g = 0; g < n_; ++g) {
            ch0[g] = u00_[g] * psi0_[g] + u10_[g] * psi1_[g];
            ch1[g] = u01_[g] * psi0_[g] + u11_[g] * psi1_[g];
        }
        detail::fft_radix2(ch0, -1);
        detail::fft_radix2(ch1, -1);
        const double dk = 2.0 * M_PI / (n_ * dx_);
        // |psi~(k)|^2 dk / (2 pi) with psi~ = FFT * dx integrates to the norm.
        const double scale = dx_ * dx_ * dk / (2.0 * M_PI);
        HistogramAccumulator acc(spec.bins, spec.lo, spec.hi);
        for (int j = 0; j < n_; ++j) {
            double w = 0.0;
            if (spec.projection != 1) w += std::norm(ch0[j]) * scale;
            if (spec.projection != 0) w += std::norm(ch1[j]) * scale;
            if (spec.projection >= 0 && spec.projection > 1)
                throw Error("grid oracle histogram projection out of range");
            acc.add(k_[j], w);
            acc.add_total_weight(w);
        }
        return Histogram::from_accumulator(acc, 1, spec.name);
    }

    GridOracleConfig cfg_;
    const DiabaticModel& model_;
    int n_ = 0;
    double dx_ = 0.0;
    double mass_ = 1.0;
    std::vector<double> x_, k_;
    std::vector<Complex> psi0_, psi1_;
    std::vector<Complex> e00_, e01_, e11_;
    std::vector<Complex> kin_;
    std::vector<Complex> u00_, u01_, u10_, u11_;
};

}  // namespace qcldyn
