#pragma once

// Observable definitions and ensemble estimation. Estimates are plain means of
// per-trajectory contributions (solver weights ride inside the contribution);
// error bars use the influence-function jackknife, which for a plain mean is the
// independent-trajectory sample variance. With replicate (low-discrepancy)
// sampling the error bars come from the spread of replicate means instead.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "adiabatic.hpp"
#include "core.hpp"

namespace qcldyn {

struct ObservableSpec {
    enum class Kind { population, pauli, matrix, rho_element, momentum_histogram };
    enum class Basis { subsystem, adiabatic };
    enum class Component { re, im };

    Kind kind = Kind::population;
    Basis basis = Basis::subsystem;
    Component component = Component::re;
    int state = 0;                   // population index, 0-based
    int pauli_axis = 2;              // 0 = x, 1 = y, 2 = z
    CMatrix matrix;                  // custom Hermitian matrix, subsystem basis
    int row = 0, col = 0;            // rho element
    int bins = 0;                    // histogram
    double lo = 0.0, hi = 0.0;
    int projection = -1;             // histogram: adiabatic state filter, -1 = all
    std::string name;

    bool is_histogram() const { return kind == Kind::momentum_histogram; }

    // Subsystem-basis matrix; adiabatic-basis populations need the local frame.
    CMatrix matrix_subsystem(int n, const AdiabaticFrame* frame = nullptr) const {
        switch (kind) {
            case Kind::population: {
                if (state < 0 || state >= n) throw Error("population index out of range");
                if (basis == Basis::subsystem) {
                    CMatrix b = CMatrix::Zero(n, n);
                    b(state, state) = 1.0;
                    return b;
                }
                if (!frame) throw Error("adiabatic population needs a frame");
                const Vector u = frame->vectors.col(state);
                return (u * u.transpose()).cast<Complex>();
            }
            case Kind::pauli: {
                if (n != 2) throw Error("pauli observables need a two-state subsystem");
                CMatrix b = CMatrix::Zero(2, 2);
                if (pauli_axis == 0) {
                    b(0, 1) = b(1, 0) = 1.0;
                } else if (pauli_axis == 1) {
                    b(0, 1) = Complex(0, -1);
                    b(1, 0) = Complex(0, 1);
                } else {
                    b(0, 0) = 1.0;
                    b(1, 1) = -1.0;  // state |1> maps to +1
                }
                return b;
            }
            case Kind::matrix:
                if (matrix.rows() != n) throw Error("custom observable has wrong size");
                return matrix;
            case Kind::rho_element: {
                // Tr[B rho] = rho(row, col):  B = |col><row|.
                CMatrix b = CMatrix::Zero(n, n);
                b(col, row) = 1.0;
                return b;
            }
            case Kind::momentum_histogram:
                throw Error("histogram observable has no matrix form");
        }
        throw Error("unreachable");
    }
};

// Basis transforms at an evaluation point (U is the real eigenvector matrix).
inline CMatrix to_adiabatic(const CMatrix& b_subsystem, const AdiabaticFrame& frame) {
    return frame.vectors.transpose().cast<Complex>() * b_subsystem *
           frame.vectors.cast<Complex>();
}
inline CMatrix to_subsystem(const CMatrix& b_adiabatic, const AdiabaticFrame& frame) {
    return frame.vectors.cast<Complex>() * b_adiabatic * frame.vectors.transpose().cast<Complex>();
}

inline CMatrix basis_transform(const ObservableSpec& spec, const AdiabaticFrame& frame,
                               ObservableSpec::Basis target) {
    const int n = frame.n_states();
    if (spec.kind == ObservableSpec::Kind::population &&
        spec.basis == ObservableSpec::Basis::adiabatic) {
        CMatrix diag = CMatrix::Zero(n, n);
        diag(spec.state, spec.state) = 1.0;
        return target == ObservableSpec::Basis::adiabatic ? diag : to_subsystem(diag, frame);
    }
    const CMatrix b = spec.matrix_subsystem(n, &frame);
    return target == ObservableSpec::Basis::adiabatic ? to_adiabatic(b, frame) : b;
}

// Parses one observable token:
//   pop:K[:adiabatic|:subsystem] | sx | sy | sz | rho:A:B (expands to re+im)
//   phist:BINS:LO:HI[:STATE] | matrix:FILE is handled by the config layer.
inline std::vector<ObservableSpec> parse_observable(const std::string& token) {
    std::vector<std::string> f;
    std::string cur;
    for (char ch : token) {
        if (ch == ':') {
            f.push_back(cur);
            cur.clear();
        } else if (!isspace(static_cast<unsigned char>(ch))) {
            cur.push_back(ch);
        }
    }
    f.push_back(cur);
    ObservableSpec s;
    s.name = token;
    if (f[0] == "sx" || f[0] == "sy" || f[0] == "sz") {
        s.kind = ObservableSpec::Kind::pauli;
        s.pauli_axis = f[0][1] == 'x' ? 0 : (f[0][1] == 'y' ? 1 : 2);
        return {s};
    }
    if (f[0] == "pop") {
        if (f.size() < 2) throw ConfigError("pop observable needs a state index");
        s.kind = ObservableSpec::Kind::population;
        s.state = std::stoi(f[1]) - 1;
        if (s.state < 0) throw ConfigError("pop: state indices are 1-based");
        if (f.size() > 2) {
            if (f[2] == "adiabatic")
                s.basis = ObservableSpec::Basis::adiabatic;
            else if (f[2] != "subsystem")
                throw ConfigError("pop: basis must be adiabatic or subsystem");
        }
        return {s};
    }
    if (f[0] == "rho") {
        if (f.size() < 3) throw ConfigError("rho observable needs two indices");
        s.kind = ObservableSpec::Kind::rho_element;
        s.row = std::stoi(f[1]) - 1;
        s.col = std::stoi(f[2]) - 1;
        if (s.row < 0 || s.col < 0) throw ConfigError("rho: state indices are 1-based");
        ObservableSpec im = s;
        s.component = ObservableSpec::Component::re;
        s.name = "rho_re:" + f[1] + ":" + f[2];
        im.component = ObservableSpec::Component::im;
        im.name = "rho_im:" + f[1] + ":" + f[2];
        return {s, im};
    }
    if (f[0] == "phist") {
        if (f.size() < 4) throw ConfigError("phist needs bins:lo:hi");
        s.kind = ObservableSpec::Kind::momentum_histogram;
        s.bins = std::stoi(f[1]);
        s.lo = std::stod(f[2]);
        s.hi = std::stod(f[3]);
        if (s.bins <= 0 || !(s.hi > s.lo)) throw ConfigError("phist: bad bin layout");
        if (f.size() > 4) s.projection = std::stoi(f[4]) - 1;
        return {s};
    }
    throw ConfigError("unknown observable '" + token + "'");
}

// Observable evaluation plan shared by the trajectory kernels: constant
// subsystem-basis matrices are cached; adiabatic populations rebuild from a
// local frame at measurement time.
struct ObservablePlan {
    struct Entry {
        ObservableSpec spec;
        CMatrix fixed;  // valid when !needs_frame
        bool needs_frame = false;
        Complex trace{0.0, 0.0};
    };
    std::vector<Entry> entries;
    std::vector<ObservableSpec> histograms;

    ObservablePlan() = default;
    ObservablePlan(const std::vector<ObservableSpec>& specs, int n) {
        for (const auto& s : specs) {
            if (s.is_histogram()) {
                histograms.push_back(s);
                continue;
            }
            Entry e;
            e.spec = s;
            e.needs_frame = s.kind == ObservableSpec::Kind::population &&
                            s.basis == ObservableSpec::Basis::adiabatic;
            if (!e.needs_frame) {
                e.fixed = s.matrix_subsystem(n);
                e.trace = e.fixed.trace();
            } else {
                e.trace = Complex(1.0, 0.0);  // projector
            }
            entries.push_back(std::move(e));
        }
    }
    int n_series() const { return static_cast<int>(entries.size()); }
};

// ---------------------------------------------------------------------------
// Accumulators
// ---------------------------------------------------------------------------

class Accumulator {
public:
    Accumulator() = default;
    Accumulator(int n_times, int n_obs, int n_rep)
        : n_times_(n_times),
          n_obs_(n_obs),
          n_rep_(std::max(1, n_rep)),
          sum_re_(static_cast<size_t>(n_times) * n_obs * n_rep_, 0.0),
          sum_im_(sum_re_.size(), 0.0),
          sum_re2_(static_cast<size_t>(n_times) * n_obs, 0.0),
          sum_im2_(sum_re2_.size(), 0.0),
          sum_absw_(n_times, 0.0),
          sum_absw2_(n_times, 0.0),
          rep_count_(n_rep_, 0) {}

    void add(int t, int obs, int rep, Complex c) {
        const size_t k = (static_cast<size_t>(t) * n_obs_ + obs) * n_rep_ + rep;
        sum_re_[k] += c.real();
        sum_im_[k] += c.imag();
        const size_t k2 = static_cast<size_t>(t) * n_obs_ + obs;
        sum_re2_[k2] += c.real() * c.real();
        sum_im2_[k2] += c.imag() * c.imag();
    }

    void add_weight(int t, double absw, int rep) {
        sum_absw_[t] += absw;
        sum_absw2_[t] += absw * absw;
        if (t == 0) ++rep_count_[rep];
    }

    void merge(const Accumulator& o) {
        for (size_t i = 0; i < sum_re_.size(); ++i) sum_re_[i] += o.sum_re_[i];
        for (size_t i = 0; i < sum_im_.size(); ++i) sum_im_[i] += o.sum_im_[i];
        for (size_t i = 0; i < sum_re2_.size(); ++i) sum_re2_[i] += o.sum_re2_[i];
        for (size_t i = 0; i < sum_im2_.size(); ++i) sum_im2_[i] += o.sum_im2_[i];
        for (size_t i = 0; i < sum_absw_.size(); ++i) sum_absw_[i] += o.sum_absw_[i];
        for (size_t i = 0; i < sum_absw2_.size(); ++i) sum_absw2_[i] += o.sum_absw2_[i];
        for (size_t i = 0; i < rep_count_.size(); ++i) rep_count_[i] += o.rep_count_[i];
        count_ += o.count_;
    }

    void count_trajectory() { ++count_; }
    long long count() const { return count_; }

    Complex mean(int t, int obs) const {
        double re = 0, im = 0;
        for (int r = 0; r < n_rep_; ++r) {
            const size_t k = (static_cast<size_t>(t) * n_obs_ + obs) * n_rep_ + r;
            re += sum_re_[k];
            im += sum_im_[k];
        }
        return count_ ? Complex(re / count_, im / count_) : Complex(0, 0);
    }

    // Standard error of real and imaginary means.
    void stderr_of_mean(int t, int obs, double& se_re, double& se_im) const {
        if (count_ < 2) {
            se_re = se_im = 0.0;
            return;
        }
        if (n_rep_ > 1) {
            // Spread of replicate means.
            const Complex m = mean(t, obs);
            double vr = 0, vi = 0;
            int used = 0;
            for (int r = 0; r < n_rep_; ++r) {
                if (!rep_count_[r]) continue;
                const size_t k = (static_cast<size_t>(t) * n_obs_ + obs) * n_rep_ + r;
                const double mr = sum_re_[k] / rep_count_[r];
                const double mi = sum_im_[k] / rep_count_[r];
                vr += (mr - m.real()) * (mr - m.real());
                vi += (mi - m.imag()) * (mi - m.imag());
                ++used;
            }
            if (used < 2) {
                se_re = se_im = 0.0;
                return;
            }
            se_re = std::sqrt(vr / (used * (used - 1)));
            se_im = std::sqrt(vi / (used * (used - 1)));
            return;
        }
        const size_t k2 = static_cast<size_t>(t) * n_obs_ + obs;
        const Complex m = mean(t, obs);
        const double n = static_cast<double>(count_);
        const double var_re = std::max(0.0, sum_re2_[k2] / n - m.real() * m.real());
        const double var_im = std::max(0.0, sum_im2_[k2] / n - m.imag() * m.imag());
        se_re = std::sqrt(var_re / (n - 1));
        se_im = std::sqrt(var_im / (n - 1));
    }

    // Effective sample size from the solver weight magnitudes.
    double ess(int t) const {
        return sum_absw2_[t] > 0 ? sum_absw_[t] * sum_absw_[t] / sum_absw2_[t]
                                 : static_cast<double>(count_);
    }

    int n_times() const { return n_times_; }
    int n_obs() const { return n_obs_; }
    int n_rep() const { return n_rep_; }

private:
    int n_times_ = 0, n_obs_ = 0, n_rep_ = 1;
    std::vector<double> sum_re_, sum_im_, sum_re2_, sum_im2_;
    std::vector<double> sum_absw_, sum_absw2_;
    std::vector<long long> rep_count_;
    long long count_ = 0;
};

class HistogramAccumulator {
public:
    HistogramAccumulator() = default;
    HistogramAccumulator(int bins, double lo, double hi)
        : bins_(bins), lo_(lo), hi_(hi), sum_(bins, 0.0), sum2_(bins, 0.0) {}

    void add(double x, double w) {
        if (x < lo_ || x >= hi_) return;
        const int b = static_cast<int>((x - lo_) / (hi_ - lo_) * bins_);
        const int bb = std::min(b, bins_ - 1);
        sum_[bb] += w;
        sum2_[bb] += w * w;
    }

    void merge(const HistogramAccumulator& o) {
        for (int b = 0; b < bins_; ++b) {
            sum_[b] += o.sum_[b];
            sum2_[b] += o.sum2_[b];
        }
        total_weight_ += o.total_weight_;
    }

    // Normalization uses the accumulated total weight so that
    // sum_b density(b) * bin_width = (in-range weight) / (total weight).
    void add_total_weight(double w) { total_weight_ += w; }

    double bin_width() const { return (hi_ - lo_) / bins_; }
    double bin_left(int b) const { return lo_ + b * bin_width(); }
    double density(int b) const {
        return total_weight_ > 0 ? sum_[b] / (total_weight_ * bin_width()) : 0.0;
    }
    double density_stderr(int b, long long n) const {
        if (total_weight_ <= 0 || n < 2) return 0.0;
        const double mean = sum_[b] / n;
        const double var = std::max(0.0, sum2_[b] / n - mean * mean);
        const double scale = n / (total_weight_ * bin_width());
        return scale * std::sqrt(var / (n - 1));
    }
    int bins() const { return bins_; }
    double total_weight() const { return total_weight_; }

    // Strict local maxima with at least `floor_frac` of the peak density.
    std::vector<int> local_maxima(double floor_frac = 0.1) const {
        std::vector<int> out;
        double peak = 0.0;
        for (int b = 0; b < bins_; ++b) peak = std::max(peak, density(b));
        for (int b = 0; b < bins_; ++b) {
            const double d = density(b);
            if (d < floor_frac * peak || d <= 0) continue;
            const double left = b > 0 ? density(b - 1) : -1.0;
            const double right = b + 1 < bins_ ? density(b + 1) : -1.0;
            if (d > left && d >= right) {
                // Merge plateaus: skip if the previous bin was already a maximum.
                if (!out.empty() && out.back() == b - 1 && density(out.back()) == d) continue;
                out.push_back(b);
            }
        }
        return out;
    }

private:
    int bins_ = 0;
    double lo_ = 0.0, hi_ = 1.0;
    std::vector<double> sum_, sum2_;
    double total_weight_ = 0.0;
};

// ---------------------------------------------------------------------------
// TimeSeries
// ---------------------------------------------------------------------------

struct TimeSeries {
    std::vector<double> times;  // a.u.
    std::vector<std::string> names;
    // mean[obs][t] etc.
    std::vector<std::vector<Complex>> mean;
    std::vector<std::vector<double>> stderr_re;
    std::vector<std::vector<double>> stderr_im;
    std::vector<double> ess;    // per time point
    long long trajectories = 0;
    double filtered_fraction = 0.0;   // weight-filter diagnostics
    double filtered_excess = 0.0;     // mean clamped weight magnitude excess
    long long diverged = 0;

    int obs_index(const std::string& name) const {
        for (size_t i = 0; i < names.size(); ++i)
            if (names[i] == name) return static_cast<int>(i);
        throw Error("no observable named '" + name + "'");
    }

    static TimeSeries from_accumulator(const std::vector<double>& times,
                                       const std::vector<std::string>& names,
                                       const Accumulator& acc) {
        TimeSeries ts;
        ts.times = times;
        ts.names = names;
        ts.trajectories = acc.count();
        const int nt = acc.n_times(), no = acc.n_obs();
        ts.mean.assign(no, std::vector<Complex>(nt));
        ts.stderr_re.assign(no, std::vector<double>(nt));
        ts.stderr_im.assign(no, std::vector<double>(nt));
        ts.ess.assign(nt, 0.0);
        for (int t = 0; t < nt; ++t) {
            ts.ess[t] = acc.ess(t);
            for (int o = 0; o < no; ++o) {
                ts.mean[o][t] = acc.mean(t, o);
                acc.stderr_of_mean(t, o, ts.stderr_re[o][t], ts.stderr_im[o][t]);
            }
        }
        return ts;
    }
};

struct Histogram {
    std::vector<double> bin_left;
    std::vector<double> bin_right;
    std::vector<double> density;
    std::vector<double> density_stderr;
    std::string name;

    static Histogram from_accumulator(const HistogramAccumulator& acc, long long n,
                                      const std::string& name) {
        Histogram h;
        h.name = name;
        for (int b = 0; b < acc.bins(); ++b) {
            h.bin_left.push_back(acc.bin_left(b));
            h.bin_right.push_back(acc.bin_left(b) + acc.bin_width());
            h.density.push_back(acc.density(b));
            h.density_stderr.push_back(acc.density_stderr(b, n));
        }
        return h;
    }
};

}  // namespace qcldyn
