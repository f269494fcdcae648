#pragma once

// Trajectory-ensemble map-reduce. Work is split into fixed index chunks claimed
// by a bounded worker pool; each chunk reduces into its own accumulator and
// chunks merge in index order, so results are bit-identical for any thread
// count. Every trajectory draws from counter-based streams keyed by its index.

#include <atomic>
#include <map>
#include <mutex>
#include <thread>

#include "observables.hpp"
#include "rng.hpp"

namespace qcldyn {

struct EnsembleOptions {
    long long trajectories = 1000;
    int steps = 100;
    double dt = 0.05;
    int output_every = 1;
    int threads = 0;             // 0 = hardware concurrency
    int replicates = 1;          // >1 enables low-discrepancy mapping sampling
    uint64_t seed = 1;
    uint64_t bath_seed_offset = 0;
    double filter_bound = 0.0;   // 0 = no weight filter
    double max_diverged_fraction = 1e-3;

    int n_outputs() const { return steps / output_every + 1; }
    void validate() const {
        if (trajectories < 1) throw ConfigError("trajectories must be >= 1");
        if (steps < 1) throw ConfigError("steps must be >= 1");
        if (!(dt > 0)) throw ConfigError("dt must be > 0");
        if (output_every < 1 || steps % output_every != 0)
            throw ConfigError("output_every must divide steps");
        if (replicates < 1) throw ConfigError("replicates must be >= 1");
    }
};

struct RunStats {
    long long diverged = 0;
    long long filtered = 0;
    double filtered_excess = 0.0;

    void merge(const RunStats& o) {
        diverged += o.diverged;
        filtered += o.filtered;
        filtered_excess += o.filtered_excess;
    }
};

// Per-chunk sink handed to kernels at measurement time.
class MeasureSink {
public:
    MeasureSink(Accumulator& acc, std::vector<HistogramAccumulator>& hists, RunStats& stats,
                double filter_bound, int rep)
        : acc_(acc), hists_(hists), stats_(stats), filter_bound_(filter_bound), rep_(rep) {}

    void set_time_index(int t) { t_ = t; }
    int time_index() const { return t_; }

    // Applies the observable-level weight filter and records the contribution.
    void add(int obs, Complex weight, Complex estimator) {
        acc_.add(t_, obs, rep_, filtered_weight(weight) * estimator);
    }
    void add_raw(int obs, Complex contribution) { acc_.add(t_, obs, rep_, contribution); }

    void weight_magnitude(double absw) {
        if (filter_bound_ > 0.0 && absw > filter_bound_) {
            ++stats_.filtered;
            stats_.filtered_excess += absw - filter_bound_;
            absw = filter_bound_;
        }
        acc_.add_weight(t_, absw, rep_);
    }

    void hist_add(int h, double x, double w) { hists_[h].add(x, w); }
    void hist_total(int h, double w) { hists_[h].add_total_weight(w); }

    Complex filtered_weight(Complex w) const {
        if (filter_bound_ <= 0.0) return w;
        const double a = std::abs(w);
        return a > filter_bound_ ? w * (filter_bound_ / a) : w;
    }

private:
    Accumulator& acc_;
    std::vector<HistogramAccumulator>& hists_;
    RunStats& stats_;
    double filter_bound_;
    int rep_;
    int t_ = 0;
};

// Kernel requirements:
//   struct State;
//   void init(State&, long long traj, TrajectoryRng&, const QmcSequence*, uint64_t point) const;
//   void step(State&, int step_index, TrajectoryRng&) const;           // may throw StepDiverged
//   void measure(const State&, MeasureSink&) const;
//   void finalize(const State&, MeasureSink&) const;                   // histogram fills
struct EnsembleResult {
    Accumulator acc;
    std::vector<HistogramAccumulator> hists;
    RunStats stats;
};

template <class Kernel>
EnsembleResult run_ensemble(const Kernel& kernel, const EnsembleOptions& opt, int n_obs,
                            const std::vector<ObservableSpec>& hist_specs) {
    opt.validate();
    const int n_out = opt.n_outputs();
    const long long chunk_size = 256;
    const long long n_chunks = (opt.trajectories + chunk_size - 1) / chunk_size;

    std::vector<QmcSequence> sequences;
    if (opt.replicates > 1) {
        sequences.reserve(opt.replicates);
        for (int r = 0; r < opt.replicates; ++r)
            sequences.emplace_back(opt.seed, r, 4 * kernel.n_states());
    }

    EnsembleResult total;
    total.acc = Accumulator(n_out, n_obs, opt.replicates);
    for (const auto& h : hist_specs) total.hists.emplace_back(h.bins, h.lo, h.hi);

    std::atomic<long long> next_chunk{0};
    std::mutex merge_mutex;
    std::map<long long, EnsembleResult> pending;
    long long next_merge = 0;

    auto worker = [&]() {
        for (;;) {
            const long long c = next_chunk.fetch_add(1);
            if (c >= n_chunks) return;
            EnsembleResult local;
            local.acc = Accumulator(n_out, n_obs, opt.replicates);
            for (const auto& h : hist_specs) local.hists.emplace_back(h.bins, h.lo, h.hi);

            const long long begin = c * chunk_size;
            const long long end = std::min<long long>(begin + chunk_size, opt.trajectories);
            typename Kernel::State state;
            for (long long traj = begin; traj < end; ++traj) {
                TrajectoryRng rng(opt.seed, opt.bath_seed_offset, static_cast<uint64_t>(traj));
                const int rep = opt.replicates > 1
                                    ? static_cast<int>(traj % opt.replicates)
                                    : 0;
                const QmcSequence* seq = opt.replicates > 1 ? &sequences[rep] : nullptr;
                const uint64_t point = opt.replicates > 1
                                           ? static_cast<uint64_t>(traj / opt.replicates)
                                           : 0;
                MeasureSink sink(local.acc, local.hists, local.stats, opt.filter_bound, rep);
                try {
                    kernel.init(state, traj, rng, seq, point);
                    sink.set_time_index(0);
                    kernel.measure(state, sink);
                    int out_idx = 1;
                    for (int s = 0; s < opt.steps; ++s) {
                        kernel.step(state, s, rng);
                        if ((s + 1) % opt.output_every == 0) {
                            sink.set_time_index(out_idx++);
                            kernel.measure(state, sink);
                        }
                    }
                    kernel.finalize(state, sink);
                    local.acc.count_trajectory();
                } catch (const StepDiverged&) {
                    ++local.stats.diverged;
                    local.acc.count_trajectory();
                }
            }

            std::lock_guard<std::mutex> lock(merge_mutex);
            pending.emplace(c, std::move(local));
            while (!pending.empty() && pending.begin()->first == next_merge) {
                auto& r = pending.begin()->second;
                total.acc.merge(r.acc);
                for (size_t h = 0; h < total.hists.size(); ++h) total.hists[h].merge(r.hists[h]);
                total.stats.merge(r.stats);
                pending.erase(pending.begin());
                ++next_merge;
            }
        }
    };

    int n_threads = opt.threads > 0 ? opt.threads
                                    : static_cast<int>(std::thread::hardware_concurrency());
    if (n_threads < 1) n_threads = 1;
    n_threads = static_cast<int>(std::min<long long>(n_threads, n_chunks));
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(n_threads);
        for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    if (total.stats.diverged >
        opt.max_diverged_fraction * static_cast<double>(opt.trajectories))
        throw StepDiverged(std::to_string(total.stats.diverged) +
                           " trajectories diverged (above threshold)");
    return total;
}

inline std::vector<double> output_times(const EnsembleOptions& opt) {
    std::vector<double> t(opt.n_outputs());
    for (int i = 0; i < opt.n_outputs(); ++i) t[i] = i * opt.output_every * opt.dt;
    return t;
}

}  // namespace qcldyn
