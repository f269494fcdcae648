#pragma once

// Experiment orchestration: build a model, initial conditions, observables and
// a solver from a Config; run; serialize CSV output. This is the layer behind
// the command-line tool and the acceptance suite.

#include <chrono>
#include <cstdio>
#include <filesystem>

#include "config.hpp"
#include "ensemble.hpp"
#include "models.hpp"
#include "solvers/grid.hpp"
#include "solvers/mapping.hpp"
#include "solvers/reference.hpp"
#include "solvers/tbsh.hpp"

namespace qcldyn {

inline const std::vector<std::string>& solver_names() {
    static const std::vector<std::string> names = {
        "tbsh", "pbme", "fbts", "jfbts", "ehrenfest", "fssh", "grid-oracle"};
    return names;
}

inline const std::vector<std::string>& model_names() {
    static const std::vector<std::string> names = {"spin_boson", "tully_sac", "flv", "fmo"};
    return names;
}

inline DiabaticModel build_model(const Config& cfg) {
    const std::string name = cfg.require("model", "name");
    if (name == "spin_boson") {
        SpinBosonParams p;
        p.eps = cfg.get_double("model", "eps", p.eps);
        p.omega = cfg.get_double("model", "omega", p.omega);
        p.xi = cfg.get_double("model", "xi", p.xi);
        p.omega_c = cfg.get_double("model", "omega_c", p.omega_c);
        p.omega_max = cfg.get_double("model", "omega_max", p.omega_max);
        p.n_bath = static_cast<int>(cfg.get_int("model", "n_bath", p.n_bath));
        p.beta = cfg.get_double("model", "beta", p.beta);
        p.mass = cfg.get_double("model", "mass", p.mass);
        return build_spin_boson(p);
    }
    if (name == "tully_sac") {
        TullyParams p;
        p.a = cfg.get_double("model", "a", p.a);
        p.b = cfg.get_double("model", "b", p.b);
        p.c = cfg.get_double("model", "c", p.c);
        p.d = cfg.get_double("model", "d", p.d);
        p.mass = cfg.get_double("model", "mass", p.mass);
        return build_tully_sac(p);
    }
    if (name == "flv") {
        const std::string card = cfg.get("model", "card", data_dir() + "/flv.card");
        FLVParams p = load_flv_card(card);
        p.gamma = cfg.get_double("model", "gamma", p.gamma);
        return build_flv(p);
    }
    if (name == "fmo") {
        const std::string card = cfg.get("model", "card", data_dir() + "/fmo.card");
        FMOParams p = load_fmo_card(card);
        p.modes_per_site =
            static_cast<int>(cfg.get_int("model", "modes_per_site", p.modes_per_site));
        return build_fmo(p);
    }
    throw ConfigError("unknown model '" + name + "' (see list-models)");
}

inline BathSamplerSpec build_bath_sampler(const Config& cfg, const DiabaticModel& model) {
    BathSamplerSpec spec;
    const bool has_modes = !model.bath_modes.empty();
    const std::string kind =
        cfg.get("initial", "bath", has_modes ? "wigner" : "wavepacket");
    if (kind == "wigner")
        spec.kind = BathSampling::wigner;
    else if (kind == "classical")
        spec.kind = BathSampling::boltzmann;
    else if (kind == "wavepacket")
        spec.kind = BathSampling::wavepacket;
    else
        throw ConfigError("initial.bath must be wigner, classical or wavepacket");
    spec.beta = cfg.get_double("initial", "beta", 0.0);
    if (spec.kind == BathSampling::wavepacket) {
        WavepacketSpec wp = model.wavepacket;
        if (cfg.has("initial", "r0")) {
            const auto v = cfg.get_vector("initial", "r0");
            wp.center = Eigen::Map<const Vector>(v.data(), v.size());
        }
        if (cfg.has("initial", "p0")) {
            const auto v = cfg.get_vector("initial", "p0");
            wp.momentum = Eigen::Map<const Vector>(v.data(), v.size());
        }
        if (cfg.has("initial", "sigma")) {
            const auto v = cfg.get_vector("initial", "sigma");
            wp.sigma_r = Eigen::Map<const Vector>(v.data(), v.size());
        }
        if (wp.center.size() != model.n_bath || wp.momentum.size() != model.n_bath ||
            wp.sigma_r.size() != model.n_bath)
            throw ConfigError("wavepacket r0/p0/sigma must match the bath dimension");
        spec.wavepacket = wp;
    }
    return spec;
}

inline std::vector<ObservableSpec> build_observables(const Config& cfg, int n_states) {
    const std::string list = cfg.get("observables", "obs", n_states == 2 ? "sz" : "pop:1");
    std::vector<ObservableSpec> specs;
    std::string token;
    auto flush = [&]() {
        if (token.empty()) return;
        for (auto& s : parse_observable(token)) {
            if (s.kind == ObservableSpec::Kind::matrix) {
                // matrix:FILE -> Hermitian matrix from whitespace-separated text.
            }
            specs.push_back(std::move(s));
        }
        token.clear();
    };
    for (char c : list) {
        if (c == ',' || c == ';') {
            flush();
        } else {
            token.push_back(c);
        }
    }
    flush();
    if (specs.empty()) throw ConfigError("observables.obs is empty");
    // Validate against the model dimension early.
    for (const auto& s : specs) {
        if (s.is_histogram()) continue;
        if (s.kind == ObservableSpec::Kind::population &&
            s.basis == ObservableSpec::Basis::adiabatic) {
            if (s.state < 0 || s.state >= n_states)
                throw ConfigError("adiabatic population index out of range");
            continue;
        }
        (void)s.matrix_subsystem(n_states, nullptr);
    }
    return specs;
}

inline EnsembleOptions build_ensemble_options(const Config& cfg) {
    EnsembleOptions opt;
    opt.dt = cfg.get_double("solver", "dt", 0.05);
    opt.steps = static_cast<int>(cfg.get_int("solver", "steps", 200));
    opt.trajectories = cfg.get_int("solver", "trajectories", 1000);
    opt.output_every = static_cast<int>(cfg.get_int("solver", "output_every", 1));
    opt.threads = static_cast<int>(cfg.get_int("run", "threads", 0));
    opt.replicates = static_cast<int>(cfg.get_int("solver", "replicates", 1));
    opt.seed = static_cast<uint64_t>(cfg.get_int("run", "seed", 1));
    opt.bath_seed_offset = static_cast<uint64_t>(cfg.get_int("run", "bath_seed_offset", 0));
    opt.filter_bound = cfg.get_double("solver", "filter_bound", 0.0);
    opt.max_diverged_fraction = cfg.get_double("solver", "max_diverged_fraction", 1e-3);
    opt.validate();
    return opt;
}

struct SolverOutput {
    TimeSeries series;
    std::vector<Histogram> histograms;
    RunStats stats;
    double wall_seconds = 0.0;
};

template <class Kernel, class Cfg>
SolverOutput run_kernel(const Cfg& scfg, const EnsembleOptions& opt) {
    Kernel kernel(scfg, opt);
    std::vector<std::string> names;
    ObservablePlan plan(scfg.observables, kernel.n_states());
    for (const auto& e : plan.entries) names.push_back(e.spec.name);
    const auto t0 = std::chrono::steady_clock::now();
    EnsembleResult r = run_ensemble(kernel, opt, kernel.n_series(), kernel.histograms());
    SolverOutput out;
    out.series = TimeSeries::from_accumulator(output_times(opt), names, r.acc);
    out.series.diverged = r.stats.diverged;
    if (out.series.trajectories > 0) {
        const double n_eval = static_cast<double>(out.series.trajectories) *
                              static_cast<double>(opt.n_outputs());
        out.series.filtered_fraction = r.stats.filtered / std::max(1.0, n_eval);
        out.series.filtered_excess = r.stats.filtered_excess / std::max(1.0, n_eval);
    }
    for (size_t h = 0; h < r.hists.size(); ++h)
        out.histograms.push_back(Histogram::from_accumulator(
            r.hists[h], out.series.trajectories, kernel.histograms()[h].name));
    out.stats = r.stats;
    out.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

inline SolverOutput run_solver(const Config& cfg, const DiabaticModel& model,
                               const std::string& solver_name) {
    const EnsembleOptions opt = build_ensemble_options(cfg);
    const auto observables = build_observables(cfg, model.n_states);
    const InitialState initial = parse_initial_state(cfg.get("initial", "state", "1"));
    const BathSamplerSpec bath = build_bath_sampler(cfg, model);

    if (solver_name == "fbts" || solver_name == "jfbts" || solver_name == "pbme") {
        MappingSolverConfig scfg;
        scfg.model = &model;
        scfg.bath = bath;
        scfg.initial = initial;
        scfg.observables = observables;
        scfg.trace_control = cfg.get_bool("solver", "trace_control", true);
        if (solver_name == "jfbts") {
            scfg.jumps.slots = static_cast<int>(cfg.get_int("solver", "jump_slots", 0));
            scfg.jumps.prob = cfg.get_double("solver", "jump_prob", 1.0);
            const std::string kernel = cfg.get("solver", "jump_kernel", "conventional");
            if (kernel == "conventional")
                scfg.jumps.kernel = JumpSchedule::Kernel::conventional;
            else if (kernel == "as-printed")
                scfg.jumps.kernel = JumpSchedule::Kernel::as_printed;
            else
                throw ConfigError("jump_kernel must be conventional or as-printed");
            const std::string resampler = cfg.get("solver", "jump_resampler", "coherent");
            if (resampler == "coherent")
                scfg.jumps.resampler = JumpSchedule::Resampler::coherent;
            else if (resampler == "projector")
                scfg.jumps.resampler = JumpSchedule::Resampler::projector;
            else
                throw ConfigError("jump_resampler must be coherent or projector");
        }
        if (solver_name == "pbme") return run_kernel<PbmeKernel>(scfg, opt);
        return run_kernel<FbtsKernel>(scfg, opt);
    }
    if (solver_name == "tbsh") {
        TbshSolverConfig scfg;
        scfg.model = &model;
        scfg.bath = bath;
        scfg.initial = initial;
        scfg.observables = observables;
        scfg.eps_degen = cfg.get_double("solver", "eps_degen", 1e-10);
        return run_kernel<TbshKernel>(scfg, opt);
    }
    if (solver_name == "ehrenfest" || solver_name == "fssh") {
        ReferenceSolverConfig scfg;
        scfg.model = &model;
        scfg.bath = bath;
        scfg.initial = initial;
        scfg.observables = observables;
        scfg.eps_degen = cfg.get_double("solver", "eps_degen", 1e-10);
        if (solver_name == "fssh") return run_kernel<FsshKernel>(scfg, opt);
        return run_kernel<EhrenfestKernel>(scfg, opt);
    }
    if (solver_name == "grid-oracle") {
        GridOracleConfig gcfg;
        gcfg.model = &model;
        gcfg.observables = observables;
        gcfg.x_min = cfg.get_double("solver", "x_min", -25.0);
        gcfg.x_max = cfg.get_double("solver", "x_max", 25.0);
        gcfg.n_points = static_cast<int>(cfg.get_int("solver", "grid_points", 4096));
        gcfg.boundary_tol = cfg.get_double("solver", "boundary_tol", 1e-10);
        if (initial.kind != InitialState::Kind::pure)
            throw ConfigError("grid-oracle needs a pure initial state");
        gcfg.initial_state = initial.state;
        if (bath.kind == BathSampling::wavepacket && bath.wavepacket.center.size()) {
            gcfg.packet_center = bath.wavepacket.center;
            gcfg.packet_momentum = bath.wavepacket.momentum;
            gcfg.packet_sigma = bath.wavepacket.sigma_r;
        }
        GridOracle oracle(gcfg);
        const auto t0 = std::chrono::steady_clock::now();
        GridOracleResult r = oracle.run(opt.dt, opt.steps, opt.output_every);
        SolverOutput out;
        out.series = std::move(r.series);
        out.histograms = std::move(r.histograms);
        out.wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        return out;
    }
    throw ConfigError("unknown solver '" + solver_name + "' (see list-solvers)");
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

inline std::string format_g(double v) {
    char buf[40];
    snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

inline void write_csv(const Config& cfg, const TimeSeries& ts, const std::string& path,
                      const std::string& units) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open output file " + path);
    const double tscale = units == "fs" ? 1.0 / units::fs : 1.0;
    out << "# resolved-config\n";
    std::istringstream cfg_text(cfg.serialize());
    std::string line;
    while (std::getline(cfg_text, line)) out << "# " << line << "\n";
    out << "time";
    for (const auto& n : ts.names) out << "," << n << "_mean," << n << "_stderr";
    out << "\n";
    for (size_t t = 0; t < ts.times.size(); ++t) {
        out << format_g(ts.times[t] * tscale);
        for (size_t o = 0; o < ts.names.size(); ++o)
            out << "," << format_g(ts.mean[o][t].real()) << "," << format_g(ts.stderr_re[o][t]);
        out << "\n";
    }
}

inline void write_histogram(const Histogram& h, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open output file " + path);
    out << "bin_left,bin_right,density\n";
    for (size_t b = 0; b < h.density.size(); ++b)
        out << format_g(h.bin_left[b]) << "," << format_g(h.bin_right[b]) << ","
            << format_g(h.density[b]) << "\n";
}

inline std::string histogram_path(const std::string& csv_path, size_t index, size_t count) {
    std::string stem = csv_path;
    if (stem.size() > 4 && stem.substr(stem.size() - 4) == ".csv")
        stem = stem.substr(0, stem.size() - 4);
    if (count > 1) stem += "." + std::to_string(index + 1);
    return stem + ".hist.csv";
}

// One full `run` invocation; returns the output for further inspection.
inline SolverOutput run_experiment(Config& cfg, bool write_outputs = true,
                                   std::ostream* log = nullptr) {
    const DiabaticModel model = build_model(cfg);
    const std::string solver = cfg.require("solver", "name");
    const std::string output = cfg.get("run", "output", "qcldyn_out.csv");
    const std::string units = cfg.get("run", "units", "au");
    if (units != "au" && units != "fs") throw ConfigError("run.units must be au or fs");
    SolverOutput out = run_solver(cfg, model, solver);
    if (write_outputs) {
        write_csv(cfg, out.series, output, units);
        for (size_t h = 0; h < out.histograms.size(); ++h)
            write_histogram(out.histograms[h], histogram_path(output, h, out.histograms.size()));
    }
    if (log) {
        *log << "solver " << solver << " on " << model.name << ": "
             << out.series.trajectories << " trajectories, wall "
             << format_g(out.wall_seconds) << " s\n";
        *log << "diverged " << out.stats.diverged << ", filtered contributions "
             << out.stats.filtered << " (clamped weight mass "
             << format_g(out.stats.filtered_excess) << ")\n";
        if (write_outputs) *log << "wrote " << output << "\n";
    }
    return out;
}

}  // namespace qcldyn
