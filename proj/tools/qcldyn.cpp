// Command-line front end: run / compare / list-models / list-solvers.
// Exit codes: 0 success, 2 configuration error, 3 numerical failure.

#include <CLI11.hpp>
#include <iostream>

#include "qcldyn/experiment.hpp"

namespace {

using namespace qcldyn;

void apply_overrides(Config& cfg, long long seed, long long trajectories, long long threads,
                     const std::string& output, long long jumps) {
    if (seed >= 0) cfg.set("run", "seed", std::to_string(seed));
    if (trajectories > 0) cfg.set("solver", "trajectories", std::to_string(trajectories));
    if (threads >= 0) cfg.set("run", "threads", std::to_string(threads));
    if (!output.empty()) cfg.set("run", "output", output);
    if (jumps >= 0) cfg.set("solver", "jump_slots", std::to_string(jumps));
}

int do_run(const std::string& path, const std::string& solver, long long seed,
           long long trajectories, long long threads, const std::string& output,
           long long jumps) {
    Config cfg = Config::parse_file(path);
    apply_overrides(cfg, seed, trajectories, threads, output, jumps);
    if (!solver.empty()) cfg.set("solver", "name", solver);
    run_experiment(cfg, true, &std::cout);
    return 0;
}

int do_compare(const std::string& path, const std::string& solver_a,
               const std::string& solver_b, long long seed, long long trajectories,
               long long threads) {
    Config cfg = Config::parse_file(path);
    apply_overrides(cfg, seed, trajectories, threads, "", -1);
    const DiabaticModel model = build_model(cfg);
    cfg.set("solver", "name", solver_a);
    const SolverOutput a = run_solver(cfg, model, solver_a);
    const SolverOutput b = run_solver(cfg, model, solver_b);
    std::cout << "observable,max_abs_deviation,max_joint_stderr\n";
    for (size_t o = 0; o < a.series.names.size(); ++o) {
        double dev = 0.0, joint = 0.0;
        for (size_t t = 0; t < a.series.times.size(); ++t) {
            dev = std::max(dev,
                           std::abs(a.series.mean[o][t].real() - b.series.mean[o][t].real()));
            const double sa = a.series.stderr_re[o][t], sb = b.series.stderr_re[o][t];
            joint = std::max(joint, std::sqrt(sa * sa + sb * sb));
        }
        std::cout << a.series.names[o] << "," << format_g(dev) << "," << format_g(joint)
                  << "\n";
    }
    return 0;
}

void list_models() {
    std::cout << "spin_boson: eps=0 omega=0.4 xi=0.09 omega_c=1 omega_max=3 n_bath=100 "
                 "beta=0.25 mass=1   # units: hartree / a.u.\n";
    std::cout << "tully_sac: a=0.01 b=1.6 c=0.005 d=1 mass=2000   # units: a.u.\n";
    std::cout << "flv: card=" << data_dir()
              << "/flv.card gamma=0.01   # card keys documented in the card\n";
    std::cout << "fmo: card=" << data_dir()
              << "/fmo.card modes_per_site=60   # card in cm^-1 / fs / K\n";
}

void list_solvers() {
    std::cout << "tbsh: dt steps trajectories filter_bound eps_degen\n";
    std::cout << "pbme: dt steps trajectories replicates trace_control\n";
    std::cout << "fbts: dt steps trajectories replicates trace_control filter_bound\n";
    std::cout << "jfbts: fbts options + jump_slots jump_prob jump_kernel\n";
    std::cout << "ehrenfest: dt steps trajectories\n";
    std::cout << "fssh: dt steps trajectories\n";
    std::cout << "grid-oracle: dt steps grid_points x_min x_max boundary_tol\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"qcldyn - trajectory solvers for open quantum-classical dynamics"};
    app.require_subcommand(1);

    std::string config_path, solver, output, solver_a, solver_b;
    long long seed = -1, trajectories = -1, threads = -1, jumps = -1;

    auto* run = app.add_subcommand("run", "run one experiment from a config file");
    run->add_option("config", config_path, "config file")->required();
    run->add_option("--solver", solver, "override solver.name");
    run->add_option("--seed", seed, "override run.seed");
    run->add_option("--trajectories", trajectories, "override solver.trajectories");
    run->add_option("--threads", threads, "override run.threads");
    run->add_option("--output", output, "override run.output");
    run->add_option("--jumps", jumps, "override solver.jump_slots (jfbts)");

    auto* cmp = app.add_subcommand("compare", "run two solvers and report deviations");
    cmp->add_option("config", config_path, "config file")->required();
    cmp->add_option("solverA", solver_a, "first solver")->required();
    cmp->add_option("solverB", solver_b, "second solver")->required();
    cmp->add_option("--seed", seed, "override run.seed");
    cmp->add_option("--trajectories", trajectories, "override solver.trajectories");
    cmp->add_option("--threads", threads, "override run.threads");

    auto* lm = app.add_subcommand("list-models", "model inventory with parameter schema");
    auto* ls = app.add_subcommand("list-solvers", "solver inventory with option schema");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed())
            return do_run(config_path, solver, seed, trajectories, threads, output, jumps);
        if (cmp->parsed())
            return do_compare(config_path, solver_a, solver_b, seed, trajectories, threads);
        if (lm->parsed()) {
            list_models();
            return 0;
        }
        if (ls->parsed()) {
            list_solvers();
            return 0;
        }
    } catch (const qcldyn::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const qcldyn::StepDiverged& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
