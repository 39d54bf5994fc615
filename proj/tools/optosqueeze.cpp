// Command-line front end: optimization runs, forward simulations, gradient and
// oracle checks, parameter sweeps and plot-data export.

#include "optosqueeze/io.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <numbers>

using namespace optosqueeze;
namespace fs = std::filesystem;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitAcceptance = 4;

constexpr double kDegree = std::numbers::pi / 180.0;

struct Common {
    std::string config_path;
    std::string out_dir;
    std::string pulse_path;
    std::vector<std::string> overrides; // key=value pairs
};

RunConfig load(const Common& c) {
    RunConfig cfg = c.config_path.empty() ? RunConfig{} : load_config(c.config_path);
    for (const auto& kv : c.overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw Error(ErrorKind::Config, "--set expects key=value, got " + kv, kv);
        apply_setting(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    }
    return cfg;
}

fs::path out_path(const Common& c, const RunConfig& cfg, const std::string& command) {
    return c.out_dir.empty() ? fs::path(cfg.out_dir) / command : fs::path(c.out_dir);
}

Pulse load_pulse(const Common& c, const RunConfig& cfg) {
    const std::string path = c.pulse_path.empty() ? cfg.pulse_file : c.pulse_path;
    if (path.empty()) throw Error(ErrorKind::Config, "a pulse file is required (--pulse)", "pulse");
    const LoadedPulse lp = read_pulse_csv(path, cfg.n_bins);
    for (const auto& w : lp.warnings) std::cerr << "warning: " << w << "\n";
    validate_pulse(lp.pulse);
    return lp.pulse;
}

void add_common(CLI::App* cmd, Common& c, bool pulse, bool config_required) {
    auto* opt = cmd->add_option("--config", c.config_path, "Run configuration (key = value)");
    if (config_required) opt->required();
    cmd->add_option("--out", c.out_dir, "Output directory");
    cmd->add_option("--set", c.overrides, "Override a config key (key=value), repeatable");
    if (pulse) cmd->add_option("--pulse", c.pulse_path, "Pulse CSV (t,omega,phi)")->required();
}

void print_line(const std::string& s) { std::cout << s << std::endl; }

std::string fmt(double v) { return format_number(v); }

// ------------------------------------------------------------------ commands

int cmd_optimize(const Common& c, const std::optional<std::uint64_t>& seed, const std::string& mode,
                 const std::optional<double>& target_db) {
    RunConfig cfg = load(c);
    if (seed) cfg.optimizer.seed = *seed;
    if (!mode.empty()) cfg.optimizer.grad_mode = parse_gradient_mode(mode);
    if (target_db) {
        cfg.optimizer.target_db = *target_db;
        cfg.optimizer.epsilon = 0.0;
    }
    validate_run_config(cfg);

    OptimizeOptions opts;
    opts.simulation = cfg.simulation();
    opts.progress = [](const IterationRecord& r) {
        if (r.iteration % 100 == 0) {
            std::cerr << "iter " << r.iteration << " loss " << r.loss << " S_b " << squeezing_degree(r.loss) << "\n";
        }
    };
    const OptimizationResult res = optimize(cfg.params, cfg.optimizer, cfg.t_final, cfg.resolved_bins(), opts);

    RunWriter w(out_path(c, cfg, "optimize"));
    const Simulation sim = simulate(res.pulse, cfg.params, opts.simulation);
    w.write("pulse.csv", pulse_csv(res.pulse));
    w.write("loss_history.csv", loss_history_csv(res));
    w.write("squeezing.csv", squeezing_csv(squeezing_trace(sim.moments, cfg.optimizer.theta, cfg.trace_stride)));
    w.write("config.txt", serialize_config(cfg));
    w.write("result.json", result_json(cfg, res));
    w.finalize(cfg, "optimize", cfg.optimizer.seed);

    print_line("status " + std::string(to_string(res.status)) + " iterations " + std::to_string(res.iterations) +
               " best_loss " + fmt(res.best_loss) + " best_db " + fmt(squeezing_degree(res.best_loss)) +
               " mean_phonon " + fmt(res.final_report.mean_phonon));
    print_line("wrote " + w.dir().string());
    return res.status == OptimizationStatus::Converged ? 0 : kExitAcceptance;
}

int cmd_simulate(const Common& c) {
    RunConfig cfg = load(c);
    validate_run_config(cfg);
    const Pulse pulse = load_pulse(c, cfg);
    const Simulation sim = simulate(pulse, cfg.params, cfg.simulation());
    const auto trace = squeezing_trace(sim.moments, cfg.optimizer.theta, cfg.trace_stride);

    RunWriter w(out_path(c, cfg, "simulate"));
    w.write("trajectory.csv", trajectory_csv(sim, cfg.trace_stride));
    w.write("squeezing.csv", squeezing_csv(trace));
    w.finalize(cfg, "simulate", cfg.optimizer.seed);
    const auto& last = trace.back();
    print_line("final S_b " + fmt(last.degree_db) + " variance " + fmt(last.variance) + " mean_phonon " +
               fmt(last.mean_phonon));
    print_line("wrote " + w.dir().string());
    return 0;
}

int cmd_grad_check(const Common& c, std::size_t bins, double t_final) {
    RunConfig cfg = load(c);
    validate_run_config(cfg);
    const Pulse pulse = random_smooth_pulse(cfg.optimizer, t_final, bins);
    const LossWeights w = LossWeights::quadrature(cfg.optimizer.theta);
    const SimulationOptions sim = cfg.simulation();

    const ControlGradient fd = finite_difference_gradient(pulse, cfg.params, w, 1e-4, sim);
    const ControlGradient full = loss_gradient(pulse, cfg.params, w, GradientMode::FullChain, sim);
    const ControlGradient pointwise = loss_gradient(pulse, cfg.params, w, GradientMode::PaperPointwise, sim);
    const GradientComparison cf = compare(full, fd);
    const GradientComparison cp = compare(pointwise, fd);

    RunWriter out(out_path(c, cfg, "grad-check"));
    out.write("gradient_full.csv", gradient_csv(full, pulse));
    out.write("gradient_pointwise.csv", gradient_csv(pointwise, pulse));
    out.write("gradient_fd.csv", gradient_csv(fd, pulse));
    out.write("pulse.csv", pulse_csv(pulse));
    out.finalize(cfg, "grad-check", cfg.optimizer.seed);

    print_line("full-chain  max_rel_error " + fmt(cf.max_rel_error) + " cosine " + fmt(cf.cosine));
    print_line("paper-pointwise max_rel_error " + fmt(cp.max_rel_error) + " cosine " + fmt(cp.cosine));
    const bool ok = cf.max_rel_error <= 1e-4;
    print_line(ok ? "PASS full-chain within 1e-4" : "FAIL full-chain exceeds 1e-4");
    return ok ? 0 : kExitAcceptance;
}

void write_optimization_point(RunWriter& w, const std::string& dir, const SweepRecord& rec, const RunConfig& cfg) {
    if (!rec.result) return;
    w.write(dir + "/pulse.csv", pulse_csv(rec.result->pulse));
    w.write(dir + "/loss_history.csv", loss_history_csv(*rec.result));
    w.write(dir + "/squeezing.csv", squeezing_csv(rec.trace));
    w.write(dir + "/result.json", result_json(cfg, *rec.result));
}

int cmd_sweep(const Common& c, const std::string& kind) {
    RunConfig cfg = load(c);
    validate_run_config(cfg);
    SweepOptions opts;
    opts.optimize.simulation = cfg.simulation();
    opts.trace_stride = cfg.trace_stride;
    const fs::path root = c.out_dir.empty() ? fs::path(cfg.out_dir) / kind : fs::path(c.out_dir);
    RunWriter w(root);

    if (kind == "angle" || kind == "kappa") {
        std::vector<SweepRecord> records;
        if (kind == "angle") {
            std::vector<double> thetas;
            for (double d : cfg.thetas_deg) thetas.push_back(d * kDegree);
            records = angle_sweep(cfg.params, cfg.optimizer, cfg.t_final, cfg.resolved_bins(), thetas, opts);
        } else {
            records = sideband_sweep(cfg.params, cfg.optimizer, cfg.t_final, cfg.resolved_bins(), cfg.kappas, opts);
        }
        CsvTable summary({kind == "angle" ? "theta_deg" : "kappa", "ok", "converged", "best_loss", "best_db",
                          "iterations", "max_abs_omega", "max_abs_phi", "final_mean_phonon", "seed"});
        for (std::size_t i = 0; i < records.size(); ++i) {
            const SweepRecord& r = records[i];
            const double key = kind == "angle" ? cfg.thetas_deg[i] : r.value;
            const std::string dir = "point_" + std::to_string(i);
            write_optimization_point(w, dir, r, cfg);
            if (!r.ok) std::cerr << "point " << i << " failed: " << r.error << "\n";
            const bool converged = r.result && r.result->status == OptimizationStatus::Converged;
            summary.add_row({key, r.ok ? 1.0 : 0.0, converged ? 1.0 : 0.0, r.result ? r.result->best_loss : NAN,
                             r.result ? squeezing_degree(r.result->best_loss) : NAN,
                             r.result ? static_cast<double>(r.result->iterations) : NAN, r.max_abs_omega,
                             r.max_abs_phi, r.report ? r.report->mean_phonon : NAN, static_cast<double>(r.seed)});
            print_line(kind + " " + fmt(key) + (r.ok ? " best_db " + fmt(r.report->degree_db) : " failed") +
                       " max|omega| " + fmt(r.max_abs_omega) + " max|phi| " + fmt(r.max_abs_phi));
        }
        w.write("summary.csv", summary.str());
    } else if (kind == "eta") {
        const Pulse pulse = load_pulse(c, cfg);
        CsvTable summary({"channel", "eta", "S_b", "variance", "mean_phonon"});
        for (const auto channel : {ControlChannel::Amplitude, ControlChannel::Phase}) {
            const auto recs = deviation_sweep(pulse, cfg.params, cfg.optimizer.theta, channel, cfg.etas,
                                              cfg.simulation());
            const double ch = channel == ControlChannel::Amplitude ? 0.0 : 1.0;
            for (std::size_t i = 0; i < recs.size(); ++i) {
                const auto& r = recs[i];
                if (!r.ok) {
                    std::cerr << r.key << " " << r.value << " failed: " << r.error << "\n";
                    continue;
                }
                summary.add_row({ch, r.value, r.report->degree_db, r.report->variance, r.report->mean_phonon});
                CsvTable point({"eta", "S_b", "variance", "mean_phonon"});
                point.add_row({r.value, r.report->degree_db, r.report->variance, r.report->mean_phonon});
                w.write(r.key + "_" + std::to_string(i) + "/point.csv", point.str());
                print_line(r.key + " " + fmt(r.value) + " S_b " + fmt(r.report->degree_db));
            }
        }
        w.write("summary.csv", summary.str());
    } else {
        throw Error(ErrorKind::Config, "unknown sweep '" + kind + "' (angle, kappa or eta)", "sweep");
    }
    w.finalize(cfg, "sweep " + kind, cfg.optimizer.seed);
    print_line("wrote " + w.dir().string());
    return 0;
}

int cmd_decay(const Common& c, double t_end) {
    RunConfig cfg = load(c);
    validate_run_config(cfg);
    const Pulse pulse = load_pulse(c, cfg);
    const DecayTrace trace = free_decay(pulse, cfg.params, cfg.optimizer.theta, t_end, cfg.simulation(),
                                        cfg.trace_stride);
    RunWriter w(out_path(c, cfg, "decay"));
    w.write("decay.csv", decay_csv(trace));
    w.finalize(cfg, "decay", cfg.optimizer.seed);
    print_line("S_b(T) " + fmt(trace.corotating_db.front()) + " S_b(t_end) co-rotating " +
               fmt(trace.corotating_db.back()) + " best " + fmt(trace.best_db.back()));
    print_line("wrote " + w.dir().string());
    return 0;
}

int cmd_noise(const Common& c, double sigma_omega, double sigma_phi, std::size_t trials,
              const std::optional<std::uint64_t>& seed) {
    RunConfig cfg = load(c);
    if (seed) cfg.optimizer.seed = *seed;
    validate_run_config(cfg);
    const Pulse pulse = load_pulse(c, cfg);
    const NoiseTrials nt = noise_trials(pulse, cfg.params, cfg.optimizer.theta, sigma_omega, sigma_phi, trials,
                                        cfg.optimizer.seed, cfg.simulation(), cfg.trace_stride);
    RunWriter w(out_path(c, cfg, "noise"));
    w.write("noise.csv", noise_csv(nt));
    CsvTable summary({"trial", "S_b_final", "deviation"});
    for (std::size_t i = 0; i < nt.final_db.size(); ++i) {
        summary.add_row({static_cast<double>(i), nt.final_db[i], nt.final_db[i] - nt.baseline_final_db});
    }
    w.write("summary.csv", summary.str());
    w.finalize(cfg, "noise", cfg.optimizer.seed);
    print_line("baseline S_b(T) " + fmt(nt.baseline_final_db) + " mean |deviation| " + fmt(nt.mean_abs_deviation));
    print_line("wrote " + w.dir().string());
    return 0;
}

int cmd_wigner(const Common& c, double at_time) {
    RunConfig cfg = load(c);
    validate_run_config(cfg);
    const Pulse pulse = load_pulse(c, cfg);
    if (!(at_time >= 0.0)) throw Error(ErrorKind::Config, "--at-time must be >= 0", "at-time");
    MomentVector x;
    double t_used = at_time;
    if (at_time <= pulse.t_final) {
        const Simulation sim = simulate(pulse, cfg.params, cfg.simulation());
        const auto i = static_cast<std::size_t>(std::llround(at_time / sim.moments.grid.dt()));
        x = sim.moments.moments[std::min(i, sim.moments.moments.size() - 1)];
        t_used = sim.moments.grid.time(std::min(i, sim.moments.moments.size() - 1));
    } else {
        const Simulation sim = simulate(pulse, cfg.params, cfg.simulation());
        const Pulse off = Pulse::zero(at_time - pulse.t_final, std::max<std::size_t>(
            2, static_cast<std::size_t>(std::llround((at_time - pulse.t_final) / pulse.bin_width()))));
        const auto mf = integrate_meanfield(off, cfg.params, sim.meanfield.final_state(), cfg.simulation().integrator,
                                            pulse.t_final);
        x = final_moments(mf, cfg.params, sim.moments.final_moments());
    }
    const CovarianceMatrix v = checked_covariance(x);
    WignerGridSpec spec;
    spec.points = cfg.wigner_points;
    const WignerField field = wigner(mechanical_block(v), spec);
    RunWriter w(out_path(c, cfg, "wigner"));
    w.write("wigner.csv", wigner_csv(field));
    w.finalize(cfg, "wigner", cfg.optimizer.seed);
    print_line("t " + fmt(t_used) + " V33 " + fmt(v(2, 2)) + " V44 " + fmt(v(3, 3)) + " V34 " + fmt(v(2, 3)) +
               " integral " + fmt(field.integral()));
    print_line("wrote " + w.dir().string());
    return 0;
}

int cmd_oracle_check(const Common& c) {
    RunConfig cfg = load(c);
    validate_run_config(cfg);
    SystemParams p = cfg.params;
    p.n_bar_m = cfg.oracle_n_bar;
    const Pulse pulse = validation_pulse(cfg.oracle_t_final, cfg.oracle_bins, cfg.oracle_peak_omega);
    const OracleComparison cmp = compare_with_oracle(pulse, p, cfg.fock, cfg.simulation());
    for (const auto& warning : cmp.reference.warnings) std::cerr << "warning: " << warning << "\n";

    RunWriter w(out_path(c, cfg, "oracle-check"));
    w.write("moments_dynamics.csv", moments_csv(cmp.moments, cfg.trace_stride));
    w.write("moments_fock.csv", moments_csv(cmp.reference.moments, cfg.trace_stride));
    w.finalize(cfg, "oracle-check", cfg.optimizer.seed);

    print_line("max |G| " + fmt(cmp.max_coupling) + " max relative error " + fmt(cmp.max_rel_error) +
               " trace error " + fmt(cmp.reference.max_trace_error) + " top population " +
               fmt(cmp.reference.max_top_population));
    const bool ok = cmp.max_rel_error <= 0.02;
    print_line(ok ? "PASS moments within 2%" : "FAIL moments differ by more than 2%");
    return ok ? 0 : kExitAcceptance;
}

int exit_code(const Error& e) {
    switch (e.kind()) {
    case ErrorKind::InvalidParameter:
    case ErrorKind::Config: return kExitConfig;
    default: return kExitNumeric;
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Pulse optimization for transient mechanical squeezing"};
    app.require_subcommand(1);

    Common common;
    std::optional<std::uint64_t> seed;
    std::string grad_mode;
    std::optional<double> target_db;
    std::size_t bins = 20;
    double t_final = 1.0;
    std::string sweep_kind;
    double t_end = 0.0;
    double sigma_omega = 0.0;
    double sigma_phi = 0.0;
    std::size_t trials = 10;
    double at_time = 0.0;

    auto* optimize_cmd = app.add_subcommand("optimize", "Optimize a drive pulse");
    add_common(optimize_cmd, common, false, true);
    optimize_cmd->add_option("--seed", seed, "RNG seed");
    optimize_cmd->add_option("--grad-mode", grad_mode, "paper | full | fd");
    optimize_cmd->add_option("--target-db", target_db, "Target squeezing degree in dB");

    auto* simulate_cmd = app.add_subcommand("simulate", "Forward-simulate a stored pulse");
    add_common(simulate_cmd, common, true, true);

    auto* grad_cmd = app.add_subcommand("grad-check", "Compare analytic gradients with finite differences");
    add_common(grad_cmd, common, false, true);
    grad_cmd->add_option("--bins", bins, "Number of control bins");
    grad_cmd->add_option("--t-final", t_final, "Pulse duration");

    auto* sweep_cmd = app.add_subcommand("sweep", "Run a parameter sweep");
    add_common(sweep_cmd, common, false, true);
    sweep_cmd->add_option("kind", sweep_kind, "angle | kappa | eta")->required();
    sweep_cmd->add_option("--pulse", common.pulse_path, "Pulse CSV for the eta sweep");

    auto* decay_cmd = app.add_subcommand("decay", "Free evolution after the drive is switched off");
    add_common(decay_cmd, common, true, false);
    decay_cmd->add_option("--t-end", t_end, "End time")->required();

    auto* noise_cmd = app.add_subcommand("noise", "Drive-noise robustness trials");
    add_common(noise_cmd, common, true, false);
    noise_cmd->add_option("--sigma-omega", sigma_omega, "Amplitude noise standard deviation")->required();
    noise_cmd->add_option("--sigma-phi", sigma_phi, "Phase noise standard deviation")->required();
    noise_cmd->add_option("--trials", trials, "Number of trials")->required();
    noise_cmd->add_option("--seed", seed, "RNG seed");

    auto* wigner_cmd = app.add_subcommand("wigner", "Mechanical Wigner function at a given time");
    add_common(wigner_cmd, common, true, false);
    wigner_cmd->add_option("--at-time", at_time, "Evaluation time")->required();

    auto* oracle_cmd = app.add_subcommand("oracle-check", "Compare the moment equations with a Fock-space run");
    add_common(oracle_cmd, common, false, true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        if (*optimize_cmd) return cmd_optimize(common, seed, grad_mode, target_db);
        if (*simulate_cmd) return cmd_simulate(common);
        if (*grad_cmd) return cmd_grad_check(common, bins, t_final);
        if (*sweep_cmd) return cmd_sweep(common, sweep_kind);
        if (*decay_cmd) return cmd_decay(common, t_end);
        if (*noise_cmd) return cmd_noise(common, sigma_omega, sigma_phi, trials, seed);
        if (*wigner_cmd) return cmd_wigner(common, at_time);
        if (*oracle_cmd) return cmd_oracle_check(common);
    } catch (const Error& e) {
        std::cerr << "error (" << to_string(e.kind()) << "): " << e.what() << "\n";
        return exit_code(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumeric;
    }
    return 0;
}
