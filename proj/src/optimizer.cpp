#include "optosqueeze/optimizer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>

namespace optosqueeze {

namespace {

struct Evaluation {
    bool ok = false;
    double loss = 0.0;
    ControlGradient grad;
};

Evaluation evaluate(const Pulse& pulse, const SystemParams& p, const LossWeights& w, const OptimizerConfig& cfg,
                    const SimulationOptions& sim) {
    Evaluation e;
    try {
        e.grad = loss_gradient(pulse, p, w, cfg.grad_mode, sim, 1e-4, e.loss);
        e.ok = std::isfinite(e.loss);
    } catch (const Error& err) {
        if (err.kind() != ErrorKind::Overflow && err.kind() != ErrorKind::IllConditioned) throw;
        e.ok = false;
    }
    return e;
}

} // namespace

double OptimizerConfig::loss_target() const {
    return epsilon > 0.0 ? epsilon : variance_for_degree(target_db);
}

void validate_config(const OptimizerConfig& cfg) {
    if (!(cfg.loss_target() > 0.0)) throw Error(ErrorKind::InvalidParameter, "epsilon must be positive", "epsilon");
    if (!(cfg.grow > 1.0)) throw Error(ErrorKind::InvalidParameter, "grow must exceed 1", "grow");
    if (!(cfg.shrink > 0.0 && cfg.shrink < 1.0)) {
        throw Error(ErrorKind::InvalidParameter, "shrink must lie in (0, 1)", "shrink");
    }
    if (cfg.max_iters < 1) throw Error(ErrorKind::InvalidParameter, "max_iters must be >= 1", "max_iters");
    if (cfg.init_harmonics < 1) {
        throw Error(ErrorKind::InvalidParameter, "init_harmonics must be >= 1", "init_harmonics");
    }
    if (!(cfg.init_scale >= 0.0)) throw Error(ErrorKind::InvalidParameter, "init_scale must be >= 0", "init_scale");
    if (!(cfg.chi_omega >= 0.0)) throw Error(ErrorKind::InvalidParameter, "chi_omega must be >= 0", "chi_omega");
    if (!(cfg.chi_phi >= 0.0)) throw Error(ErrorKind::InvalidParameter, "chi_phi must be >= 0", "chi_phi");
    if (cfg.max_retries < 1) throw Error(ErrorKind::InvalidParameter, "max_retries must be >= 1", "max_retries");
}

std::string_view to_string(OptimizationStatus status) noexcept {
    switch (status) {
    case OptimizationStatus::Converged: return "converged";
    case OptimizationStatus::MaxIterations: return "max-iterations";
    case OptimizationStatus::Stalled: return "stalled";
    }
    return "unknown";
}

std::vector<double> OptimizationResult::loss_history() const {
    std::vector<double> out;
    out.reserve(history.size());
    for (const auto& r : history) out.push_back(r.loss);
    return out;
}

Pulse random_smooth_series(const OptimizerConfig& cfg, double t_final, std::size_t n_bins) {
    const int k_max = cfg.init_harmonics;
    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const auto draw = [&] {
        std::vector<double> c(static_cast<std::size_t>(2 * k_max));
        for (double& v : c) v = normal(rng);
        return c;
    };
    const std::vector<double> amp = draw();
    const std::vector<double> phase = draw();

    const double norm = 1.0 / std::sqrt(static_cast<double>(k_max));
    const auto series = [&](const std::vector<double>& c, double t) {
        double s = 0.0;
        for (int k = 1; k <= k_max; ++k) {
            const double arg = 2.0 * std::numbers::pi * k * t / t_final;
            s += c[static_cast<std::size_t>(2 * (k - 1))] * std::cos(arg) +
                 c[static_cast<std::size_t>(2 * (k - 1) + 1)] * std::sin(arg);
        }
        return s * norm;
    };

    Pulse pulse(t_final, std::vector<double>(n_bins), std::vector<double>(n_bins));
    const double bw = pulse.bin_width();
    for (std::size_t i = 0; i < n_bins; ++i) {
        const double t = (static_cast<double>(i) + 0.5) * bw;
        pulse.omega[i] = cfg.init_scale * series(amp, t);
        pulse.phi[i] = series(phase, t);
    }
    return pulse;
}

Pulse random_smooth_pulse(const OptimizerConfig& cfg, double t_final, std::size_t n_bins) {
    Pulse pulse = random_smooth_series(cfg, t_final, n_bins);
    for (double& w : pulse.omega) w = std::abs(w);
    return pulse;
}

Pulse descent_step(const Pulse& pulse, const ControlGradient& grad, const LearningRates& rates) {
    if (grad.n_bins() != pulse.n_bins() || grad.d_phi.size() != pulse.n_bins()) {
        throw Error(ErrorKind::InvalidParameter, "gradient and pulse bin counts differ", "n_bins");
    }
    Pulse out = pulse;
    for (std::size_t k = 0; k < pulse.n_bins(); ++k) {
        out.omega[k] -= rates.omega * grad.d_omega[k];
        out.phi[k] -= rates.phi * grad.d_phi[k];
    }
    return out;
}

OptimizationResult optimize(const SystemParams& p, const OptimizerConfig& cfg, double t_final, std::size_t n_bins,
                            const OptimizeOptions& options) {
    validate_params(p);
    validate_config(cfg);
    const auto start = std::chrono::steady_clock::now();
    const LossWeights weights = LossWeights::quadrature(cfg.theta);
    const double target = cfg.loss_target();

    OptimizationResult result;
    result.seed = cfg.seed;
    result.gradient_mode = cfg.grad_mode;
    result.pulse = options.initial ? *options.initial : random_smooth_pulse(cfg, t_final, n_bins);
    validate_pulse(result.pulse);

    Evaluation current = evaluate(result.pulse, p, weights, cfg, options.simulation);
    if (!current.ok) throw Error(ErrorKind::Diverged, "initial pulse does not produce a finite loss");
    const double initial_loss = current.loss;
    const double blowup = 1e6 * std::max(initial_loss, 1e-300);

    LearningRates rates{cfg.chi_omega, cfg.chi_phi};
    if (rates.omega <= 0.0) {
        const double g = max_abs(current.grad.d_omega);
        const double scale = std::max(max_abs(result.pulse.omega), 1.0);
        rates.omega = g > 0.0 ? cfg.auto_step_omega * scale / g : 0.0;
    }
    if (rates.phi <= 0.0) {
        const double g = max_abs(current.grad.d_phi);
        rates.phi = g > 0.0 ? cfg.auto_step_phi / g : 0.0;
    }

    result.history.push_back({0, current.loss, rates.omega, rates.phi});
    if (options.progress) options.progress(result.history.back());

    std::size_t quiet = 0;
    result.status = OptimizationStatus::MaxIterations;
    for (std::size_t it = 1; it <= cfg.max_iters; ++it) {
        if (current.loss <= target) {
            result.status = OptimizationStatus::Converged;
            break;
        }
        if (current.grad.all_zero()) {
            result.status = OptimizationStatus::Stalled;
            break;
        }
        const double before = current.loss;
        bool accepted = false;
        bool all_diverged = true;
        for (std::size_t attempt = 0; attempt < cfg.max_retries; ++attempt) {
            const Pulse candidate = descent_step(result.pulse, current.grad, rates);
            Evaluation next = evaluate(candidate, p, weights, cfg, options.simulation);
            if (next.ok && next.loss <= blowup) all_diverged = false;
            if (next.ok && next.loss < current.loss) {
                result.pulse = candidate;
                current = std::move(next);
                rates.omega *= cfg.grow;
                rates.phi *= cfg.grow;
                accepted = true;
                break;
            }
            rates.omega *= cfg.shrink;
            rates.phi *= cfg.shrink;
        }
        if (!accepted && all_diverged) {
            throw Error(ErrorKind::Diverged, "every retry at iteration " + std::to_string(it) +
                                                 " overflowed or exceeded 1e6 times the initial loss");
        }
        result.iterations = it;
        result.history.push_back({it, current.loss, rates.omega, rates.phi});
        if (options.progress) options.progress(result.history.back());

        quiet = (before - current.loss < cfg.stall_tolerance) ? quiet + 1 : 0;
        if (quiet >= cfg.stall_window) {
            result.status = OptimizationStatus::Stalled;
            break;
        }
    }
    if (current.loss <= target) result.status = OptimizationStatus::Converged;

    result.best_loss = current.loss;
    result.best_iteration = result.history.back().iteration;
    for (const auto& r : result.history) {
        if (r.loss == result.best_loss) {
            result.best_iteration = r.iteration;
            break;
        }
    }
    const Simulation sim = simulate(result.pulse, p, options.simulation);
    const MomentVector& xf = sim.moments.final_moments();
    result.final_report.theta = cfg.theta;
    result.final_report.variance = result.best_loss;
    result.final_report.degree_db = squeezing_degree(result.best_loss);
    result.final_report.mean_phonon = xf[kBdB].real();
    result.final_report.moment_bb = xf[kBdBd];
    result.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return result;
}

} // namespace optosqueeze
