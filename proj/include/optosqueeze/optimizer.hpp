// optimizer.hpp: gradient descent on the per-bin drive amplitude and phase with
// a multiplicative adapt-and-revert learning rate.

#pragma once

#include "optosqueeze/analysis.hpp"
#include "optosqueeze/gradient.hpp"

#include <cstdint>
#include <functional>
#include <numbers>
#include <string_view>
#include <vector>

namespace optosqueeze {

struct OptimizerConfig {
    double theta = std::numbers::pi / 2; // target quadrature angle
    double target_db = 1.0;              // stop once S_b reaches this degree
    double epsilon = 0.0;                // loss target; <= 0 derives it from target_db
    std::size_t max_iters = 10000;
    double chi_omega = 0.0;              // initial rates; <= 0 picks them from the first gradient
    double chi_phi = 0.0;
    double grow = 1.05;
    double shrink = 0.5;
    std::uint64_t seed = 1;
    double init_scale = 1e3;
    int init_harmonics = 8;
    GradientMode grad_mode = GradientMode::FullChain;
    std::size_t max_retries = 30;
    std::size_t stall_window = 500;
    double stall_tolerance = 1e-12;
    // Relative size of the first step when the rates are picked automatically.
    double auto_step_omega = 0.05;
    double auto_step_phi = 0.05;

    double loss_target() const;
};

void validate_config(const OptimizerConfig& cfg);

enum class OptimizationStatus { Converged, MaxIterations, Stalled };
std::string_view to_string(OptimizationStatus status) noexcept;

struct IterationRecord {
    std::size_t iteration = 0;
    double loss = 0.0;
    double chi_omega = 0.0;
    double chi_phi = 0.0;
};

struct OptimizationResult {
    Pulse pulse;                          // best pulse found
    std::vector<IterationRecord> history; // entry 0 is the initial pulse
    double best_loss = 0.0;
    std::size_t best_iteration = 0;
    SqueezingReport final_report;
    std::uint64_t seed = 0;
    GradientMode gradient_mode = GradientMode::FullChain;
    OptimizationStatus status = OptimizationStatus::MaxIterations;
    std::size_t iterations = 0;
    double wall_time = 0.0; // seconds

    std::vector<double> loss_history() const;
};

// Omega(t) = scale |sum_k c_k cos(2 pi k t/T) + d_k sin(2 pi k t/T)| / sqrt(K) and
// phi(t) = sum_k (c'_k cos + d'_k sin) / sqrt(K), sampled at bin centres.
Pulse random_smooth_pulse(const OptimizerConfig& cfg, double t_final, std::size_t n_bins);
// The same draw before the absolute value is taken: both controls are then
// trigonometric polynomials of degree init_harmonics.
Pulse random_smooth_series(const OptimizerConfig& cfg, double t_final, std::size_t n_bins);

struct LearningRates {
    double omega = 0.0;
    double phi = 0.0;
};

// Q <- Q - chi_Q dL/dQ for both controls.
Pulse descent_step(const Pulse& pulse, const ControlGradient& grad, const LearningRates& rates);

using ProgressCallback = std::function<void(const IterationRecord&)>;

struct OptimizeOptions {
    SimulationOptions simulation;
    ProgressCallback progress;        // called once per iteration
    const Pulse* initial = nullptr;   // overrides the random initial pulse
};

OptimizationResult optimize(const SystemParams& p, const OptimizerConfig& cfg, double t_final, std::size_t n_bins,
                            const OptimizeOptions& options = {});

} // namespace optosqueeze
