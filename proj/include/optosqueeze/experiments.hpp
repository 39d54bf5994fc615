// experiments.hpp: parameter studies built on the optimizer and forward
// simulator: angle, sideband and deviation sweeps, free decay after the drive
// is removed, and drive-noise trials.

#pragma once

#include "optosqueeze/optimizer.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace optosqueeze {

// Squeezing diagnostics at one time point.
struct SqueezingSample {
    double t = 0.0;
    double variance = 0.0;
    double degree_db = 0.0;
    double mean_phonon = 0.0;
    cd moment_bb{0.0, 0.0};
};

// Samples every `stride` grid points (always including the last one).
std::vector<SqueezingSample> squeezing_trace(const MomentTrajectory& traj, double theta, std::size_t stride = 1);

struct SweepRecord {
    std::string key;      // swept quantity
    double value = 0.0;   // its value at this point
    bool ok = false;
    std::string error;    // failure message when !ok
    std::optional<OptimizationResult> result;
    std::optional<SqueezingReport> report;
    std::vector<SqueezingSample> trace;
    double max_abs_omega = 0.0;
    double max_abs_phi = 0.0;
    std::uint64_t seed = 0;
    GradientMode gradient_mode = GradientMode::FullChain;
    std::vector<std::string> artifacts; // filled in by whoever persists the record
};

struct SweepOptions {
    OptimizeOptions optimize;
    std::size_t trace_stride = 10; // grid points between stored trace samples
};

// Per theta: optimize towards cfg.target_db and record the peak amplitude and
// phase of the learned pulse. Failures are recorded and the sweep continues.
std::vector<SweepRecord> angle_sweep(const SystemParams& p, const OptimizerConfig& cfg, double t_final,
                                     std::size_t n_bins, const std::vector<double>& thetas,
                                     const SweepOptions& options = {});

// Per kappa: optimize with the given cavity damping and record the squeezing
// and phonon-number traces.
std::vector<SweepRecord> sideband_sweep(const SystemParams& p, const OptimizerConfig& cfg, double t_final,
                                        std::size_t n_bins, const std::vector<double>& kappas,
                                        const SweepOptions& options = {});

enum class ControlChannel { Amplitude, Phase };

// Scales one control by (1 + eta) and re-simulates; no re-optimization.
std::vector<SweepRecord> deviation_sweep(const Pulse& pulse, const SystemParams& p, double theta,
                                         ControlChannel channel, const std::vector<double>& etas,
                                         const SimulationOptions& sim = {});

struct DecayTrace {
    std::vector<double> times;
    std::vector<double> fixed_db;      // S_b at the fixed angle theta
    std::vector<double> corotating_db; // S_b at theta - omega_m (t - T), following the free rotation
    std::vector<double> best_db;       // S_b of the most squeezed quadrature
    std::vector<double> mean_phonon;
};

// Continues the evolution with the drive switched off from pulse.t_final to
// t_end. The grid keeps the pulse's bin width and steps per bin; the first
// sample is at t = pulse.t_final, so t_end == t_final yields a single sample.
DecayTrace free_decay(const Pulse& pulse, const SystemParams& p, double theta, double t_end,
                      const SimulationOptions& sim = {}, std::size_t stride = 10);

struct NoiseTrials {
    std::vector<double> times;
    std::vector<double> baseline_db;
    std::vector<std::vector<double>> trial_db;
    std::vector<double> mean_db;
    std::vector<double> final_db; // S_b(T) per trial
    double baseline_final_db = 0.0;
    double mean_abs_deviation = 0.0; // mean |S_b(T) - baseline|
};

// Adds independent N(0, sigma^2) samples per bin to omega and phi. Trial i
// draws from its own stream seeded by (seed, i).
Pulse noisy_pulse(const Pulse& pulse, double sigma_omega, double sigma_phi, std::uint64_t seed, std::uint64_t trial);

NoiseTrials noise_trials(const Pulse& pulse, const SystemParams& p, double theta, double sigma_omega,
                         double sigma_phi, std::size_t n_trials, std::uint64_t seed,
                         const SimulationOptions& sim = {}, std::size_t stride = 10);

} // namespace optosqueeze
