#include "optosqueeze/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace optosqueeze {

namespace {

SqueezingSample sample(double t, const MomentVector& x, double theta) {
    SqueezingSample s;
    s.t = t;
    s.variance = quadrature_variance(covariance_from_moments(x), theta);
    s.degree_db = squeezing_degree(s.variance);
    s.mean_phonon = x[kBdB].real();
    s.moment_bb = x[kBdBd];
    return s;
}

template <typename Body>
SweepRecord run_point(const std::string& key, double value, const OptimizerConfig& cfg, Body&& body) {
    SweepRecord rec;
    rec.key = key;
    rec.value = value;
    rec.seed = cfg.seed;
    rec.gradient_mode = cfg.grad_mode;
    try {
        body(rec);
        rec.ok = true;
    } catch (const std::exception& e) {
        rec.ok = false;
        rec.error = e.what();
    }
    return rec;
}

void fill_from_result(SweepRecord& rec, OptimizationResult result, const SystemParams& p, double theta,
                      const SweepOptions& options) {
    rec.max_abs_omega = max_abs(result.pulse.omega);
    rec.max_abs_phi = max_abs(result.pulse.phi);
    rec.report = result.final_report;
    const Simulation sim = simulate(result.pulse, p, options.optimize.simulation);
    rec.trace = squeezing_trace(sim.moments, theta, options.trace_stride);
    rec.result = std::move(result);
}

} // namespace

std::vector<SqueezingSample> squeezing_trace(const MomentTrajectory& traj, double theta, std::size_t stride) {
    stride = std::max<std::size_t>(stride, 1);
    std::vector<SqueezingSample> out;
    const std::size_t n = traj.moments.size();
    for (std::size_t i = 0; i < n; i += stride) out.push_back(sample(traj.grid.time(i), traj.moments[i], theta));
    if (n > 0 && (n - 1) % stride != 0) out.push_back(sample(traj.grid.time(n - 1), traj.moments[n - 1], theta));
    return out;
}

std::vector<SweepRecord> angle_sweep(const SystemParams& p, const OptimizerConfig& cfg, double t_final,
                                     std::size_t n_bins, const std::vector<double>& thetas,
                                     const SweepOptions& options) {
    std::vector<SweepRecord> out;
    for (double theta : thetas) {
        OptimizerConfig point = cfg;
        point.theta = theta;
        out.push_back(run_point("theta", theta, point, [&](SweepRecord& rec) {
            if (!(theta >= 0.0 && theta <= std::numbers::pi)) {
                throw Error(ErrorKind::InvalidParameter, "theta must lie in [0, pi]", "theta");
            }
            fill_from_result(rec, optimize(p, point, t_final, n_bins, options.optimize), p, theta, options);
        }));
    }
    return out;
}

std::vector<SweepRecord> sideband_sweep(const SystemParams& p, const OptimizerConfig& cfg, double t_final,
                                        std::size_t n_bins, const std::vector<double>& kappas,
                                        const SweepOptions& options) {
    std::vector<SweepRecord> out;
    for (double kappa : kappas) {
        SystemParams q = p;
        q.kappa = kappa;
        out.push_back(run_point("kappa", kappa, cfg, [&](SweepRecord& rec) {
            fill_from_result(rec, optimize(q, cfg, t_final, n_bins, options.optimize), q, cfg.theta, options);
        }));
    }
    return out;
}

std::vector<SweepRecord> deviation_sweep(const Pulse& pulse, const SystemParams& p, double theta,
                                         ControlChannel channel, const std::vector<double>& etas,
                                         const SimulationOptions& sim) {
    const std::string key = channel == ControlChannel::Amplitude ? "eta_omega" : "eta_phi";
    std::vector<SweepRecord> out;
    OptimizerConfig dummy;
    dummy.seed = 0;
    for (double eta : etas) {
        out.push_back(run_point(key, eta, dummy, [&](SweepRecord& rec) {
            Pulse scaled = pulse;
            auto& q = channel == ControlChannel::Amplitude ? scaled.omega : scaled.phi;
            for (double& v : q) v *= (1.0 + eta);
            const Simulation s = simulate(scaled, p, sim);
            rec.report = squeezing_report(s.moments.final_moments(), theta);
            rec.max_abs_omega = max_abs(scaled.omega);
            rec.max_abs_phi = max_abs(scaled.phi);
        }));
    }
    return out;
}

DecayTrace free_decay(const Pulse& pulse, const SystemParams& p, double theta, double t_end,
                      const SimulationOptions& sim, std::size_t stride) {
    validate_pulse(pulse);
    const double t0 = pulse.t_final;
    if (!(t_end >= t0)) throw Error(ErrorKind::InvalidParameter, "t_end must not precede the pulse end", "t_end");
    const Simulation driven = simulate(pulse, p, sim);

    DecayTrace out;
    const auto push = [&](double t, const MomentVector& x) {
        const CovarianceMatrix v = covariance_from_moments(x);
        out.times.push_back(t);
        out.fixed_db.push_back(squeezing_degree(quadrature_variance(v, theta)));
        out.corotating_db.push_back(squeezing_degree(quadrature_variance(v, theta - p.omega_m * (t - t0))));
        out.best_db.push_back(squeezing_degree(quadrature_extrema(v)[0]));
        out.mean_phonon.push_back(x[kBdB].real());
    };
    push(t0, driven.moments.final_moments());
    const double span = t_end - t0;
    if (span <= 0.0) return out;

    const auto n_bins = static_cast<std::size_t>(std::max(1.0, std::round(span / pulse.bin_width())));
    const Pulse off = Pulse::zero(span, std::max<std::size_t>(n_bins, 2));
    const MeanFieldTrajectory mf =
        integrate_meanfield(off, p, driven.meanfield.final_state(), sim.integrator, t0);
    const MomentTrajectory tail = integrate_moments(mf, p, driven.moments.final_moments());
    stride = std::max<std::size_t>(stride, 1);
    const std::size_t n = tail.moments.size();
    for (std::size_t i = stride; i < n; i += stride) push(tail.grid.time(i), tail.moments[i]);
    if ((n - 1) % stride != 0) push(tail.grid.time(n - 1), tail.moments[n - 1]);
    return out;
}

Pulse noisy_pulse(const Pulse& pulse, double sigma_omega, double sigma_phi, std::uint64_t seed, std::uint64_t trial) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(trial), static_cast<std::uint32_t>(trial >> 32)};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> normal(0.0, 1.0);
    Pulse out = pulse;
    for (std::size_t k = 0; k < out.n_bins(); ++k) {
        const double z_omega = normal(rng);
        const double z_phi = normal(rng);
        out.omega[k] += sigma_omega * z_omega;
        out.phi[k] += sigma_phi * z_phi;
    }
    return out;
}

NoiseTrials noise_trials(const Pulse& pulse, const SystemParams& p, double theta, double sigma_omega,
                         double sigma_phi, std::size_t n_trials, std::uint64_t seed, const SimulationOptions& sim,
                         std::size_t stride) {
    if (n_trials < 1) throw Error(ErrorKind::InvalidParameter, "n_trials must be >= 1", "trials");
    if (!(sigma_omega >= 0.0)) throw Error(ErrorKind::InvalidParameter, "sigma_omega must be >= 0", "sigma_omega");
    if (!(sigma_phi >= 0.0)) throw Error(ErrorKind::InvalidParameter, "sigma_phi must be >= 0", "sigma_phi");

    const auto curve = [&](const Pulse& q, std::vector<double>* times) {
        const Simulation s = simulate(q, p, sim);
        const auto trace = squeezing_trace(s.moments, theta, stride);
        std::vector<double> db;
        db.reserve(trace.size());
        for (const auto& smp : trace) {
            db.push_back(smp.degree_db);
            if (times) times->push_back(smp.t);
        }
        return db;
    };

    NoiseTrials out;
    out.baseline_db = curve(pulse, &out.times);
    out.baseline_final_db = out.baseline_db.back();
    out.mean_db.assign(out.times.size(), 0.0);
    for (std::size_t i = 0; i < n_trials; ++i) {
        out.trial_db.push_back(curve(noisy_pulse(pulse, sigma_omega, sigma_phi, seed, i), nullptr));
        const auto& c = out.trial_db.back();
        for (std::size_t j = 0; j < c.size(); ++j) out.mean_db[j] += c[j] / static_cast<double>(n_trials);
        out.final_db.push_back(c.back());
        out.mean_abs_deviation += std::abs(c.back() - out.baseline_final_db) / static_cast<double>(n_trials);
    }
    return out;
}

} // namespace optosqueeze
