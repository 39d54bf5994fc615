#include "helpers.hpp"

#include "optosqueeze/optimizer.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace optosqueeze;

namespace {

// Fraction of the signal energy carried by DFT modes |k| <= k_max.
double low_mode_fraction(const std::vector<double>& v, int k_max) {
    const std::size_t n = v.size();
    double low = 0.0, total = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        cd acc{0.0};
        for (std::size_t j = 0; j < n; ++j) {
            acc += v[j] * std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(k * j % n) / static_cast<double>(n));
        }
        const double e = std::norm(acc);
        total += e;
        const std::size_t mirrored = std::min(k, n - k);
        if (mirrored <= static_cast<std::size_t>(k_max)) low += e;
    }
    return low / total;
}

OptimizerConfig small_config() {
    OptimizerConfig cfg;
    cfg.max_iters = 25;
    cfg.target_db = 1.0;
    cfg.seed = 4;
    return cfg;
}

} // namespace

TEST_CASE("random initial pulses are deterministic") {
    OptimizerConfig cfg;
    cfg.seed = 42;
    const Pulse a = random_smooth_pulse(cfg, 120.0, 2400);
    const Pulse b = random_smooth_pulse(cfg, 120.0, 2400);
    CHECK(a.omega == b.omega);
    CHECK(a.phi == b.phi);
    CHECK(a.t_final == 120.0);
    CHECK(a.n_bins() == 2400);

    cfg.seed = 43;
    const Pulse c = random_smooth_pulse(cfg, 120.0, 2400);
    CHECK(c.omega != a.omega);
}

TEST_CASE("zero init scale gives a dark pulse") {
    OptimizerConfig cfg;
    cfg.init_scale = 0.0;
    const Pulse p = random_smooth_pulse(cfg, 10.0, 200);
    for (double w : p.omega) CHECK(w == 0.0);
}

TEST_CASE("random initial pulses are band limited before rectification") {
    OptimizerConfig cfg;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        cfg.seed = seed;
        const Pulse series = random_smooth_series(cfg, 120.0, 600);
        const Pulse p = random_smooth_pulse(cfg, 120.0, 600);
        CHECK(low_mode_fraction(series.omega, cfg.init_harmonics) >= 0.99);
        CHECK(low_mode_fraction(series.phi, cfg.init_harmonics) >= 0.99);
        CHECK(p.phi == series.phi);
        for (std::size_t k = 0; k < p.n_bins(); ++k) CHECK(p.omega[k] == std::abs(series.omega[k]));
        // Taking |.| folds the zero crossings into kinks, which spreads some
        // energy above the drawn harmonics.
        MESSAGE("seed " << seed << ": rectified amplitude energy in low modes "
                        << low_mode_fraction(p.omega, cfg.init_harmonics));
    }
}

TEST_CASE("descent step") {
    Pulse pulse(1.0, {1.0, 2.0, 3.0}, {0.1, 0.2, 0.3});
    ControlGradient zero;
    zero.d_omega = {0.0, 0.0, 0.0};
    zero.d_phi = {0.0, 0.0, 0.0};
    Pulse out = descent_step(pulse, zero, {0.7, 0.3});
    CHECK(out.omega == pulse.omega);
    CHECK(out.phi == pulse.phi);

    ControlGradient g;
    g.d_omega = {1.0, -2.0, 0.5};
    g.d_phi = {3.0, 1.0, -1.0};
    out = descent_step(pulse, g, {0.0, 0.0});
    CHECK(out.omega == pulse.omega);
    CHECK(out.phi == pulse.phi);

    // loss = (omega_1 - c)^2 has gradient 2 (omega_1 - c); one step moves
    // omega_1 by 2 chi (c - omega_1).
    const double c = 5.0, chi = 0.1;
    ControlGradient q;
    q.d_omega = {0.0, 2.0 * (pulse.omega[1] - c), 0.0};
    q.d_phi = {0.0, 0.0, 0.0};
    out = descent_step(pulse, q, {chi, 0.0});
    CHECK(out.omega[1] == doctest::Approx(pulse.omega[1] + 2.0 * chi * (c - pulse.omega[1])));
    CHECK(out.omega[0] == pulse.omega[0]);

    out = descent_step(pulse, g, {0.5, 0.25});
    for (std::size_t k = 0; k < 3; ++k) {
        CHECK(out.omega[k] == pulse.omega[k] - 0.5 * g.d_omega[k]);
        CHECK(out.phi[k] == pulse.phi[k] - 0.25 * g.d_phi[k]);
    }

    ControlGradient short_grad;
    short_grad.d_omega = {1.0};
    short_grad.d_phi = {1.0};
    CHECK_THROWS_AS(descent_step(pulse, short_grad, {1.0, 1.0}), Error);
}

TEST_CASE("optimizer configuration validation") {
    const auto field_of = [](const OptimizerConfig& cfg) {
        try {
            validate_config(cfg);
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::InvalidParameter);
            return e.field();
        }
        return std::string("ok");
    };
    OptimizerConfig cfg;
    CHECK(field_of(cfg) == "ok");
    CHECK(cfg.loss_target() == doctest::Approx(variance_for_degree(1.0)));
    cfg.epsilon = 0.4;
    CHECK(cfg.loss_target() == 0.4);

    OptimizerConfig bad;
    bad.grow = 1.0;
    CHECK(field_of(bad) == "grow");
    bad = {};
    bad.shrink = 1.0;
    CHECK(field_of(bad) == "shrink");
    bad = {};
    bad.max_iters = 0;
    CHECK(field_of(bad) == "max_iters");
    bad = {};
    bad.init_scale = -1.0;
    CHECK(field_of(bad) == "init_scale");
    bad = {};
    bad.init_harmonics = 0;
    CHECK(field_of(bad) == "init_harmonics");
    bad = {};
    bad.chi_phi = -1.0;
    CHECK(field_of(bad) == "chi_phi");
}

TEST_CASE("status names") {
    CHECK(to_string(OptimizationStatus::Converged) == "converged");
    CHECK(to_string(OptimizationStatus::MaxIterations) == "max-iterations");
    CHECK(to_string(OptimizationStatus::Stalled) == "stalled");
}

TEST_CASE("decoupled system stalls at the thermal variance") {
    SystemParams p;
    p.g0 = 0.0;
    const OptimizationResult r = optimize(p, small_config(), 2.0, 40);
    CHECK(r.status == OptimizationStatus::Stalled);
    CHECK(r.best_loss == doctest::Approx(0.5 + p.n_bar_m).epsilon(1e-9));
    CHECK(r.iterations == 0);
}

TEST_CASE("optimizer is deterministic and never worsens") {
    SystemParams p;
    const OptimizerConfig cfg = small_config();
    std::size_t calls = 0;
    OptimizeOptions opts;
    opts.progress = [&](const IterationRecord&) { ++calls; };
    const OptimizationResult a = optimize(p, cfg, 6.0, 120, opts);
    const OptimizationResult b = optimize(p, cfg, 6.0, 120);
    CHECK(a.loss_history() == b.loss_history());
    CHECK(a.pulse.omega == b.pulse.omega);
    CHECK(calls == a.history.size());
    CHECK(a.history.size() == a.iterations + 1);
    const auto h = a.loss_history();
    for (std::size_t i = 1; i < h.size(); ++i) CHECK(h[i] <= h[i - 1]);
    CHECK(h.back() < h.front());
    CHECK(a.best_loss == h.back());
    CHECK(a.seed == cfg.seed);
    CHECK(a.gradient_mode == GradientMode::FullChain);
    CHECK(a.final_report.degree_db == doctest::Approx(squeezing_degree(a.best_loss)));

    // The attained state respects the uncertainty relation.
    const Simulation sim = simulate(a.pulse, p);
    const CovarianceMatrix v = covariance_from_moments(sim.moments.final_moments());
    CHECK(quadrature_variance(v, cfg.theta) == doctest::Approx(a.best_loss).epsilon(1e-12));
    CHECK(quadrature_variance(v, cfg.theta) * quadrature_variance(v, cfg.theta + std::numbers::pi / 2) >= 0.25 - 1e-9);
}

TEST_CASE("optimizer honours an explicit initial pulse and a loose target") {
    SystemParams p;
    OptimizerConfig cfg = small_config();
    cfg.epsilon = 1e6; // already satisfied
    const Pulse start = Pulse::constant(2.0, 40, 100.0, 0.0);
    OptimizeOptions opts;
    opts.initial = &start;
    const OptimizationResult r = optimize(p, cfg, 2.0, 40, opts);
    CHECK(r.status == OptimizationStatus::Converged);
    CHECK(r.iterations == 0);
    CHECK(r.pulse.omega == start.omega);
}

TEST_CASE("optimizer reaches squeezing on a short horizon") {
    SystemParams p;
    OptimizerConfig cfg;
    cfg.epsilon = 0.40;
    cfg.max_iters = 2000;
    cfg.seed = 1;
    const OptimizationResult r = optimize(p, cfg, 6.0, 600);
    CHECK(r.status == OptimizationStatus::Converged);
    CHECK(r.best_loss <= 0.40);
}
