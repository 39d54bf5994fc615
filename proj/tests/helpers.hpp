// Shared fixtures for the unit tests.

#pragma once

#include "optosqueeze/gradient.hpp"

#include <random>

namespace testing_helpers {

using namespace optosqueeze;

// Random drive with amplitudes around `scale` and O(1) phases.
inline Pulse random_pulse(double t_final, std::size_t n_bins, double scale, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Pulse p(t_final, std::vector<double>(n_bins), std::vector<double>(n_bins));
    for (std::size_t k = 0; k < n_bins; ++k) {
        p.omega[k] = scale * (1.0 + 0.3 * normal(rng));
        p.phi[k] = normal(rng);
    }
    return p;
}

// Random moments of a physical two-mode Gaussian state: V = S S^T / 2 for a
// random symplectic-ish construction, obtained by evolving thermal moments
// under a random constant drift for a short time.
inline MomentVector random_physical_moments(std::mt19937_64& rng, const SystemParams& base) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    SystemParams p = base;
    p.n_bar_m = 2.0 * (u(rng) + 1.0);
    MeanFieldState mf{cd(3000.0 * u(rng), 3000.0 * u(rng)), cd(10.0 * u(rng), 10.0 * u(rng))};
    MomentVector x = thermal_moments(p.n_bar_m);
    x[kAdA] = 0.5 * (u(rng) + 1.0);
    const double h = 0.01;
    const int steps = 50 + static_cast<int>(100 * (u(rng) + 1.0));
    for (int i = 0; i < steps; ++i) {
        const MomentVector k1 = moment_rhs(x, mf, p);
        const MomentVector k2 = moment_rhs(x + 0.5 * h * k1, mf, p);
        const MomentVector k3 = moment_rhs(x + 0.5 * h * k2, mf, p);
        const MomentVector k4 = moment_rhs(x + h * k3, mf, p);
        x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    return symmetrize(x);
}

} // namespace testing_helpers
