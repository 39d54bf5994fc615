// dynamics.hpp: mean-field and second-moment integration for the linearized
// optomechanical system, plus the fundamental-solution propagators used by the
// gradient engine.

#pragma once

#include "optosqueeze/core.hpp"

#include <Eigen/Dense>

#include <array>
#include <cstddef>
#include <optional>
#include <vector>

namespace optosqueeze {

// Uniform grid of n_bins * steps_per_bin RK4 steps over [t0, t0 + duration].
struct TimeGrid {
    double t0 = 0.0;
    double duration = 0.0;
    std::size_t n_bins = 0;
    std::size_t steps_per_bin = 1;

    std::size_t n_steps() const noexcept { return n_bins * steps_per_bin; }
    double dt() const noexcept { return duration / static_cast<double>(n_steps()); }
    double time(std::size_t i) const noexcept { return t0 + dt() * static_cast<double>(i); }
    std::size_t bin_of_step(std::size_t i) const noexcept { return i / steps_per_bin; }
    std::size_t step_of_bin(std::size_t k) const noexcept { return k * steps_per_bin; }
};

struct IntegratorConfig {
    std::size_t steps_per_bin = 10;
};

// Magnitude beyond which a state component counts as overflow.
inline constexpr double kOverflowLimit = 1e12;
// Norm beyond which a propagator counts as ill-conditioned.
inline constexpr double kPropagatorLimit = 1e14;

// ------------------------------------------------------------------ mean fields

// Right-hand side of the mean-field equations for drive amplitude omega and
// phase phi.
MeanFieldState meanfield_rhs(const MeanFieldState& s, double omega, double phi, const SystemParams& p);

// Steady state reached under a constant drive with the prescribed cavity
// amplitude; returns the state and writes the required drive to omega/phi.
MeanFieldState meanfield_fixed_point(cd alpha, const SystemParams& p, double& omega, double& phi);

struct MeanFieldTrajectory {
    TimeGrid grid;
    Pulse drive;
    std::vector<MeanFieldState> states;     // n_steps + 1 grid points
    std::vector<MeanFieldState> rate_left;  // derivative at the left end of each step (that step's control)
    std::vector<MeanFieldState> rate_right; // derivative at the right end of each step (that step's control)

    // Cubic Hermite interpolant inside step n at fraction s in [0, 1].
    MeanFieldState at(std::size_t n, double s) const;
    MeanFieldState midpoint(std::size_t n) const { return at(n, 0.5); }
    const MeanFieldState& final_state() const { return states.back(); }
};

MeanFieldTrajectory integrate_meanfield(const Pulse& pulse, const SystemParams& p,
                                        const MeanFieldState& mf0 = {},
                                        const IntegratorConfig& cfg = {}, double t0 = 0.0);

// Restriction of a trajectory to the control bins [bin_begin, bin_end).
MeanFieldTrajectory slice_bins(const MeanFieldTrajectory& traj, std::size_t bin_begin, std::size_t bin_end);

// ------------------------------------------------------------------ moments

// M(t) = M0(Delta) + G * coupling_matrix_g() + conj(G) * coupling_matrix_gc().
using DriftMatrix = Eigen::Matrix<cd, 10, 10>;

DriftMatrix drift_matrix(const MeanFieldState& mf, const SystemParams& p);
MomentVector inhomogeneous_term(const MeanFieldState& mf, const SystemParams& p);

// Derivative of the drift with respect to G, conj(G) and Delta respectively.
const DriftMatrix& coupling_matrix_g();
const DriftMatrix& coupling_matrix_gc();
const DriftMatrix& detuning_derivative();

// Sparse evaluations of M x, M^T y and M x + N for coupling G and detuning delta.
MomentVector apply_drift(const MomentVector& x, cd g, double delta, const SystemParams& p);
MomentVector apply_drift_transpose(const MomentVector& y, cd g, double delta, const SystemParams& p);
MomentVector moment_rhs(const MomentVector& x, const MeanFieldState& mf, const SystemParams& p);

// (y^T coupling_matrix_g() x, y^T coupling_matrix_gc() x) without forming the matrices.
std::array<cd, 2> coupling_bilinear(const MomentVector& y, const MomentVector& x);

struct MomentTrajectory {
    TimeGrid grid;
    std::vector<MomentVector> moments; // n_steps + 1 grid points

    const MomentVector& final_moments() const { return moments.back(); }
};

MomentTrajectory integrate_moments(const MeanFieldTrajectory& traj, const SystemParams& p,
                                   const MomentVector& x0);

// Final moments only, without storing the path.
MomentVector final_moments(const MeanFieldTrajectory& traj, const SystemParams& p, const MomentVector& x0);

// ------------------------------------------------------------------ propagators

// Jacobian of the mean-field equations in (d alpha, d beta, d alpha*, d beta*).
using MeanFieldJacobian = Eigen::Matrix<cd, 4, 4>;
MeanFieldJacobian meanfield_jacobian(const MeanFieldState& mf, const SystemParams& p);

// Fundamental-solution matrices sampled at the control-bin boundaries
// t_k = t0 + k * bin_width, k = 0..n_bins.
//   dim 10: mats[k] = Phi(T, t_k), the moment propagator from t_k to the end.
//   dim 4:  mats[k] = Lambda(t_k), inverses[k] = Lambda(t_k)^-1.
struct PropagatorGrid {
    int dim = 0;
    std::vector<double> times;
    std::vector<Eigen::MatrixXcd> mats;
    std::vector<Eigen::MatrixXcd> inverses;
};

PropagatorGrid propagator_moments(const MeanFieldTrajectory& traj, const SystemParams& p);
PropagatorGrid propagator_meanfield(const MeanFieldTrajectory& traj, const SystemParams& p);

// ------------------------------------------------------------------ forward runs

struct SimulationOptions {
    IntegratorConfig integrator;
    MeanFieldState mf0;               // initial mean fields, zero by default
    std::optional<MomentVector> x0;   // default: thermal_initial_moments(p)

    MomentVector initial_moments(const SystemParams& p) const { return x0 ? *x0 : thermal_initial_moments(p); }
};

struct Simulation {
    MeanFieldTrajectory meanfield;
    MomentTrajectory moments;
};

Simulation simulate(const Pulse& pulse, const SystemParams& p, const SimulationOptions& opts = {});

} // namespace optosqueeze
