// oracle.hpp: truncated-Fock-space master-equation integrator used to validate
// the moment equations at small occupations.

#pragma once

#include "optosqueeze/dynamics.hpp"

#include <string>
#include <vector>

namespace optosqueeze {

struct FockConfig {
    int dim_a = 8;
    int dim_b = 10;
    bool include_nonlinear = false; // keep g0 a^dag a (b + b^dag) on top of the linearized Hamiltonian
    double dt = 5e-3;               // upper bound on the master-equation step
    double breach_threshold = 1e-3; // largest allowed population of the top Fock level
};

void validate_fock_config(const FockConfig& fc);

struct FockReference {
    MomentTrajectory moments;           // same grid as the mean-field trajectory
    double max_trace_error = 0.0;       // |tr rho - 1|
    double max_hermiticity_error = 0.0; // max |rho - rho^dag|
    double max_top_population = 0.0;    // over both modes and all grid points
    std::vector<std::string> warnings;
};

// Integrates the Lindblad equation for the displaced fluctuations with the
// time-dependent coupling and detuning taken from `traj`, starting from the
// cavity vacuum and a (truncated, renormalized) thermal mechanical state of
// occupation n_initial. Throws TruncationBreach if a top Fock level becomes
// populated above fc.breach_threshold.
FockReference fock_reference_moments(const MeanFieldTrajectory& traj, const SystemParams& p, const FockConfig& fc,
                                     double n_initial);

} // namespace optosqueeze

namespace optosqueeze {

// Smooth validation drive: omega = peak sin^2(pi t/T), phi = 0.5 sin(2 pi t/T).
Pulse validation_pulse(double t_final, std::size_t n_bins, double peak_omega);

struct OracleComparison {
    double max_rel_error = 0.0; // max |x - x_fock| / max(|x_fock|, floor)
    double max_coupling = 0.0;  // max |G| along the trajectory
    FockReference reference;
    MomentTrajectory moments;
};

// Runs both integrators on the same mean-field trajectory and compares all ten
// moments at every grid point.
OracleComparison compare_with_oracle(const Pulse& pulse, const SystemParams& p, const FockConfig& fc,
                                     const SimulationOptions& sim = {}, double floor = 1e-4);

} // namespace optosqueeze
