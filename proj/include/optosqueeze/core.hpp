// core.hpp: domain types shared by the simulator, gradient engine and optimizer.
//
// Units: every rate is stored in units of the mechanical frequency omega_m and
// every time in units of 1/omega_m.

#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace optosqueeze {

using cd = std::complex<double>;

// ------------------------------------------------------------------ errors

enum class ErrorKind {
    InvalidParameter,
    Overflow,
    IllConditioned,
    Nonphysical,
    Domain,
    SingularCovariance,
    Diverged,
    TruncationBreach,
    Config,
};

std::string_view to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message, std::string field = {});

    ErrorKind kind() const noexcept { return kind_; }
    // Name of the offending field for InvalidParameter / Config errors.
    const std::string& field() const noexcept { return field_; }

private:
    ErrorKind kind_;
    std::string field_;
};

// ------------------------------------------------------------------ params

struct SystemParams {
    double omega_m = 1.0;   // mechanical frequency, the unit of all rates
    double g0 = 4e-5;       // single-photon coupling
    double kappa = 0.2;     // cavity damping
    double gamma = 2e-6;    // mechanical damping
    double delta_c = 1.0;   // bare detuning omega_c - omega_L
    double n_bar_m = 100.0; // bath occupation
};

// Throws Error(InvalidParameter, field) on the first violated invariant.
void validate_params(const SystemParams& p);

// ------------------------------------------------------------------ pulse

// Piecewise-constant drive on n_bins uniform bins over [0, t_final].
// Negative amplitudes are allowed (equivalent to a phase shift of pi) and the
// phase is kept unwrapped.
struct Pulse {
    double t_final = 0.0;
    std::vector<double> omega;
    std::vector<double> phi;

    Pulse() = default;
    Pulse(double t_final_, std::vector<double> omega_, std::vector<double> phi_)
        : t_final(t_final_), omega(std::move(omega_)), phi(std::move(phi_)) {}

    static Pulse constant(double t_final, std::size_t n_bins, double omega, double phi);
    static Pulse zero(double t_final, std::size_t n_bins) { return constant(t_final, n_bins, 0.0, 0.0); }

    std::size_t n_bins() const noexcept { return omega.size(); }
    double bin_width() const noexcept { return t_final / static_cast<double>(omega.size()); }
    double bin_start(std::size_t k) const noexcept { return bin_width() * static_cast<double>(k); }
};

void validate_pulse(const Pulse& pulse);

// Largest |v_i|, 0 for an empty vector.
double max_abs(const std::vector<double>& v);

// ------------------------------------------------------------------ states

struct MeanFieldState {
    cd alpha{0.0, 0.0}; // cavity displacement
    cd beta{0.0, 0.0};  // mechanical displacement

    bool finite() const noexcept;
};

// Linearized coupling G = g0 * alpha.
inline cd coupling(const MeanFieldState& s, const SystemParams& p) { return p.g0 * s.alpha; }
// Effective detuning Delta_c + g0 (beta + beta*).
inline double detuning(const MeanFieldState& s, const SystemParams& p) {
    return p.delta_c + 2.0 * p.g0 * s.beta.real();
}

// The ten second-order moments of the displaced fluctuations, in the fixed
// ordering given by the Moment enumerators.
template <typename Scalar>
using MomentVectorT = Eigen::Matrix<std::complex<Scalar>, 10, 1>;
using MomentVector = MomentVectorT<double>;

// Index names: Ad = a-dagger, Bd = b-dagger.
enum Moment : int {
    kAdA = 0,
    kBdB = 1,
    kAdB = 2,
    kABd = 3,
    kAdAd = 4,
    kAdBd = 5,
    kBdBd = 6,
    kAA = 7,
    kAB = 8,
    kBB = 9,
};

template <typename Scalar>
using CovarianceMatrixT = Eigen::Matrix<Scalar, 4, 4>; // over (Xa, Ya, Xb, Yb)
using CovarianceMatrix = CovarianceMatrixT<double>;

// Tolerance used for the conjugate-pair invariants: 1e-9 (1 + |x|).
double conjugacy_tolerance(const MomentVector& x);

// Largest violation of the conjugate-pair and reality invariants, relative to
// conjugacy_tolerance(x); values <= 1 satisfy the invariants.
double conjugacy_violation(const MomentVector& x);
bool satisfies_moment_invariants(const MomentVector& x);

// Restores exact conjugacy by averaging each pair.
MomentVector symmetrize(const MomentVector& x);

// Uncorrelated state: cavity vacuum and mechanics thermal at the bath occupation.
MomentVector thermal_initial_moments(const SystemParams& p);
MomentVector thermal_moments(double n_bar_mech);

} // namespace optosqueeze
