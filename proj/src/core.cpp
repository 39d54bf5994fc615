#include "optosqueeze/core.hpp"

#include <algorithm>
#include <cmath>

namespace optosqueeze {

std::string_view to_string(ErrorKind kind) noexcept {
    switch (kind) {
    case ErrorKind::InvalidParameter: return "invalid-parameter";
    case ErrorKind::Overflow: return "overflow";
    case ErrorKind::IllConditioned: return "ill-conditioned";
    case ErrorKind::Nonphysical: return "nonphysical";
    case ErrorKind::Domain: return "domain";
    case ErrorKind::SingularCovariance: return "singular-covariance";
    case ErrorKind::Diverged: return "diverged";
    case ErrorKind::TruncationBreach: return "truncation-breach";
    case ErrorKind::Config: return "config";
    }
    return "unknown";
}

Error::Error(ErrorKind kind, const std::string& message, std::string field)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message),
      kind_(kind),
      field_(std::move(field)) {}

namespace {

void require(bool ok, const char* field, const std::string& why) {
    if (!ok) {
        throw Error(ErrorKind::InvalidParameter, std::string(field) + " " + why, field);
    }
}

} // namespace

void validate_params(const SystemParams& p) {
    require(std::isfinite(p.omega_m) && p.omega_m > 0.0, "omega_m", "must be positive");
    require(std::isfinite(p.g0) && p.g0 >= 0.0, "g0", "must be non-negative");
    require(std::isfinite(p.kappa) && p.kappa > 0.0, "kappa", "must be positive");
    require(std::isfinite(p.gamma) && p.gamma >= 0.0, "gamma", "must be non-negative");
    require(std::isfinite(p.delta_c), "delta_c", "must be finite");
    require(std::isfinite(p.n_bar_m) && p.n_bar_m >= 0.0, "n_bar_m", "must be non-negative");
}

Pulse Pulse::constant(double t_final, std::size_t n_bins, double omega, double phi) {
    return Pulse(t_final, std::vector<double>(n_bins, omega), std::vector<double>(n_bins, phi));
}

void validate_pulse(const Pulse& pulse) {
    require(std::isfinite(pulse.t_final) && pulse.t_final > 0.0, "t_final", "must be positive");
    require(pulse.omega.size() >= 2, "n_bins", "must be at least 2");
    require(pulse.phi.size() == pulse.omega.size(), "phi", "must have n_bins entries");
    const auto finite = [](double v) { return std::isfinite(v); };
    require(std::all_of(pulse.omega.begin(), pulse.omega.end(), finite), "omega", "must be finite");
    require(std::all_of(pulse.phi.begin(), pulse.phi.end(), finite), "phi", "must be finite");
}

double max_abs(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

bool MeanFieldState::finite() const noexcept {
    return std::isfinite(alpha.real()) && std::isfinite(alpha.imag()) &&
           std::isfinite(beta.real()) && std::isfinite(beta.imag());
}

double conjugacy_tolerance(const MomentVector& x) { return 1e-9 * (1.0 + x.norm()); }

double conjugacy_violation(const MomentVector& x) {
    double worst = 0.0;
    const auto pair = [&](int i, int j) { worst = std::max(worst, std::abs(x[j] - std::conj(x[i]))); };
    pair(kAdAd, kAA);
    pair(kBdBd, kBB);
    pair(kAdB, kABd);
    pair(kAdBd, kAB);
    worst = std::max(worst, std::abs(x[kAdA].imag()));
    worst = std::max(worst, std::abs(x[kBdB].imag()));
    worst = std::max(worst, -x[kAdA].real());
    worst = std::max(worst, -x[kBdB].real());
    return worst / conjugacy_tolerance(x);
}

bool satisfies_moment_invariants(const MomentVector& x) {
    return x.allFinite() && conjugacy_violation(x) <= 1.0;
}

MomentVector symmetrize(const MomentVector& x) {
    MomentVector y = x;
    const auto pair = [&](int i, int j) {
        const cd m = 0.5 * (x[i] + std::conj(x[j]));
        y[i] = m;
        y[j] = std::conj(m);
    };
    pair(kAdAd, kAA);
    pair(kBdBd, kBB);
    pair(kAdB, kABd);
    pair(kAdBd, kAB);
    y[kAdA] = x[kAdA].real();
    y[kBdB] = x[kBdB].real();
    return y;
}

MomentVector thermal_moments(double n_bar_mech) {
    MomentVector x = MomentVector::Zero();
    x[kBdB] = n_bar_mech;
    return x;
}

MomentVector thermal_initial_moments(const SystemParams& p) { return thermal_moments(p.n_bar_m); }

} // namespace optosqueeze
