// gradient.hpp: derivatives of the final-time mechanical variance with respect
// to the per-bin drive amplitude and phase.
//
// Three routes are provided:
//   PaperPointwise   - the instantaneous formula Phi(T,s) B(s) k_half(s), which
//                      ignores how alpha(tau), beta(tau) for tau > s respond to
//                      the control at s. Diagnostic only.
//   FullChain        - keeps that response through the mean-field propagator.
//                      Evaluated by one backward sweep of the moment and
//                      mean-field adjoints, O(n_steps).
//   FiniteDifference - central differences of the end-to-end loss.

#pragma once

#include "optosqueeze/analysis.hpp"
#include "optosqueeze/dynamics.hpp"

#include <string_view>
#include <vector>

namespace optosqueeze {

enum class GradientMode { PaperPointwise, FullChain, FiniteDifference };

std::string_view to_string(GradientMode mode) noexcept;
// Accepts "paper", "full" and "fd" (and the long names).
GradientMode parse_gradient_mode(std::string_view name);

// Linear functional w33 V33 + w44 V44 + w34 V34 of the mechanical covariance
// block at the final time.
struct LossWeights {
    double v33 = 0.0;
    double v44 = 0.0;
    double v34 = 0.0;

    // The rotating-quadrature variance at angle theta.
    static LossWeights quadrature(double theta);

    double evaluate(const CovarianceMatrix& v) const { return v33 * v(2, 2) + v44 * v(3, 3) + v34 * v(2, 3); }
    double evaluate(const MomentVector& x) const { return evaluate(covariance_from_moments(x)); }

    // loss = constant() + Re(moment_weights() . x) for conjugacy-consistent x.
    MomentVector moment_weights() const;
    double constant() const { return 0.5 * (v33 + v44); }
};

struct ControlGradient {
    std::vector<double> d_omega;
    std::vector<double> d_phi;
    GradientMode mode = GradientMode::FullChain;
    // Largest imaginary part left over after contracting conjugate moment
    // pairs, relative to 1 + |value|.
    double imag_residue = 0.0;

    std::size_t n_bins() const noexcept { return d_omega.size(); }
    bool all_zero() const;
};

// Mean-field response to a delta kick of one control at time s, ordered
// (d alpha, d beta, d alpha*, d beta*).
using KickVector = Eigen::Matrix<cd, 4, 1>;
enum class ControlKind { Amplitude, Phase };
enum class KickWeight { Half, Full };

KickVector control_kick(double omega, double phi, ControlKind which, KickWeight weight);

// Column j is the derivative of M x + N with respect to mean-field component j
// of (alpha, beta, alpha*, beta*), treating alpha and alpha* as independent.
using SensitivityMatrix = Eigen::Matrix<cd, 10, 4>;
SensitivityMatrix sensitivity_matrix(const MeanFieldState& mf, const MomentVector& x, const SystemParams& p);

double final_loss(const Pulse& pulse, const SystemParams& p, const LossWeights& w,
                  const SimulationOptions& opts = {});

ControlGradient loss_gradient(const Pulse& pulse, const SystemParams& p, const LossWeights& w, GradientMode mode,
                              const SimulationOptions& opts = {}, double h_rel = 1e-4);

// Gradient and loss from the same forward pass.
ControlGradient loss_gradient(const Pulse& pulse, const SystemParams& p, const LossWeights& w, GradientMode mode,
                              const SimulationOptions& opts, double h_rel, double& loss_out);

// Central differences with step h_rel * max(1, |Q_k|). The differenced loss is
// evaluated in extended precision so that small per-bin changes are not lost
// in the roundoff of an O(n_bar_m) loss.
ControlGradient finite_difference_gradient(const Pulse& pulse, const SystemParams& p, const LossWeights& w,
                                           double h_rel, const SimulationOptions& opts = {});

// Per-bin variations dX(T)/dQ_k of all ten final moments, computed directly
// from the propagator grids (bin-boundary quadrature). Slower than
// loss_gradient; used to cross-check it and to dump full sensitivities.
struct MomentVariation {
    std::vector<MomentVector> d_omega;
    std::vector<MomentVector> d_phi;
};
MomentVariation moment_variation_pointwise(const Pulse& pulse, const SystemParams& p,
                                           const SimulationOptions& opts = {});
MomentVariation moment_variation_full_chain(const Pulse& pulse, const SystemParams& p,
                                            const SimulationOptions& opts = {});

// Contracts a moment variation with the loss weights.
ControlGradient contract(const MomentVariation& var, const LossWeights& w, GradientMode mode);

// Comparison metrics between two gradients.
struct GradientComparison {
    double max_rel_error = 0.0; // over entries where either |value| >= 1e-12
    double cosine = 0.0;        // of the concatenated (d_omega, d_phi) vectors
};
GradientComparison compare(const ControlGradient& candidate, const ControlGradient& reference);

} // namespace optosqueeze
