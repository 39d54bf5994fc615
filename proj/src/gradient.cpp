#include "optosqueeze/gradient.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace optosqueeze {

namespace {

constexpr cd kI{0.0, 1.0};

using Vec4 = Eigen::Matrix<cd, 4, 1>;

// B^T y for the sensitivity matrix at (mf, x), without forming B.
Vec4 sensitivity_transpose_apply(const MomentVector& y, const MeanFieldState&, const MomentVector& x,
                                 const SystemParams& p) {
    const auto [yg, ygc] = coupling_bilinear(y, x);
    cd yd{0.0, 0.0};
    const auto& dd = detuning_derivative();
    for (int i = 0; i < 10; ++i) yd += y[i] * dd(i, i) * x[i];
    Vec4 r;
    r[0] = p.g0 * (yg - kI * y[kAB]);
    r[2] = p.g0 * (ygc + kI * y[kAdBd]);
    r[1] = p.g0 * yd;
    r[3] = r[1];
    return r;
}

// Forward run in extended precision, used by the finite-difference oracle.
// The loss is O(n_bar_m) while per-bin changes can be nine orders smaller, so
// double-precision roundoff in the loss would dominate small differences. The
// discretization (RK4 with Hermite mean fields at the stage midpoints) is the
// same as in the double-precision integrators.
using xd = long double;
using xc = std::complex<xd>;
using XMoments = Eigen::Matrix<xc, 10, 1>;
using XDrift = Eigen::Matrix<xc, 10, 10>;

struct XState {
    xc alpha;
    xc beta;
};

XState operator+(const XState& a, const XState& b) { return {a.alpha + b.alpha, a.beta + b.beta}; }
XState operator*(xd h, const XState& a) { return {h * a.alpha, h * a.beta}; }

xd final_loss_extended_raw(const Pulse& pulse, const SystemParams& p, const LossWeights& w,
                           const SimulationOptions& opts) {
    validate_pulse(pulse);
    const xc i1{0.0L, 1.0L};
    const xd g0 = p.g0, kappa = p.kappa, gamma = p.gamma, wm = p.omega_m;
    const XDrift cg = coupling_matrix_g().cast<xc>();
    const XDrift cgc = coupling_matrix_gc().cast<xc>();

    const auto delta_of = [&](const XState& s) { return xd(p.delta_c) + 2.0L * g0 * s.beta.real(); };
    const auto mf_rhs = [&](const XState& s, const xc& drive) {
        return XState{-xc(0.5L * kappa, delta_of(s)) * s.alpha + drive,
                      -xc(0.5L * gamma, wm) * s.beta - i1 * g0 * std::norm(s.alpha)};
    };
    const auto mom_rhs = [&](const XMoments& x, const XState& s) {
        const xc g = g0 * s.alpha;
        const xd delta = delta_of(s);
        XMoments r = g * (cg * x) + std::conj(g) * (cgc * x);
        const xc diag[10] = {xc(-kappa), xc(-gamma), xc(-0.5L * (kappa + gamma), delta - wm),
                             xc(-0.5L * (kappa + gamma), -(delta - wm)), xc(-kappa, 2.0L * delta),
                             xc(-0.5L * (kappa + gamma), delta + wm), xc(-gamma, 2.0L * wm),
                             xc(-kappa, -2.0L * delta), xc(-0.5L * (kappa + gamma), -(delta + wm)),
                             xc(-gamma, -2.0L * wm)};
        for (int i = 0; i < 10; ++i) r[i] += diag[i] * x[i];
        r[kBdB] += gamma * xd(p.n_bar_m);
        r[kAdBd] += i1 * std::conj(g);
        r[kAB] -= i1 * g;
        return r;
    };

    const std::size_t spb = opts.integrator.steps_per_bin;
    if (spb == 0) throw Error(ErrorKind::InvalidParameter, "steps_per_bin must be positive", "steps_per_bin");
    const xd h = xd(pulse.t_final) / xd(pulse.n_bins() * spb);
    XState y{xc(opts.mf0.alpha.real(), opts.mf0.alpha.imag()), xc(opts.mf0.beta.real(), opts.mf0.beta.imag())};
    XMoments x = opts.initial_moments(p).cast<xc>();
    for (std::size_t k = 0; k < pulse.n_bins(); ++k) {
        const xc drive = i1 * xd(pulse.omega[k]) * std::polar(1.0L, -xd(pulse.phi[k]));
        for (std::size_t j = 0; j < spb; ++j) {
            const XState k1 = mf_rhs(y, drive);
            const XState k2 = mf_rhs(y + (0.5L * h) * k1, drive);
            const XState k3 = mf_rhs(y + (0.5L * h) * k2, drive);
            const XState k4 = mf_rhs(y + h * k3, drive);
            const XState next = y + (h / 6.0L) * (k1 + 2.0L * k2 + 2.0L * k3 + k4);
            const XState f1 = mf_rhs(next, drive);
            // Cubic Hermite midpoint.
            const XState mid = 0.5L * (y + next) + (h / 8.0L) * (k1 + (-1.0L) * f1);

            const XMoments m1 = mom_rhs(x, y);
            const XMoments m2 = mom_rhs(x + (0.5L * h) * m1, mid);
            const XMoments m3 = mom_rhs(x + (0.5L * h) * m2, mid);
            const XMoments m4 = mom_rhs(x + h * m3, next);
            x += (h / 6.0L) * (m1 + 2.0L * m2 + 2.0L * m3 + m4);
            y = next;
        }
        if (!x.allFinite() || std::abs(y.alpha) > xd(kOverflowLimit)) {
            throw Error(ErrorKind::Overflow, "finite-difference forward run overflowed");
        }
    }
    // loss = constant + Re(c . x)
    const MomentVector c = w.moment_weights();
    xc acc{0.0L, 0.0L};
    for (int i = 0; i < 10; ++i) acc += xc(c[i].real(), c[i].imag()) * x[i];
    return xd(w.constant()) + acc.real();
}

void record(double& out, cd z, double& residue) {
    out = z.real();
    residue = std::max(residue, std::abs(z.imag()) / (1.0 + std::abs(z.real())));
}

} // namespace

std::string_view to_string(GradientMode mode) noexcept {
    switch (mode) {
    case GradientMode::PaperPointwise: return "paper-pointwise";
    case GradientMode::FullChain: return "full-chain";
    case GradientMode::FiniteDifference: return "finite-difference";
    }
    return "unknown";
}

GradientMode parse_gradient_mode(std::string_view name) {
    if (name == "paper" || name == "paper-pointwise") return GradientMode::PaperPointwise;
    if (name == "full" || name == "full-chain") return GradientMode::FullChain;
    if (name == "fd" || name == "finite-difference") return GradientMode::FiniteDifference;
    throw Error(ErrorKind::Config, "unknown gradient mode '" + std::string(name) + "'", "grad_mode");
}

LossWeights LossWeights::quadrature(double theta) {
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    return {c * c, s * s, std::sin(2.0 * theta)};
}

MomentVector LossWeights::moment_weights() const {
    MomentVector c = MomentVector::Zero();
    c[kBdB] = v33 + v44;
    c[kBdBd] = cd(0.5 * (v33 - v44), 0.5 * v34);
    c[kBB] = cd(0.5 * (v33 - v44), -0.5 * v34);
    return c;
}

bool ControlGradient::all_zero() const {
    const auto zero = [](double v) { return v == 0.0; };
    return std::all_of(d_omega.begin(), d_omega.end(), zero) && std::all_of(d_phi.begin(), d_phi.end(), zero);
}

KickVector control_kick(double omega, double phi, ControlKind which, KickWeight weight) {
    const double scale = weight == KickWeight::Half ? 0.5 : 1.0;
    const cd e_minus = std::polar(1.0, -phi);
    const cd e_plus = std::polar(1.0, phi);
    KickVector k = KickVector::Zero();
    if (which == ControlKind::Amplitude) {
        k[0] = scale * kI * e_minus;
        k[2] = -scale * kI * e_plus;
    } else {
        k[0] = scale * omega * e_minus;
        k[2] = scale * omega * e_plus;
    }
    return k;
}

SensitivityMatrix sensitivity_matrix(const MeanFieldState&, const MomentVector& x, const SystemParams& p) {
    SensitivityMatrix b;
    MomentVector col_g = coupling_matrix_g() * x;
    col_g[kAB] += -kI;
    MomentVector col_gc = coupling_matrix_gc() * x;
    col_gc[kAdBd] += kI;
    const MomentVector col_d = detuning_derivative() * x;
    b.col(0) = p.g0 * col_g;
    b.col(1) = p.g0 * col_d;
    b.col(2) = p.g0 * col_gc;
    b.col(3) = p.g0 * col_d;
    return b;
}

double final_loss(const Pulse& pulse, const SystemParams& p, const LossWeights& w, const SimulationOptions& opts) {
    const MeanFieldTrajectory traj = integrate_meanfield(pulse, p, opts.mf0, opts.integrator);
    return w.evaluate(final_moments(traj, p, opts.initial_moments(p)));
}

ControlGradient finite_difference_gradient(const Pulse& pulse, const SystemParams& p, const LossWeights& w,
                                           double h_rel, const SimulationOptions& opts) {
    if (!(h_rel > 1e-8 && h_rel < 1e-2)) {
        throw Error(ErrorKind::InvalidParameter, "h_rel must lie in (1e-8, 1e-2)", "h_rel");
    }
    ControlGradient g;
    g.mode = GradientMode::FiniteDifference;
    g.d_omega.resize(pulse.n_bins());
    g.d_phi.resize(pulse.n_bins());
    Pulse probe = pulse;
    const auto central = [&](std::vector<double>& q, std::size_t k) {
        const double q0 = q[k];
        const double h = h_rel * std::max(1.0, std::abs(q0));
        q[k] = q0 + h;
        const xd up = final_loss_extended_raw(probe, p, w, opts);
        q[k] = q0 - h;
        const xd down = final_loss_extended_raw(probe, p, w, opts);
        q[k] = q0;
        return static_cast<double>((up - down) / (2.0L * xd(h)));
    };
    for (std::size_t k = 0; k < pulse.n_bins(); ++k) {
        g.d_omega[k] = central(probe.omega, k);
        g.d_phi[k] = central(probe.phi, k);
    }
    return g;
}

ControlGradient loss_gradient(const Pulse& pulse, const SystemParams& p, const LossWeights& w, GradientMode mode,
                              const SimulationOptions& opts, double h_rel) {
    double loss = 0.0;
    return loss_gradient(pulse, p, w, mode, opts, h_rel, loss);
}

ControlGradient loss_gradient(const Pulse& pulse, const SystemParams& p, const LossWeights& w, GradientMode mode,
                              const SimulationOptions& opts, double h_rel, double& loss_out) {
    if (mode == GradientMode::FiniteDifference) {
        loss_out = final_loss(pulse, p, w, opts);
        return finite_difference_gradient(pulse, p, w, h_rel, opts);
    }

    const Simulation sim = simulate(pulse, p, opts);
    const MeanFieldTrajectory& traj = sim.meanfield;
    const std::vector<MomentVector>& xs = sim.moments.moments;
    loss_out = w.evaluate(xs.back());

    const TimeGrid& grid = traj.grid;
    const std::size_t n_bins = grid.n_bins;
    const std::size_t spb = grid.steps_per_bin;
    const double h = grid.dt();
    const double bw = pulse.bin_width();

    ControlGradient out;
    out.mode = mode;
    out.d_omega.resize(n_bins);
    out.d_phi.resize(n_bins);

    // Backward sweep of
    //   lambda' = -M^T lambda,                 lambda(T) = c
    //   mu'     = -W^T mu - B^T lambda,        mu(T) = 0
    //   J'      = -mu,                         J(T) = 0
    // so that dL/dQ_k = Re( (J(t_k) - J(t_k+1)) . k_full ).
    struct Adjoint {
        MomentVector lambda;
        Vec4 mu;
        Vec4 j;
    };
    const auto rhs = [&](const Adjoint& y, const MeanFieldState& mf, const MomentVector& x) {
        Adjoint d;
        d.lambda = -apply_drift_transpose(y.lambda, coupling(mf, p), detuning(mf, p), p);
        d.mu = -meanfield_jacobian(mf, p).transpose() * y.mu - sensitivity_transpose_apply(y.lambda, mf, x, p);
        d.j = -y.mu;
        return d;
    };
    const auto axpy = [](const Adjoint& y, double a, const Adjoint& d) {
        return Adjoint{y.lambda + a * d.lambda, y.mu + a * d.mu, y.j + a * d.j};
    };

    Adjoint y{w.moment_weights(), Vec4::Zero(), Vec4::Zero()};

    // Pointwise densities lambda(t)^T B(t) at each bin boundary.
    std::vector<Vec4> boundary_lb(n_bins + 1);
    boundary_lb[n_bins] = sensitivity_transpose_apply(y.lambda, traj.states.back(), xs.back(), p);

    Vec4 j_bin_end = Vec4::Zero();
    MomentVector f_right = moment_rhs(xs.back(), traj.states.back(), p);
    for (std::size_t n = grid.n_steps(); n-- > 0;) {
        const MeanFieldState& mf_r = traj.states[n + 1];
        const MeanFieldState& mf_l = traj.states[n];
        const MeanFieldState mf_m = traj.midpoint(n);
        const MomentVector f_left = moment_rhs(xs[n], mf_l, p);
        const MomentVector x_m = 0.5 * (xs[n] + xs[n + 1]) + (h / 8.0) * (f_left - f_right);

        if (mode == GradientMode::FullChain) {
            const Adjoint k1 = rhs(y, mf_r, xs[n + 1]);
            const Adjoint k2 = rhs(axpy(y, -0.5 * h, k1), mf_m, x_m);
            const Adjoint k3 = rhs(axpy(y, -0.5 * h, k2), mf_m, x_m);
            const Adjoint k4 = rhs(axpy(y, -h, k3), mf_l, xs[n]);
            y.lambda -= (h / 6.0) * (k1.lambda + 2.0 * k2.lambda + 2.0 * k3.lambda + k4.lambda);
            y.mu -= (h / 6.0) * (k1.mu + 2.0 * k2.mu + 2.0 * k3.mu + k4.mu);
            y.j -= (h / 6.0) * (k1.j + 2.0 * k2.j + 2.0 * k3.j + k4.j);
        } else {
            const auto lam_rhs = [&](const MomentVector& l, const MeanFieldState& mf) -> MomentVector {
                return -apply_drift_transpose(l, coupling(mf, p), detuning(mf, p), p);
            };
            const MomentVector k1 = lam_rhs(y.lambda, mf_r);
            const MomentVector k2 = lam_rhs(y.lambda - 0.5 * h * k1, mf_m);
            const MomentVector k3 = lam_rhs(y.lambda - 0.5 * h * k2, mf_m);
            const MomentVector k4 = lam_rhs(y.lambda - h * k3, mf_l);
            y.lambda -= (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        f_right = f_left;

        if (n % spb == 0) {
            const std::size_t k = n / spb;
            if (!y.lambda.allFinite() || y.lambda.norm() > kPropagatorLimit) {
                throw Error(ErrorKind::IllConditioned, "adjoint norm exceeded 1e14 at t=" + std::to_string(grid.time(n)));
            }
            const double om = pulse.omega[k];
            const double ph = pulse.phi[k];
            if (mode == GradientMode::FullChain) {
                const Vec4 integral = y.j - j_bin_end;
                j_bin_end = y.j;
                record(out.d_omega[k], integral.cwiseProduct(control_kick(om, ph, ControlKind::Amplitude, KickWeight::Full)).sum(),
                       out.imag_residue);
                record(out.d_phi[k], integral.cwiseProduct(control_kick(om, ph, ControlKind::Phase, KickWeight::Full)).sum(),
                       out.imag_residue);
            } else {
                boundary_lb[k] = sensitivity_transpose_apply(y.lambda, mf_l, xs[n], p);
                const Vec4 avg = 0.5 * bw * (boundary_lb[k] + boundary_lb[k + 1]);
                record(out.d_omega[k], avg.cwiseProduct(control_kick(om, ph, ControlKind::Amplitude, KickWeight::Half)).sum(),
                       out.imag_residue);
                record(out.d_phi[k], avg.cwiseProduct(control_kick(om, ph, ControlKind::Phase, KickWeight::Half)).sum(),
                       out.imag_residue);
            }
        }
    }
    return out;
}

// ------------------------------------------------------------------ propagator routes

MomentVariation moment_variation_pointwise(const Pulse& pulse, const SystemParams& p, const SimulationOptions& opts) {
    const Simulation sim = simulate(pulse, p, opts);
    const PropagatorGrid phi = propagator_moments(sim.meanfield, p);
    const std::size_t n_bins = pulse.n_bins();
    const std::size_t spb = sim.meanfield.grid.steps_per_bin;
    const double bw = pulse.bin_width();

    std::vector<Eigen::Matrix<cd, 10, 4>> pb(n_bins + 1);
    for (std::size_t k = 0; k <= n_bins; ++k) {
        const std::size_t n = k * spb;
        pb[k] = phi.mats[k] * sensitivity_matrix(sim.meanfield.states[n], sim.moments.moments[n], p);
    }
    MomentVariation var;
    var.d_omega.resize(n_bins);
    var.d_phi.resize(n_bins);
    for (std::size_t k = 0; k < n_bins; ++k) {
        const auto ka = control_kick(pulse.omega[k], pulse.phi[k], ControlKind::Amplitude, KickWeight::Half);
        const auto kp = control_kick(pulse.omega[k], pulse.phi[k], ControlKind::Phase, KickWeight::Half);
        var.d_omega[k] = 0.5 * bw * (pb[k] * ka + pb[k + 1] * ka);
        var.d_phi[k] = 0.5 * bw * (pb[k] * kp + pb[k + 1] * kp);
    }
    return var;
}

MomentVariation moment_variation_full_chain(const Pulse& pulse, const SystemParams& p, const SimulationOptions& opts) {
    const Simulation sim = simulate(pulse, p, opts);
    const PropagatorGrid phi = propagator_moments(sim.meanfield, p);
    const PropagatorGrid lam = propagator_meanfield(sim.meanfield, p);
    const std::size_t n_bins = pulse.n_bins();
    const std::size_t spb = sim.meanfield.grid.steps_per_bin;
    const double bw = pulse.bin_width();

    // R(t_k) = int_{t_k}^T Phi(T,tau) B(tau) Lambda(tau) dtau, trapezoidal on bin boundaries.
    using Mat104 = Eigen::Matrix<cd, 10, 4>;
    std::vector<Mat104> integrand(n_bins + 1);
    for (std::size_t k = 0; k <= n_bins; ++k) {
        const std::size_t n = k * spb;
        integrand[k] = phi.mats[k] * sensitivity_matrix(sim.meanfield.states[n], sim.moments.moments[n], p) * lam.mats[k];
    }
    std::vector<Mat104> r_times_inv(n_bins + 1);
    Mat104 r = Mat104::Zero();
    r_times_inv[n_bins] = r;
    for (std::size_t k = n_bins; k-- > 0;) {
        r += 0.5 * bw * (integrand[k] + integrand[k + 1]);
        r_times_inv[k] = r * lam.inverses[k];
    }

    MomentVariation var;
    var.d_omega.resize(n_bins);
    var.d_phi.resize(n_bins);
    for (std::size_t k = 0; k < n_bins; ++k) {
        const auto ka = control_kick(pulse.omega[k], pulse.phi[k], ControlKind::Amplitude, KickWeight::Full);
        const auto kp = control_kick(pulse.omega[k], pulse.phi[k], ControlKind::Phase, KickWeight::Full);
        const Mat104 avg = 0.5 * bw * (r_times_inv[k] + r_times_inv[k + 1]);
        var.d_omega[k] = avg * ka;
        var.d_phi[k] = avg * kp;
    }
    return var;
}

ControlGradient contract(const MomentVariation& var, const LossWeights& w, GradientMode mode) {
    const MomentVector c = w.moment_weights();
    ControlGradient g;
    g.mode = mode;
    g.d_omega.resize(var.d_omega.size());
    g.d_phi.resize(var.d_phi.size());
    for (std::size_t k = 0; k < var.d_omega.size(); ++k) {
        record(g.d_omega[k], c.cwiseProduct(var.d_omega[k]).sum(), g.imag_residue);
        record(g.d_phi[k], c.cwiseProduct(var.d_phi[k]).sum(), g.imag_residue);
    }
    return g;
}

GradientComparison compare(const ControlGradient& candidate, const ControlGradient& reference) {
    GradientComparison cmp;
    double dot = 0.0;
    double n1 = 0.0;
    double n2 = 0.0;
    const auto visit = [&](const std::vector<double>& a, const std::vector<double>& b) {
        for (std::size_t k = 0; k < a.size(); ++k) {
            dot += a[k] * b[k];
            n1 += a[k] * a[k];
            n2 += b[k] * b[k];
            const double scale = std::max(std::abs(a[k]), std::abs(b[k]));
            if (scale < 1e-12) continue;
            cmp.max_rel_error = std::max(cmp.max_rel_error, std::abs(a[k] - b[k]) / scale);
        }
    };
    visit(candidate.d_omega, reference.d_omega);
    visit(candidate.d_phi, reference.d_phi);
    cmp.cosine = (n1 > 0.0 && n2 > 0.0) ? dot / std::sqrt(n1 * n2) : 0.0;
    return cmp;
}

} // namespace optosqueeze
