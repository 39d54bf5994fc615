#include "optosqueeze/dynamics.hpp"

#include <cmath>
#include <string>

namespace optosqueeze {

namespace {

constexpr cd kI{0.0, 1.0};

// Off-diagonal entries of the drift: M[row][col] += i * coeff * G (or conj(G)).
struct CouplingEntry {
    int row;
    int col;
    double coeff;
};

// Obtained from the Heisenberg equations of the linearized Hamiltonian
//   a' = -(i Delta + kappa/2) a - i G (b + b^dag)
//   b' = -(i omega_m + gamma/2) b - i (G a^dag + G* a)
// applied to each normally ordered product.
constexpr std::array<CouplingEntry, 16> kCouplingG{{
    {kAdA, kAdB, -1.0}, {kAdA, kAdBd, -1.0},
    {kBdB, kAdB, +1.0}, {kBdB, kAdBd, -1.0},
    {kAdB, kAdAd, -1.0},
    {kABd, kAdA, +1.0}, {kABd, kBdB, -1.0}, {kABd, kBdBd, -1.0},
    {kAdBd, kAdAd, +1.0},
    {kBdBd, kAdBd, +2.0},
    {kAA, kABd, -2.0}, {kAA, kAB, -2.0},
    {kAB, kAdA, -1.0}, {kAB, kBdB, -1.0}, {kAB, kBB, -1.0},
    {kBB, kAdB, -2.0},
}};

constexpr std::array<CouplingEntry, 16> kCouplingGc{{
    {kAdA, kABd, +1.0}, {kAdA, kAB, +1.0},
    {kBdB, kABd, -1.0}, {kBdB, kAB, +1.0},
    {kAdB, kAdA, -1.0}, {kAdB, kBdB, +1.0}, {kAdB, kBB, +1.0},
    {kABd, kAA, +1.0},
    {kAdAd, kAdB, +2.0}, {kAdAd, kAdBd, +2.0},
    {kAdBd, kAdA, +1.0}, {kAdBd, kBdB, +1.0}, {kAdBd, kBdBd, +1.0},
    {kBdBd, kABd, +2.0},
    {kAB, kAA, -1.0},
    {kBB, kAB, -2.0},
}};

// Multiplicity of Delta on the diagonal.
constexpr std::array<double, 10> kDetuningWeight{0, 0, 1, -1, 2, 1, 0, -2, -1, 0};

std::array<cd, 10> drift_diagonal(double delta, const SystemParams& p) {
    const double w = p.omega_m;
    const double k = p.kappa;
    const double g = p.gamma;
    const cd k1{-0.5 * (k + g), delta - w};
    const cd k2{-k, 2.0 * delta};
    const cd k3{-0.5 * (k + g), delta + w};
    const cd k4{-g, 2.0 * w};
    return {cd(-k), cd(-g), k1, std::conj(k1), k2, k3, k4, std::conj(k2), std::conj(k3), std::conj(k4)};
}

DriftMatrix build_coupling(const std::array<CouplingEntry, 16>& table) {
    DriftMatrix m = DriftMatrix::Zero();
    for (const auto& e : table) m(e.row, e.col) += kI * e.coeff;
    return m;
}

void check_overflow(const MeanFieldState& s, double t) {
    if (!s.finite() || std::abs(s.alpha) > kOverflowLimit || std::abs(s.beta) > kOverflowLimit) {
        throw Error(ErrorKind::Overflow, "mean field exceeded 1e12 at t=" + std::to_string(t));
    }
}

void check_overflow(const MomentVector& x, double t) {
    if (!x.allFinite() || x.cwiseAbs().maxCoeff() > kOverflowLimit) {
        throw Error(ErrorKind::Overflow, "moments exceeded 1e12 at t=" + std::to_string(t));
    }
}

void check_conditioning(const Eigen::MatrixXcd& m, double t) {
    if (!m.allFinite() || m.norm() > kPropagatorLimit) {
        throw Error(ErrorKind::IllConditioned, "propagator norm exceeded 1e14 at t=" + std::to_string(t));
    }
}

MeanFieldState axpy(const MeanFieldState& y, double h, const MeanFieldState& k) {
    return {y.alpha + h * k.alpha, y.beta + h * k.beta};
}

} // namespace

// ------------------------------------------------------------------ mean fields

MeanFieldState meanfield_rhs(const MeanFieldState& s, double omega, double phi, const SystemParams& p) {
    const double delta = detuning(s, p);
    const cd drive = kI * omega * std::polar(1.0, -phi);
    return {
        -cd(0.5 * p.kappa, delta) * s.alpha + drive,
        -cd(0.5 * p.gamma, p.omega_m) * s.beta - kI * p.g0 * std::norm(s.alpha),
    };
}

MeanFieldState meanfield_fixed_point(cd alpha, const SystemParams& p, double& omega, double& phi) {
    MeanFieldState s;
    s.alpha = alpha;
    s.beta = -kI * p.g0 * std::norm(alpha) / cd(0.5 * p.gamma, p.omega_m);
    // i Omega e^{-i phi} = (i Delta + kappa/2) alpha
    const cd drive = cd(0.5 * p.kappa, detuning(s, p)) * alpha / kI;
    omega = std::abs(drive);
    phi = -std::arg(drive);
    return s;
}

MeanFieldState MeanFieldTrajectory::at(std::size_t n, double s) const {
    const double h = grid.dt();
    const double s2 = s * s;
    const double s3 = s2 * s;
    const double h00 = 2 * s3 - 3 * s2 + 1;
    const double h10 = s3 - 2 * s2 + s;
    const double h01 = -2 * s3 + 3 * s2;
    const double h11 = s3 - s2;
    const MeanFieldState& y0 = states[n];
    const MeanFieldState& y1 = states[n + 1];
    const MeanFieldState& f0 = rate_left[n];
    const MeanFieldState& f1 = rate_right[n];
    return {
        h00 * y0.alpha + h10 * h * f0.alpha + h01 * y1.alpha + h11 * h * f1.alpha,
        h00 * y0.beta + h10 * h * f0.beta + h01 * y1.beta + h11 * h * f1.beta,
    };
}

MeanFieldTrajectory integrate_meanfield(const Pulse& pulse, const SystemParams& p, const MeanFieldState& mf0,
                                        const IntegratorConfig& cfg, double t0) {
    validate_pulse(pulse);
    if (cfg.steps_per_bin == 0) {
        throw Error(ErrorKind::InvalidParameter, "steps_per_bin must be positive", "steps_per_bin");
    }
    MeanFieldTrajectory traj;
    traj.grid = {t0, pulse.t_final, pulse.n_bins(), cfg.steps_per_bin};
    traj.drive = pulse;
    const std::size_t n_steps = traj.grid.n_steps();
    const double h = traj.grid.dt();
    traj.states.resize(n_steps + 1);
    traj.rate_left.resize(n_steps);
    traj.rate_right.resize(n_steps);

    check_overflow(mf0, t0);
    traj.states[0] = mf0;
    for (std::size_t n = 0; n < n_steps; ++n) {
        const std::size_t k = traj.grid.bin_of_step(n);
        const double om = pulse.omega[k];
        const double ph = pulse.phi[k];
        const MeanFieldState& y = traj.states[n];
        const MeanFieldState k1 = meanfield_rhs(y, om, ph, p);
        const MeanFieldState k2 = meanfield_rhs(axpy(y, 0.5 * h, k1), om, ph, p);
        const MeanFieldState k3 = meanfield_rhs(axpy(y, 0.5 * h, k2), om, ph, p);
        const MeanFieldState k4 = meanfield_rhs(axpy(y, h, k3), om, ph, p);
        MeanFieldState next{
            y.alpha + (h / 6.0) * (k1.alpha + 2.0 * k2.alpha + 2.0 * k3.alpha + k4.alpha),
            y.beta + (h / 6.0) * (k1.beta + 2.0 * k2.beta + 2.0 * k3.beta + k4.beta),
        };
        check_overflow(next, traj.grid.time(n + 1));
        traj.states[n + 1] = next;
        traj.rate_left[n] = k1;
        traj.rate_right[n] = meanfield_rhs(next, om, ph, p);
    }
    return traj;
}

MeanFieldTrajectory slice_bins(const MeanFieldTrajectory& traj, std::size_t bin_begin, std::size_t bin_end) {
    if (bin_begin >= bin_end || bin_end > traj.grid.n_bins) {
        throw Error(ErrorKind::InvalidParameter, "bin range out of bounds", "bins");
    }
    const std::size_t spb = traj.grid.steps_per_bin;
    const std::size_t s0 = bin_begin * spb;
    const std::size_t s1 = bin_end * spb;
    const double bw = traj.drive.bin_width();

    MeanFieldTrajectory out;
    out.grid = {traj.grid.time(s0), bw * static_cast<double>(bin_end - bin_begin), bin_end - bin_begin, spb};
    out.drive.t_final = out.grid.duration;
    out.drive.omega.assign(traj.drive.omega.begin() + bin_begin, traj.drive.omega.begin() + bin_end);
    out.drive.phi.assign(traj.drive.phi.begin() + bin_begin, traj.drive.phi.begin() + bin_end);
    out.states.assign(traj.states.begin() + s0, traj.states.begin() + s1 + 1);
    out.rate_left.assign(traj.rate_left.begin() + s0, traj.rate_left.begin() + s1);
    out.rate_right.assign(traj.rate_right.begin() + s0, traj.rate_right.begin() + s1);
    return out;
}

// ------------------------------------------------------------------ moments

const DriftMatrix& coupling_matrix_g() {
    static const DriftMatrix m = build_coupling(kCouplingG);
    return m;
}

const DriftMatrix& coupling_matrix_gc() {
    static const DriftMatrix m = build_coupling(kCouplingGc);
    return m;
}

const DriftMatrix& detuning_derivative() {
    static const DriftMatrix m = [] {
        DriftMatrix d = DriftMatrix::Zero();
        for (int i = 0; i < 10; ++i) d(i, i) = kI * kDetuningWeight[static_cast<std::size_t>(i)];
        return d;
    }();
    return m;
}

DriftMatrix drift_matrix(const MeanFieldState& mf, const SystemParams& p) {
    const cd g = coupling(mf, p);
    const auto diag = drift_diagonal(detuning(mf, p), p);
    DriftMatrix m = g * coupling_matrix_g() + std::conj(g) * coupling_matrix_gc();
    for (int i = 0; i < 10; ++i) m(i, i) += diag[static_cast<std::size_t>(i)];
    return m;
}

MomentVector inhomogeneous_term(const MeanFieldState& mf, const SystemParams& p) {
    MomentVector n = MomentVector::Zero();
    const cd g = coupling(mf, p);
    n[kBdB] = p.gamma * p.n_bar_m;
    n[kAdBd] = kI * std::conj(g);
    n[kAB] = -kI * g;
    return n;
}

MomentVector apply_drift(const MomentVector& x, cd g, double delta, const SystemParams& p) {
    const auto diag = drift_diagonal(delta, p);
    const cd ig = kI * g;
    const cd igc = kI * std::conj(g);
    MomentVector r;
    for (int i = 0; i < 10; ++i) r[i] = diag[static_cast<std::size_t>(i)] * x[i];
    for (const auto& e : kCouplingG) r[e.row] += e.coeff * ig * x[e.col];
    for (const auto& e : kCouplingGc) r[e.row] += e.coeff * igc * x[e.col];
    return r;
}

MomentVector apply_drift_transpose(const MomentVector& y, cd g, double delta, const SystemParams& p) {
    const auto diag = drift_diagonal(delta, p);
    const cd ig = kI * g;
    const cd igc = kI * std::conj(g);
    MomentVector r;
    for (int i = 0; i < 10; ++i) r[i] = diag[static_cast<std::size_t>(i)] * y[i];
    for (const auto& e : kCouplingG) r[e.col] += e.coeff * ig * y[e.row];
    for (const auto& e : kCouplingGc) r[e.col] += e.coeff * igc * y[e.row];
    return r;
}

std::array<cd, 2> coupling_bilinear(const MomentVector& y, const MomentVector& x) {
    cd sg{0.0, 0.0};
    cd sgc{0.0, 0.0};
    for (const auto& e : kCouplingG) sg += e.coeff * y[e.row] * x[e.col];
    for (const auto& e : kCouplingGc) sgc += e.coeff * y[e.row] * x[e.col];
    return {kI * sg, kI * sgc};
}

MomentVector moment_rhs(const MomentVector& x, const MeanFieldState& mf, const SystemParams& p) {
    const cd g = coupling(mf, p);
    MomentVector r = apply_drift(x, g, detuning(mf, p), p);
    r[kBdB] += p.gamma * p.n_bar_m;
    r[kAdBd] += kI * std::conj(g);
    r[kAB] -= kI * g;
    return r;
}

namespace {

template <typename Visitor>
void integrate_moments_impl(const MeanFieldTrajectory& traj, const SystemParams& p, const MomentVector& x0,
                            Visitor&& visit) {
    const std::size_t n_steps = traj.grid.n_steps();
    const double h = traj.grid.dt();
    MomentVector x = x0;
    check_overflow(x, traj.grid.t0);
    visit(std::size_t{0}, x);
    MeanFieldState left = traj.states[0];
    for (std::size_t n = 0; n < n_steps; ++n) {
        const MeanFieldState mid = traj.midpoint(n);
        const MeanFieldState& right = traj.states[n + 1];
        const MomentVector k1 = moment_rhs(x, left, p);
        const MomentVector k2 = moment_rhs(x + (0.5 * h) * k1, mid, p);
        const MomentVector k3 = moment_rhs(x + (0.5 * h) * k2, mid, p);
        const MomentVector k4 = moment_rhs(x + h * k3, right, p);
        x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if ((n & 63u) == 63u || n + 1 == n_steps) check_overflow(x, traj.grid.time(n + 1));
        visit(n + 1, x);
        left = right;
    }
}

} // namespace

MomentTrajectory integrate_moments(const MeanFieldTrajectory& traj, const SystemParams& p, const MomentVector& x0) {
    MomentTrajectory out;
    out.grid = traj.grid;
    out.moments.resize(traj.grid.n_steps() + 1);
    integrate_moments_impl(traj, p, x0, [&](std::size_t n, const MomentVector& x) { out.moments[n] = x; });
    return out;
}

MomentVector final_moments(const MeanFieldTrajectory& traj, const SystemParams& p, const MomentVector& x0) {
    MomentVector last;
    integrate_moments_impl(traj, p, x0, [&](std::size_t, const MomentVector& x) { last = x; });
    return last;
}

// ------------------------------------------------------------------ propagators

MeanFieldJacobian meanfield_jacobian(const MeanFieldState& mf, const SystemParams& p) {
    const double delta = detuning(mf, p);
    const cd ga = kI * p.g0 * mf.alpha;
    const cd gac = kI * p.g0 * std::conj(mf.alpha);
    const cd cav{-0.5 * p.kappa, -delta};
    const cd mech{-0.5 * p.gamma, -p.omega_m};
    MeanFieldJacobian w;
    // columns: d alpha, d beta, d alpha*, d beta*
    w << cav, -ga, 0.0, -ga,
        -gac, mech, -ga, 0.0,
        0.0, gac, std::conj(cav), gac,
        gac, 0.0, ga, std::conj(mech);
    return w;
}

PropagatorGrid propagator_moments(const MeanFieldTrajectory& traj, const SystemParams& p) {
    const TimeGrid& grid = traj.grid;
    const std::size_t n_steps = grid.n_steps();
    const double h = grid.dt();

    PropagatorGrid out;
    out.dim = 10;
    out.times.resize(grid.n_bins + 1);
    out.mats.resize(grid.n_bins + 1);
    for (std::size_t k = 0; k <= grid.n_bins; ++k) out.times[k] = grid.time(grid.step_of_bin(k));

    // d Phi(T, s)/ds = -Phi(T, s) M(s), integrated from s = T down to t0.
    DriftMatrix phi = DriftMatrix::Identity();
    out.mats[grid.n_bins] = phi;
    for (std::size_t n = n_steps; n-- > 0;) {
        const DriftMatrix m_right = drift_matrix(traj.states[n + 1], p);
        const DriftMatrix m_mid = drift_matrix(traj.midpoint(n), p);
        const DriftMatrix m_left = drift_matrix(traj.states[n], p);
        const DriftMatrix k1 = -phi * m_right;
        const DriftMatrix k2 = -(phi - 0.5 * h * k1) * m_mid;
        const DriftMatrix k3 = -(phi - 0.5 * h * k2) * m_mid;
        const DriftMatrix k4 = -(phi - h * k3) * m_left;
        phi -= (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if (n % grid.steps_per_bin == 0) {
            check_conditioning(phi, grid.time(n));
            out.mats[grid.bin_of_step(n)] = phi;
        }
    }
    return out;
}

PropagatorGrid propagator_meanfield(const MeanFieldTrajectory& traj, const SystemParams& p) {
    const TimeGrid& grid = traj.grid;
    const std::size_t n_steps = grid.n_steps();
    const double h = grid.dt();

    PropagatorGrid out;
    out.dim = 4;
    out.times.resize(grid.n_bins + 1);
    out.mats.resize(grid.n_bins + 1);
    out.inverses.resize(grid.n_bins + 1);
    for (std::size_t k = 0; k <= grid.n_bins; ++k) out.times[k] = grid.time(grid.step_of_bin(k));

    // Lambda' = W Lambda and (Lambda^-1)' = -Lambda^-1 W, both from the identity.
    MeanFieldJacobian lam = MeanFieldJacobian::Identity();
    MeanFieldJacobian inv = MeanFieldJacobian::Identity();
    out.mats[0] = lam;
    out.inverses[0] = inv;
    for (std::size_t n = 0; n < n_steps; ++n) {
        const MeanFieldJacobian w0 = meanfield_jacobian(traj.states[n], p);
        const MeanFieldJacobian wm = meanfield_jacobian(traj.midpoint(n), p);
        const MeanFieldJacobian w1 = meanfield_jacobian(traj.states[n + 1], p);

        const MeanFieldJacobian a1 = w0 * lam;
        const MeanFieldJacobian a2 = wm * (lam + 0.5 * h * a1);
        const MeanFieldJacobian a3 = wm * (lam + 0.5 * h * a2);
        const MeanFieldJacobian a4 = w1 * (lam + h * a3);
        lam += (h / 6.0) * (a1 + 2.0 * a2 + 2.0 * a3 + a4);

        const MeanFieldJacobian b1 = -inv * w0;
        const MeanFieldJacobian b2 = -(inv + 0.5 * h * b1) * wm;
        const MeanFieldJacobian b3 = -(inv + 0.5 * h * b2) * wm;
        const MeanFieldJacobian b4 = -(inv + h * b3) * w1;
        inv += (h / 6.0) * (b1 + 2.0 * b2 + 2.0 * b3 + b4);

        if ((n + 1) % grid.steps_per_bin == 0) {
            check_conditioning(lam, grid.time(n + 1));
            check_conditioning(inv, grid.time(n + 1));
            const std::size_t k = grid.bin_of_step(n + 1);
            out.mats[k] = lam;
            out.inverses[k] = inv;
        }
    }
    return out;
}

Simulation simulate(const Pulse& pulse, const SystemParams& p, const SimulationOptions& opts) {
    Simulation sim;
    sim.meanfield = integrate_meanfield(pulse, p, opts.mf0, opts.integrator);
    sim.moments = integrate_moments(sim.meanfield, p, opts.initial_moments(p));
    return sim;
}

} // namespace optosqueeze
