#include "optosqueeze/oracle.hpp"

#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace optosqueeze {

namespace {

using SparseOp = Eigen::SparseMatrix<cd>;
using Dense = Eigen::MatrixXcd;

SparseOp annihilation(int dim) {
    SparseOp a(dim, dim);
    std::vector<Eigen::Triplet<cd>> entries;
    for (int n = 1; n < dim; ++n) entries.emplace_back(n - 1, n, std::sqrt(static_cast<double>(n)));
    a.setFromTriplets(entries.begin(), entries.end());
    return a;
}

SparseOp identity(int dim) {
    SparseOp id(dim, dim);
    id.setIdentity();
    return id;
}

SparseOp kron(const SparseOp& x, const SparseOp& y) {
    SparseOp out(x.rows() * y.rows(), x.cols() * y.cols());
    std::vector<Eigen::Triplet<cd>> entries;
    for (int i = 0; i < x.outerSize(); ++i) {
        for (SparseOp::InnerIterator xi(x, i); xi; ++xi) {
            for (int j = 0; j < y.outerSize(); ++j) {
                for (SparseOp::InnerIterator yj(y, j); yj; ++yj) {
                    entries.emplace_back(static_cast<int>(xi.row() * y.rows() + yj.row()),
                                         static_cast<int>(xi.col() * y.cols() + yj.col()), xi.value() * yj.value());
                }
            }
        }
    }
    out.setFromTriplets(entries.begin(), entries.end());
    return out;
}

struct Operators {
    SparseOp a, b, ad, bd;
    SparseOp n_a, n_b, b_bd;
    SparseOp x_b;          // b + b^dag
    SparseOp nonlinear;    // a^dag a (b + b^dag)
    SparseOp coupling_g;   // a^dag (b + b^dag), multiplied by G
    SparseOp coupling_gc;  // a (b + b^dag), multiplied by conj(G)
    std::array<SparseOp, 10> moments;
    int dim_a = 0;
    int dim_b = 0;
};

Operators build_operators(int dim_a, int dim_b) {
    Operators o;
    o.dim_a = dim_a;
    o.dim_b = dim_b;
    o.a = kron(annihilation(dim_a), identity(dim_b));
    o.b = kron(identity(dim_a), annihilation(dim_b));
    o.ad = SparseOp(o.a.adjoint());
    o.bd = SparseOp(o.b.adjoint());
    o.n_a = o.ad * o.a;
    o.n_b = o.bd * o.b;
    o.b_bd = o.b * o.bd;
    o.x_b = o.b + o.bd;
    o.nonlinear = o.n_a * o.x_b;
    o.coupling_g = o.ad * o.x_b;
    o.coupling_gc = o.a * o.x_b;
    o.moments = {o.n_a, o.n_b, SparseOp(o.ad * o.b), SparseOp(o.a * o.bd), SparseOp(o.ad * o.ad),
                 SparseOp(o.ad * o.bd), SparseOp(o.bd * o.bd), SparseOp(o.a * o.a), SparseOp(o.a * o.b),
                 SparseOp(o.b * o.b)};
    return o;
}

// Lindblad generator for fixed (G, Delta):
//   rho' = -i (H_eff rho - rho H_eff^dag) + kappa a rho a^dag
//          + gamma (n+1) b rho b^dag + gamma n b^dag rho b
// with H_eff = H - (i/2)(kappa a^dag a + gamma (n+1) b^dag b + gamma n b b^dag).
class Generator {
public:
    Generator(const Operators& ops, const SystemParams& p, bool nonlinear) : ops_(ops) {
        const double up = p.gamma * p.n_bar_m;
        down_ = p.gamma * (p.n_bar_m + 1.0);
        up_ = up;
        kappa_ = p.kappa;
        static_part_ = p.omega_m * ops.n_b - cd(0.0, 0.5) * (p.kappa * ops.n_a + down_ * ops.n_b + up * ops.b_bd);
        if (nonlinear) static_part_ += p.g0 * ops.nonlinear;
        const int dim = static_cast<int>(ops.a.rows());
        h_rho_.resize(dim, dim);
        tmp_.resize(dim, dim);
    }

    void operator()(const Dense& rho, cd g, double delta, Dense& out) {
        h_rho_.noalias() = static_part_ * rho;
        h_rho_.noalias() += delta * (ops_.n_a * rho);
        h_rho_.noalias() += g * (ops_.coupling_g * rho);
        h_rho_.noalias() += std::conj(g) * (ops_.coupling_gc * rho);
        out = cd(0.0, -1.0) * (h_rho_ - h_rho_.adjoint());
        tmp_.noalias() = ops_.a * rho;
        out.noalias() += kappa_ * (tmp_ * ops_.ad);
        tmp_.noalias() = ops_.b * rho;
        out.noalias() += down_ * (tmp_ * ops_.bd);
        if (up_ != 0.0) {
            tmp_.noalias() = ops_.bd * rho;
            out.noalias() += up_ * (tmp_ * ops_.b);
        }
    }

private:
    const Operators& ops_;
    SparseOp static_part_;
    double kappa_ = 0.0;
    double down_ = 0.0;
    double up_ = 0.0;
    Dense h_rho_;
    Dense tmp_;
};

// Population of the highest Fock level of each mode.
double top_population(const Dense& rho, int dim_a, int dim_b) {
    double top_a = 0.0;
    double top_b = 0.0;
    for (int i = 0; i < dim_a; ++i) {
        for (int j = 0; j < dim_b; ++j) {
            const double pop = rho(i * dim_b + j, i * dim_b + j).real();
            if (i == dim_a - 1) top_a += pop;
            if (j == dim_b - 1) top_b += pop;
        }
    }
    return std::max(top_a, top_b);
}

MomentVector extract(const Operators& ops, const Dense& rho) {
    MomentVector x;
    for (int m = 0; m < 10; ++m) {
        // tr(O rho) = sum_ij O_ij rho_ji
        cd acc{0.0, 0.0};
        const SparseOp& op = ops.moments[static_cast<std::size_t>(m)];
        for (int c = 0; c < op.outerSize(); ++c) {
            for (SparseOp::InnerIterator it(op, c); it; ++it) acc += it.value() * rho(it.col(), it.row());
        }
        x[m] = acc;
    }
    return x;
}

} // namespace

void validate_fock_config(const FockConfig& fc) {
    if (fc.dim_a < 2) throw Error(ErrorKind::InvalidParameter, "dim_a must be >= 2", "dim_a");
    if (fc.dim_b < 2) throw Error(ErrorKind::InvalidParameter, "dim_b must be >= 2", "dim_b");
    if (!(fc.dt > 0.0)) throw Error(ErrorKind::InvalidParameter, "dt must be positive", "dt");
}

FockReference fock_reference_moments(const MeanFieldTrajectory& traj, const SystemParams& p, const FockConfig& fc,
                                     double n_initial) {
    validate_params(p);
    validate_fock_config(fc);
    if (!(n_initial >= 0.0)) throw Error(ErrorKind::InvalidParameter, "initial occupation must be >= 0", "n_initial");

    FockReference out;
    const double occupation = std::max(n_initial, p.n_bar_m);
    if (occupation > fc.dim_b / 4.0) {
        out.warnings.push_back("mechanical occupation " + std::to_string(occupation) +
                               " is large compared with dim_b/4; expect truncation error");
    }

    const Operators ops = build_operators(fc.dim_a, fc.dim_b);
    Generator lindblad(ops, p, fc.include_nonlinear);
    const int dim = fc.dim_a * fc.dim_b;

    // Cavity vacuum times a truncated thermal state.
    Dense rho = Dense::Zero(dim, dim);
    {
        const double ratio = n_initial / (n_initial + 1.0);
        double weight = 1.0;
        double total = 0.0;
        for (int n = 0; n < fc.dim_b; ++n) {
            rho(n, n) = weight;
            total += weight;
            weight *= ratio;
        }
        rho /= total;
    }

    const TimeGrid& grid = traj.grid;
    const std::size_t n_steps = grid.n_steps();
    const double h_grid = grid.dt();
    const auto substeps = static_cast<std::size_t>(std::max(1.0, std::ceil(h_grid / fc.dt - 1e-9)));
    const double h = h_grid / static_cast<double>(substeps);

    out.moments.grid = grid;
    out.moments.moments.resize(n_steps + 1);

    const auto observe = [&](std::size_t n) {
        out.moments.moments[n] = extract(ops, rho);
        out.max_trace_error = std::max(out.max_trace_error, std::abs(rho.trace() - cd(1.0, 0.0)));
        out.max_hermiticity_error = std::max(out.max_hermiticity_error, (rho - rho.adjoint()).cwiseAbs().maxCoeff());
        const double top = top_population(rho, fc.dim_a, fc.dim_b);
        out.max_top_population = std::max(out.max_top_population, top);
        if (top > fc.breach_threshold) {
            throw Error(ErrorKind::TruncationBreach,
                        "top Fock level population " + std::to_string(top) + " at t=" + std::to_string(grid.time(n)));
        }
    };

    Dense k1(dim, dim), k2(dim, dim), k3(dim, dim), k4(dim, dim), stage(dim, dim);
    observe(0);
    for (std::size_t n = 0; n < n_steps; ++n) {
        for (std::size_t s = 0; s < substeps; ++s) {
            const double f0 = static_cast<double>(s) / static_cast<double>(substeps);
            const double f1 = static_cast<double>(s + 1) / static_cast<double>(substeps);
            const MeanFieldState m0 = traj.at(n, f0);
            const MeanFieldState mh = traj.at(n, 0.5 * (f0 + f1));
            const MeanFieldState m1 = traj.at(n, f1);
            lindblad(rho, coupling(m0, p), detuning(m0, p), k1);
            stage = rho + 0.5 * h * k1;
            lindblad(stage, coupling(mh, p), detuning(mh, p), k2);
            stage = rho + 0.5 * h * k2;
            lindblad(stage, coupling(mh, p), detuning(mh, p), k3);
            stage = rho + h * k3;
            lindblad(stage, coupling(m1, p), detuning(m1, p), k4);
            rho += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        observe(n + 1);
    }
    return out;
}

} // namespace optosqueeze

namespace optosqueeze {

Pulse validation_pulse(double t_final, std::size_t n_bins, double peak_omega) {
    Pulse pulse(t_final, std::vector<double>(n_bins), std::vector<double>(n_bins));
    for (std::size_t k = 0; k < n_bins; ++k) {
        const double t = (static_cast<double>(k) + 0.5) * pulse.bin_width();
        const double s = std::sin(std::numbers::pi * t / t_final);
        pulse.omega[k] = peak_omega * s * s;
        pulse.phi[k] = 0.5 * std::sin(2.0 * std::numbers::pi * t / t_final);
    }
    return pulse;
}

OracleComparison compare_with_oracle(const Pulse& pulse, const SystemParams& p, const FockConfig& fc,
                                     const SimulationOptions& sim, double floor) {
    OracleComparison out;
    const MomentVector x0 = sim.initial_moments(p);
    const Simulation s = simulate(pulse, p, sim);
    for (const auto& mf : s.meanfield.states) out.max_coupling = std::max(out.max_coupling, std::abs(coupling(mf, p)));
    out.reference = fock_reference_moments(s.meanfield, p, fc, x0[kBdB].real());
    out.moments = s.moments;
    for (std::size_t n = 0; n < s.moments.moments.size(); ++n) {
        for (int m = 0; m < 10; ++m) {
            const cd a = s.moments.moments[n][m];
            const cd b = out.reference.moments.moments[n][m];
            out.max_rel_error = std::max(out.max_rel_error, std::abs(a - b) / std::max(std::abs(b), floor));
        }
    }
    return out;
}

} // namespace optosqueeze
