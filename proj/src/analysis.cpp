#include "optosqueeze/analysis.hpp"

#include <algorithm>
#include <numbers>

namespace optosqueeze {

std::array<double, 2> symplectic_eigenvalues(const CovarianceMatrix& v) {
    const double det_a = v.block<2, 2>(0, 0).determinant();
    const double det_b = v.block<2, 2>(2, 2).determinant();
    const double det_c = v.block<2, 2>(0, 2).determinant();
    const double invariant = det_a + det_b + 2.0 * det_c;
    const double disc = std::max(0.0, invariant * invariant - 4.0 * v.determinant());
    const double root = std::sqrt(disc);
    const double lo = std::sqrt(std::max(0.0, 0.5 * (invariant - root)));
    const double hi = std::sqrt(std::max(0.0, 0.5 * (invariant + root)));
    return {lo, hi};
}

CovarianceMatrix checked_covariance(const MomentVector& x, double tol) {
    const CovarianceMatrix v = covariance_from_moments(x);
    const auto nu = symplectic_eigenvalues(v);
    if (!v.allFinite() || nu[0] < 0.5 - tol) {
        throw Error(ErrorKind::Nonphysical, "symplectic eigenvalue " + std::to_string(nu[0]) + " below 1/2");
    }
    return v;
}

std::array<double, 2> quadrature_extrema(const CovarianceMatrix& v) {
    const double mean = 0.5 * (v(2, 2) + v(3, 3));
    const double radius = std::hypot(0.5 * (v(2, 2) - v(3, 3)), v(2, 3));
    return {mean - radius, mean + radius};
}

double squeezed_angle(const CovarianceMatrix& v) {
    const double two_theta = std::atan2(v(2, 3), 0.5 * (v(2, 2) - v(3, 3))) + std::numbers::pi;
    double theta = 0.5 * two_theta;
    theta = std::fmod(theta, std::numbers::pi);
    if (theta < 0.0) theta += std::numbers::pi;
    return theta;
}

double squeezing_degree(double variance) {
    if (!(variance > 0.0)) {
        throw Error(ErrorKind::Domain, "squeezing degree needs a positive variance, got " + std::to_string(variance));
    }
    return -10.0 * std::log10(variance / kZeroPointVariance);
}

MechanismVariance mechanism_variance(const MomentVector& x, double theta) {
    const double n = x[kBdB].real();
    const cd m = x[kBdBd];
    const double excess = n + m.real() * std::cos(2.0 * theta) - m.imag() * std::sin(2.0 * theta);
    return {kZeroPointVariance + excess, excess < 0.0};
}

SqueezingReport squeezing_report(const MomentVector& x, double theta) {
    SqueezingReport r;
    r.theta = theta;
    r.variance = quadrature_variance(covariance_from_moments(x), theta);
    r.degree_db = squeezing_degree(r.variance);
    r.mean_phonon = x[kBdB].real();
    r.moment_bb = x[kBdBd];
    return r;
}

double wigner_value(const MechanicalBlock& vb, const Eigen::Vector2d& d) {
    const double det = vb.determinant();
    if (!(det > 1e-14)) {
        throw Error(ErrorKind::SingularCovariance, "mechanical covariance determinant " + std::to_string(det));
    }
    const double quad = d.dot(vb.inverse() * d);
    return std::exp(-0.5 * quad) / (2.0 * std::numbers::pi * std::sqrt(det));
}

double WignerField::cell_area() const {
    if (grid_re.size() < 2 || grid_im.size() < 2) return 0.0;
    return (grid_re[1] - grid_re[0]) * (grid_im[1] - grid_im[0]);
}

double WignerField::integral() const { return values.sum() * cell_area(); }

WignerField wigner(const MechanicalBlock& vb, const WignerGridSpec& spec) {
    const double det = vb.determinant();
    if (!(det > 1e-14)) {
        throw Error(ErrorKind::SingularCovariance, "mechanical covariance determinant " + std::to_string(det));
    }
    if (spec.points < 2) throw Error(ErrorKind::InvalidParameter, "wigner grid needs >= 2 points", "points");
    const double half = spec.half_width > 0.0 ? spec.half_width
                                              : 5.0 * std::sqrt(std::max(vb(0, 0), vb(1, 1)));
    const auto n = static_cast<std::size_t>(spec.points);
    WignerField field;
    field.grid_re.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        field.grid_re[i] = -half + 2.0 * half * static_cast<double>(i) / static_cast<double>(n - 1);
    }
    field.grid_im = field.grid_re;

    const MechanicalBlock inv = vb.inverse();
    const double norm = 1.0 / (2.0 * std::numbers::pi * std::sqrt(det));
    field.values.resize(spec.points, spec.points);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            const Eigen::Vector2d d(field.grid_re[i], field.grid_im[j]);
            field.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                norm * std::exp(-0.5 * d.dot(inv * d));
        }
    }
    return field;
}

} // namespace optosqueeze
