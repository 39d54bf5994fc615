// analysis.hpp: covariance matrices, rotating-quadrature variances, squeezing
// degree and Gaussian Wigner functions of the mechanical mode.

#pragma once

#include "optosqueeze/core.hpp"

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <vector>

namespace optosqueeze {

// Vacuum variance of any quadrature.
inline constexpr double kZeroPointVariance = 0.5;

// Symmetrized quadrature covariance of zero-mean fluctuations, with
// X = (o + o^dag)/sqrt2 and Y = i(o^dag - o)/sqrt2. No physicality check.
template <typename Scalar>
CovarianceMatrixT<Scalar> covariance_from_moments(const MomentVectorT<Scalar>& x) {
    using std::real;
    using std::imag;
    const Scalar half(0.5);
    CovarianceMatrixT<Scalar> v;
    v(0, 0) = half + real(x[kAdA]) + real(x[kAA]);
    v(1, 1) = half + real(x[kAdA]) - real(x[kAA]);
    v(0, 1) = imag(x[kAA]);
    v(2, 2) = half + real(x[kBdB]) + real(x[kBB]);
    v(3, 3) = half + real(x[kBdB]) - real(x[kBB]);
    v(2, 3) = imag(x[kBB]);
    v(0, 2) = real(x[kAB]) + real(x[kAdB]);
    v(0, 3) = imag(x[kAdB]) + imag(x[kAB]);
    v(1, 2) = imag(x[kAB]) - imag(x[kAdB]);
    v(1, 3) = real(x[kAdB]) - real(x[kAB]);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < i; ++j) v(i, j) = v(j, i);
    return v;
}

// Both symplectic eigenvalues (ascending) of a two-mode covariance matrix.
std::array<double, 2> symplectic_eigenvalues(const CovarianceMatrix& v);

// covariance_from_moments plus the physicality check; throws Nonphysical if a
// symplectic eigenvalue is below 1/2 - tol.
CovarianceMatrix checked_covariance(const MomentVector& x, double tol = 1e-6);

// Variance of X_b cos(theta) + Y_b sin(theta).
template <typename Derived>
typename Derived::Scalar quadrature_variance(const Eigen::MatrixBase<Derived>& v, double theta) {
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    return v(2, 2) * (c * c) + v(3, 3) * (s * s) + 0.5 * (v(2, 3) + v(3, 2)) * std::sin(2.0 * theta);
}

// Minimum and maximum over theta of the mechanical quadrature variance.
std::array<double, 2> quadrature_extrema(const CovarianceMatrix& v);
// Angle at which the mechanical quadrature variance is minimal, in [0, pi).
double squeezed_angle(const CovarianceMatrix& v);

// -10 log10(variance / 0.5); throws Domain for variance <= 0.
double squeezing_degree(double variance);
// Inverse of squeezing_degree.
inline double variance_for_degree(double degree_db) { return kZeroPointVariance * std::pow(10.0, -degree_db / 10.0); }

// Variance rewritten in terms of <b^dag b> and <b^dag b^dag>:
//   1/2 + <b^dag b> + Re<b^dag b^dag> cos 2theta - Im<b^dag b^dag> sin 2theta
struct MechanismVariance {
    double variance = 0.0;
    bool squeezed = false; // the part beyond 1/2 is negative
};
MechanismVariance mechanism_variance(const MomentVector& x, double theta);

struct SqueezingReport {
    double theta = 0.0;
    double variance = 0.0;
    double degree_db = 0.0;
    double mean_phonon = 0.0;
    cd moment_bb{}; // <b^dag b^dag>
};
SqueezingReport squeezing_report(const MomentVector& x, double theta);

// ------------------------------------------------------------------ Wigner

using MechanicalBlock = Eigen::Matrix2d;

inline MechanicalBlock mechanical_block(const CovarianceMatrix& v) { return v.block<2, 2>(2, 2); }

// Gaussian Wigner function exp(-D^T V^-1 D / 2) / (2 pi sqrt(det V)).
double wigner_value(const MechanicalBlock& vb, const Eigen::Vector2d& d);

struct WignerGridSpec {
    int points = 201;
    double half_width = 0.0; // <= 0 selects 5 max(sqrt V33, sqrt V44)
};

struct WignerField {
    std::vector<double> grid_re;
    std::vector<double> grid_im;
    Eigen::MatrixXd values; // values(i, j) at (grid_re[i], grid_im[j])

    double cell_area() const;
    double integral() const; // Riemann sum
};

WignerField wigner(const MechanicalBlock& vb, const WignerGridSpec& spec = {});

} // namespace optosqueeze
