#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <numbers>

namespace systola {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;
using Cplx = std::complex<double>;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Coordinates are ordered (x1, y1, ..., xn, yn); J0 is multiplication by i
// on every complex coordinate z_j = x_j + i y_j.
inline Vec apply_j0(const Vec& v) {
  Vec out(v.size());
  for (Eigen::Index j = 0; j + 1 < v.size(); j += 2) {
    out[j] = -v[j + 1];
    out[j + 1] = v[j];
  }
  return out;
}

inline Mat j0_matrix(int dim) {
  Mat J = Mat::Zero(dim, dim);
  for (int j = 0; j + 1 < dim; j += 2) {
    J(j, j + 1) = -1.0;
    J(j + 1, j) = 1.0;
  }
  return J;
}

inline double omega0(const Vec& u, const Vec& v) { return apply_j0(u).dot(v); }

// Radial primitive of omega0 evaluated on (z, v).
inline double lambda0(const Vec& z, const Vec& v) { return 0.5 * omega0(z, v); }

// exp(theta J0) v, i.e. every complex coordinate multiplied by e^{i theta}.
inline Vec rotate(const Vec& v, double theta) {
  const double c = std::cos(theta), s = std::sin(theta);
  Vec out(v.size());
  for (Eigen::Index j = 0; j + 1 < v.size(); j += 2) {
    out[j] = c * v[j] - s * v[j + 1];
    out[j + 1] = s * v[j] + c * v[j + 1];
  }
  return out;
}

inline Mat2 rotation2(double theta) {
  Mat2 R;
  R << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
  return R;
}

inline Mat symmetrize(const Mat& A) { return 0.5 * (A + A.transpose()); }

inline bool all_finite(const Vec& v) { return v.allFinite(); }

// Number of eigenvalues below -tol, inside [-tol, tol], above tol.
struct Inertia {
  int negative = 0;
  int null = 0;
  int positive = 0;
};

inline Inertia inertia(const Mat& A, double tol) {
  Eigen::SelfAdjointEigenSolver<Mat> es(symmetrize(A), Eigen::EigenvaluesOnly);
  Inertia r;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    const double e = es.eigenvalues()[i];
    if (e < -tol) ++r.negative;
    else if (e > tol) ++r.positive;
    else ++r.null;
  }
  return r;
}

inline int sign_of(double x) { return (x > 0) - (x < 0); }

}  // namespace systola
