#pragma once

#include <cmath>
#include <functional>

#include "body.hpp"
#include "error.hpp"
#include "linalg.hpp"

namespace systola {

// Symplectic basis (w1, w2) of the contact plane at a point, omega0(w1,w2) = 1.
struct XiFrame {
  Vec w1;
  Vec w2;
  double condition = 1.0;
};

// Optional re-phasing of the frame by the angle phase + gradient . z,
// which stays in the same homotopy class.
struct FrameOptions {
  double phase = 0.0;
  double phase_gradient = 0.0;  // coefficient of x1 in the rotation angle
};

namespace detail {

inline Vec quaternion_j(const Vec& z) {
  // z -> (-conj z2, conj z1)
  Vec v(4);
  v << -z[2], z[3], z[0], -z[1];
  return v;
}

}  // namespace detail

// Projects the quaternionic frame of the round sphere onto
// xi = (grad H_X, J0 z)^perp and normalizes it symplectically.
inline XiFrame xi_frame_at(const ConvexBody& body, const Vec& z, const FrameOptions& opt = {}) {
  if (body.dim_n != 2) throw Error(ErrorKind::Capability, "contact frame is implemented for n = 2 only");
  const Vec g = body.gauge(z).gradient;
  const Vec jz = apply_j0(z);
  // orthonormal basis of span(grad H, J0 z)
  const Vec e1 = jz / jz.norm();
  Vec e2 = g - g.dot(e1) * e1;
  const double e2n = e2.norm();
  if (!(e2n > 1e-14 * g.norm())) throw Error(ErrorKind::Frame, "degenerate normal data at frame point");
  e2 /= e2n;
  auto project = [&](const Vec& v) { return Vec(v - v.dot(e1) * e1 - v.dot(e2) * e2); };
  const Vec lj = detail::quaternion_j(z);
  Vec v1 = project(lj);
  Vec v2 = project(apply_j0(lj));
  const double om = omega0(v1, v2);
  if (!(om > 0.0)) throw Error(ErrorKind::Frame, "projected frame lost its orientation", z[0]);
  v1 /= std::sqrt(om);
  v2 /= std::sqrt(om);
  XiFrame f;
  const double phi = opt.phase + opt.phase_gradient * z[0];
  if (phi != 0.0) {
    const double c = std::cos(phi), s = std::sin(phi);
    f.w1 = c * v1 + s * v2;
    f.w2 = -s * v1 + c * v2;
  } else {
    f.w1 = v1;
    f.w2 = v2;
  }
  Mat2 gram;
  gram << f.w1.squaredNorm(), f.w1.dot(f.w2), f.w1.dot(f.w2), f.w2.squaredNorm();
  Eigen::SelfAdjointEigenSolver<Mat2> es(gram);
  f.condition = std::sqrt(es.eigenvalues()[1] / es.eigenvalues()[0]);
  if (!(f.condition < 1e6)) throw Error(ErrorKind::Frame, "frame is ill-conditioned", f.condition);
  return f;
}

// Coordinates of v in the frame, taken along span(z, X) (the
// omega0-complement of xi).
inline Vec2 frame_coordinates(const XiFrame& f, const Vec& v) {
  return Vec2(omega0(v, f.w2), -omega0(v, f.w1));
}

// Directional derivative of the frame field at z along v (central differences).
inline XiFrame frame_derivative(const ConvexBody& body, const Vec& z, const Vec& v, const FrameOptions& opt = {}) {
  const double h = 1e-5 * z.norm() / std::max(v.norm(), 1e-300);
  const XiFrame fp = xi_frame_at(body, z + h * v, opt);
  const XiFrame fm = xi_frame_at(body, z - h * v, opt);
  return {(fp.w1 - fm.w1) / (2 * h), (fp.w2 - fm.w2) / (2 * h), 1.0};
}

}  // namespace systola
