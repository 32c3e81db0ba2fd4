#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "body.hpp"
#include "error.hpp"
#include "fourier.hpp"
#include "frame.hpp"
#include "linalg.hpp"
#include "random.hpp"
#include "reeb.hpp"

namespace systola {

struct SpaceCurve3 {
  std::vector<Eigen::Vector3d> points;  // closed polyline, last point joins the first
  int refinement_level = 0;
};

namespace detail {

// Uniform resampling of a closed curve through its trigonometric interpolant.
inline std::vector<Vec> resample_closed(const std::vector<Vec>& pts, int M) {
  const int m = static_cast<int>(pts.size());
  if (m == M) return pts;
  Vec mean;
  const FourierLoop f = FourierLoop::from_samples(pts, (m - 1) / 2, &mean);
  std::vector<Vec> out(M);
  for (int j = 0; j < M; ++j) out[j] = f.eval(static_cast<double>(j) / M) + mean;
  return out;
}

inline Vec unit4(const Vec& p) { return p / p.norm(); }

// Orthonormal basis (e1, e2, e3) of q^perp with det[-q, e1, e2, e3] > 0.
inline Mat sphere_chart(const Vec& q) {
  Mat A = Mat::Identity(4, 4);
  A.col(0) = q;
  Eigen::HouseholderQR<Mat> qr(A);
  Mat Q = qr.householderQ();
  if (Q.col(0).dot(q) < 0) Q.col(0) *= -1.0;
  Mat B(4, 3);
  B << Q.col(1), Q.col(2), Q.col(3);
  Mat D(4, 4);
  D << -q, B;
  if (D.determinant() < 0) B.col(0) *= -1.0;
  return B;
}

inline Eigen::Vector3d stereographic(const Vec& p, const Vec& q, const Mat& B) {
  const double den = 1.0 - p.dot(q);
  return Eigen::Vector3d(B.col(0).dot(p), B.col(1).dot(p), B.col(2).dot(p)) / den;
}

// Pole on S^3 maximizing the distance to both curves over 64 candidates.
inline Vec choose_pole(const std::vector<Vec>& a, const std::vector<Vec>& b) {
  Vec best;
  double bd = -1.0;
  Rng rng(0x51u);
  for (int c = 0; c < 64; ++c) {
    const Vec q = rng.unit_vec(4);
    double md = std::numeric_limits<double>::infinity();
    for (const auto& p : a) md = std::min(md, (p - q).norm());
    for (const auto& p : b) md = std::min(md, (p - q).norm());
    if (md > bd) {
      bd = md;
      best = q;
    }
  }
  return best;
}

struct CrossingCount {
  int twice_sum = 0;  // sum of crossing signs, A over B and B over A
  bool ambiguous = false;
};

// Signed crossings of two closed polylines in the projection along v.
inline CrossingCount count_crossings(const std::vector<Eigen::Vector3d>& A, const std::vector<Eigen::Vector3d>& B,
                                     const Eigen::Vector3d& v) {
  Eigen::Vector3d u1 = v.unitOrthogonal(), u2 = v.cross(u1);
  auto proj = [&](const Eigen::Vector3d& p) { return Eigen::Vector2d(u1.dot(p), u2.dot(p)); };
  const int na = static_cast<int>(A.size()), nb = static_cast<int>(B.size());
  std::vector<Eigen::Vector2d> pa(na), pb(nb);
  for (int i = 0; i < na; ++i) pa[i] = proj(A[i]);
  for (int j = 0; j < nb; ++j) pb[j] = proj(B[j]);
  // bounding boxes of B segments for a cheap rejection
  CrossingCount cc;
  double scale = 0.0;
  for (const auto& p : pa) scale = std::max(scale, p.norm());
  for (const auto& p : pb) scale = std::max(scale, p.norm());
  const double eps = 1e-12 * std::max(1.0, scale);
  for (int i = 0; i < na; ++i) {
    const Eigen::Vector2d a0 = pa[i], a1 = pa[(i + 1) % na];
    const Eigen::Vector2d da = a1 - a0;
    const double axl = std::min(a0.x(), a1.x()), axh = std::max(a0.x(), a1.x());
    const double ayl = std::min(a0.y(), a1.y()), ayh = std::max(a0.y(), a1.y());
    for (int j = 0; j < nb; ++j) {
      const Eigen::Vector2d b0 = pb[j], b1 = pb[(j + 1) % nb];
      if (std::max(b0.x(), b1.x()) < axl || std::min(b0.x(), b1.x()) > axh) continue;
      if (std::max(b0.y(), b1.y()) < ayl || std::min(b0.y(), b1.y()) > ayh) continue;
      const Eigen::Vector2d db = b1 - b0;
      const double den = da.x() * db.y() - da.y() * db.x();
      const Eigen::Vector2d r = b0 - a0;
      const double s = (r.x() * db.y() - r.y() * db.x()) / den;
      const double t = (r.x() * da.y() - r.y() * da.x()) / den;
      if (!std::isfinite(s) || !std::isfinite(t)) {
        cc.ambiguous = true;
        continue;
      }
      if (s < -1e-9 || s >= 1.0 + 1e-9 || t < -1e-9 || t >= 1.0 + 1e-9) continue;
      if (std::abs(s) < 1e-9 || std::abs(1 - s) < 1e-9 || std::abs(t) < 1e-9 || std::abs(1 - t) < 1e-9 ||
          std::abs(den) < eps * da.norm() * db.norm()) {
        cc.ambiguous = true;
        continue;
      }
      const Eigen::Vector3d xa = A[i] + s * (A[(i + 1) % na] - A[i]);
      const Eigen::Vector3d xb = B[j] + t * (B[(j + 1) % nb] - B[j]);
      const double h = v.dot(xa - xb);
      if (std::abs(h) < 1e-10 * std::max(1.0, scale)) {
        cc.ambiguous = true;
        continue;
      }
      const Eigen::Vector3d ta = A[(i + 1) % na] - A[i], tb = B[(j + 1) % nb] - B[j];
      // Gauss-map degree convention: lk = (1/4pi) int (ra - rb).(dra x drb)/|ra - rb|^3
      const double sg = (h > 0 ? 1.0 : -1.0) * v.dot(ta.cross(tb));
      cc.twice_sum += sg > 0 ? 1 : -1;
    }
  }
  return cc;
}

inline std::optional<int> linking_at_resolution(const std::vector<Vec>& a, const std::vector<Vec>& b) {
  std::vector<Vec> sa(a.size()), sb(b.size());
  for (std::size_t i = 0; i < a.size(); ++i) sa[i] = unit4(a[i]);
  for (std::size_t i = 0; i < b.size(); ++i) sb[i] = unit4(b[i]);
  const Vec q = choose_pole(sa, sb);
  const Mat B = sphere_chart(q);
  std::vector<Eigen::Vector3d> A3(sa.size()), B3(sb.size());
  for (std::size_t i = 0; i < sa.size(); ++i) A3[i] = stereographic(sa[i], q, B);
  for (std::size_t i = 0; i < sb.size(); ++i) B3[i] = stereographic(sb[i], q, B);
  Rng rng(0x1c5u);
  std::vector<int> values;
  for (int tries = 0; tries < 24 && values.size() < 3; ++tries) {
    const Vec r = rng.unit_vec(3);
    const CrossingCount cc = count_crossings(A3, B3, Eigen::Vector3d(r[0], r[1], r[2]));
    if (cc.ambiguous || cc.twice_sum % 2 != 0) continue;
    values.push_back(cc.twice_sum / 2);
  }
  if (values.size() < 3) return std::nullopt;
  if (!std::all_of(values.begin(), values.end(), [&](int v) { return v == values[0]; })) return std::nullopt;
  return values[0];
}

}  // namespace detail

inline double min_distance(const std::vector<Vec>& a, const std::vector<Vec>& b) {
  double md = std::numeric_limits<double>::infinity();
  for (const auto& p : a)
    for (const auto& q : b) md = std::min(md, (p - q).norm());
  return md;
}

// Stereographic image of a closed curve in R^4 \ 0 (after radial projection to S^3).
inline SpaceCurve3 to_space_curve(const std::vector<Vec>& pts, const Vec& pole, int level = 0) {
  SpaceCurve3 c;
  c.refinement_level = level;
  const Vec q = pole / pole.norm();
  const Mat B = detail::sphere_chart(q);
  for (const auto& p : pts) c.points.push_back(detail::stereographic(detail::unit4(p), q, B));
  return c;
}

// Linking number of disjoint closed curves in R^4 \ 0, read on S^3. The count
// is repeated at doubled resolutions until three consecutive levels agree.
inline int linking_number(const std::vector<Vec>& a, const std::vector<Vec>& b, int base_samples = 256) {
  if (a.size() < 3 || b.size() < 3) throw Error(ErrorKind::InputDomain, "curves need at least three points");
  for (const auto* c : {&a, &b})
    for (const auto& p : *c)
      if (p.size() != 4 || !p.allFinite() || p.norm() == 0.0)
        throw Error(ErrorKind::InputDomain, "linking needs finite nonzero points in R^4");
  std::vector<int> levels;
  for (int level = 0; level < 6; ++level) {
    const int M = base_samples << level;
    const auto ra = detail::resample_closed(a, M), rb = detail::resample_closed(b, M);
    if (level == 0) {
      std::vector<Vec> sa, sb;
      for (const auto& p : ra) sa.push_back(detail::unit4(p));
      for (const auto& p : rb) sb.push_back(detail::unit4(p));
      const double md = min_distance(sa, sb);
      if (!(md > 1e-4)) throw Error(ErrorKind::Precondition, "curves are not disjoint at working resolution", md);
    }
    const auto lk = detail::linking_at_resolution(ra, rb);
    if (!lk) {
      levels.clear();
      continue;
    }
    levels.push_back(*lk);
    const std::size_t k = levels.size();
    if (k >= 3 && levels[k - 1] == levels[k - 2] && levels[k - 2] == levels[k - 3]) return levels.back();
    if (k >= 2 && levels[k - 1] != levels[k - 2]) levels.erase(levels.begin(), levels.end() - 1);
  }
  throw Error(ErrorKind::Resolution, "crossing count did not stabilize under refinement");
}

inline int linking_number(const ClosedOrbit& a, const ClosedOrbit& b) { return linking_number(a.points, b.points); }

// Contact frame sampled along an orbit.
inline std::vector<XiFrame> xi_frame(const ConvexBody& body, const ClosedOrbit& orbit, const FrameOptions& opt = {}) {
  std::vector<XiFrame> out;
  out.reserve(orbit.points.size());
  for (std::size_t i = 0; i < orbit.points.size(); ++i) {
    try {
      out.push_back(xi_frame_at(body, orbit.points[i], opt));
    } catch (const Error& e) {
      throw Error(e.kind(), std::string(e.what()) + " at sample " + std::to_string(i), e.residual());
    }
  }
  return out;
}

// Number of turns of frame b relative to frame a along the orbit.
inline int frame_relative_winding(const ConvexBody& body, const ClosedOrbit& orbit, const FrameOptions& a,
                                  const FrameOptions& b) {
  const auto fa = xi_frame(body, orbit, a), fb = xi_frame(body, orbit, b);
  double total = 0.0, prev = 0.0;
  for (std::size_t i = 0; i <= fa.size(); ++i) {
    const std::size_t k = i % fa.size();
    const Vec2 c = frame_coordinates(fa[k], fb[k].w1);
    const double ang = std::atan2(c[1], c[0]);
    if (i > 0) {
      double d = ang - prev;
      d -= kTwoPi * std::round(d / kTwoPi);
      total += d;
    }
    prev = ang;
  }
  return static_cast<int>(std::lround(total / kTwoPi));
}

struct SelfLinking {
  int value = 0;
  double epsilon = 0.0;
};

// lk(orbit, orbit + eps w1) with eps halved until the value is stable.
inline SelfLinking self_linking(const ConvexBody& body, const ClosedOrbit& orbit, int samples = 512) {
  const auto pts = detail::resample_closed(orbit.points, samples);
  ClosedOrbit o = orbit;
  o.points = pts;
  const auto frame = xi_frame(body, o);
  double diam = 0.0;
  for (const auto& p : pts)
    for (const auto& q : pts) diam = std::max(diam, (p - q).norm());
  double eps = 1e-2 * diam;
  std::optional<int> prev;
  for (int i = 0; i < 8; ++i, eps *= 0.5) {
    std::vector<Vec> push(pts.size());
    for (std::size_t j = 0; j < pts.size(); ++j) push[j] = pts[j] + eps * frame[j].w1 / frame[j].w1.norm();
    int lk;
    try {
      lk = linking_number(pts, push, samples);
    } catch (const Error&) {
      prev.reset();
      continue;
    }
    if (prev && *prev == lk) return {lk, eps};
    prev = lk;
  }
  throw Error(ErrorKind::Geometry, "pushoff linking did not stabilize");
}

}  // namespace systola
