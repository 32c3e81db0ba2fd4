#pragma once

#include <algorithm>
#include <limits>
#include <cmath>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dual2.hpp"
#include "error.hpp"
#include "linalg.hpp"
#include "random.hpp"

namespace systola {

struct GaugeValue {
  double value = 0.0;
  Vec gradient;
  Mat hessian;
};

class GaugeModel {
 public:
  virtual ~GaugeModel() = default;
  virtual GaugeValue eval(const Vec& z) const = 0;
  virtual double value(const Vec& z) const { return eval(z).value; }
  // Only quadratic gauges have a Hessian at the origin.
  virtual std::optional<Mat> origin_hessian() const { return std::nullopt; }
};

// Parameters of the built-in families; also echoed into certificates.
struct BodySpec {
  std::string type;  // ellipsoid | ball | smoothed_polydisk | perturbed_ellipsoid
  std::vector<double> a;
  double b = 0.0;
  double epsilon = 0.0;
  double delta = 0.0;
  std::vector<double> bump_center;
  double bump_width = 0.0;
  double convexify = 0.0;  // extra delta*|z|^2/R^2 added to the gauge, 0 = exact body
};

struct ConvexBody {
  std::string name;
  int dim_n = 0;
  double circumradius_bound = 0.0;  // X is contained in the ball of this radius
  double inradius_bound = 0.0;      // the ball of this radius is contained in X
  bool uniformly_convex = true;
  BodySpec spec;
  std::shared_ptr<const GaugeModel> model;

  int dim() const { return 2 * dim_n; }

  GaugeValue gauge(const Vec& z) const {
    check_input(z);
    if (z.squaredNorm() == 0.0) {
      auto h = model->origin_hessian();
      if (!h) throw Error(ErrorKind::InputDomain, "gauge Hessian is undefined at the origin");
      return {0.0, Vec::Zero(dim()), *h};
    }
    return model->eval(z);
  }

  double gauge_value(const Vec& z) const {
    check_input(z);
    if (z.squaredNorm() == 0.0) return 0.0;
    return model->value(z);
  }

  // Radial projection onto the boundary.
  Vec to_boundary(const Vec& z) const { return z / std::sqrt(gauge_value(z)); }

 private:
  void check_input(const Vec& z) const {
    if (z.size() != dim()) throw Error(ErrorKind::InputDomain, "point has wrong dimension");
    if (!z.allFinite()) throw Error(ErrorKind::InputDomain, "non-finite point");
  }
};

namespace detail {

template <class T>
T smooth_abs(const T& u, double eps) {
  // C2 smoothing of |u| that agrees with |u| outside (-eps, eps).
  if (value_of(u) >= eps) return u;
  if (value_of(u) <= -eps) return -1.0 * u;
  const T x = u / eps;
  const T x2 = x * x;
  return (eps / 8.0) * (3.0 + 6.0 * x2 - x2 * x2);
}

template <class T>
T polydisk_gauge(const T* z, double a, double b, double eps) {
  const T f = (kPi / a) * (z[0] * z[0] + z[1] * z[1]);
  const T g = (kPi / b) * (z[2] * z[2] + z[3] * z[3]);
  const T s = f + g;
  const T u = (f - g) / s;
  return 0.5 * (s * (1.0 + smooth_abs(u, eps)));
}

template <class T>
T bump_ellipsoid_gauge(const T* z, const std::vector<double>& a, double delta,
                       const std::vector<double>& center, double width) {
  using std::exp;
  using std::sqrt;
  const std::size_t n = a.size();
  T e = (kPi / a[0]) * (z[0] * z[0] + z[1] * z[1]);
  for (std::size_t j = 1; j < n; ++j) e += (kPi / a[j]) * (z[2 * j] * z[2 * j] + z[2 * j + 1] * z[2 * j + 1]);
  const T r = sqrt(e);
  T rho2 = square(z[0] / r - center[0]);
  for (std::size_t i = 1; i < 2 * n; ++i) rho2 += square(z[i] / r - center[i]);
  rho2 = rho2 / (width * width);
  if (value_of(rho2) >= 1.0) return e;
  const T beta = exp(1.0 - 1.0 / (1.0 - rho2));
  return e * (1.0 + delta * beta);
}

template <int N, class F>
GaugeValue eval_with_ad(const Vec& z, const F& f) {
  const int dim = static_cast<int>(z.size());
  std::vector<Dual2<N>> vars;
  vars.reserve(dim);
  for (int i = 0; i < dim; ++i) vars.push_back(Dual2<N>::variable(z[i], i, dim));
  const Dual2<N> r = f(vars.data());
  return {r.v, Vec(r.g), Mat(symmetrize(r.h))};
}

class EllipsoidModel final : public GaugeModel {
 public:
  explicit EllipsoidModel(std::vector<double> a) : a_(std::move(a)) {}
  GaugeValue eval(const Vec& z) const override {
    const int d = static_cast<int>(z.size());
    GaugeValue r{0.0, Vec(d), Mat::Zero(d, d)};
    for (int i = 0; i < d; ++i) {
      const double c = kPi / a_[i / 2];
      r.value += c * z[i] * z[i];
      r.gradient[i] = 2.0 * c * z[i];
      r.hessian(i, i) = 2.0 * c;
    }
    return r;
  }
  double value(const Vec& z) const override {
    double v = 0.0;
    for (Eigen::Index i = 0; i < z.size(); ++i) v += kPi / a_[i / 2] * z[i] * z[i];
    return v;
  }
  std::optional<Mat> origin_hessian() const override {
    const int d = static_cast<int>(2 * a_.size());
    Mat h = Mat::Zero(d, d);
    for (int i = 0; i < d; ++i) h(i, i) = 2.0 * kPi / a_[i / 2];
    return h;
  }

 private:
  std::vector<double> a_;
};

class PolydiskModel final : public GaugeModel {
 public:
  PolydiskModel(double a, double b, double eps) : a_(a), b_(b), eps_(eps) {}
  GaugeValue eval(const Vec& z) const override {
    return eval_with_ad<4>(z, [&](const Dual2<4>* x) { return polydisk_gauge(x, a_, b_, eps_); });
  }
  double value(const Vec& z) const override { return polydisk_gauge(z.data(), a_, b_, eps_); }

 private:
  double a_, b_, eps_;
};

template <int N>
class BumpEllipsoidModel final : public GaugeModel {
 public:
  BumpEllipsoidModel(std::vector<double> a, double delta, std::vector<double> c, double w)
      : a_(std::move(a)), delta_(delta), c_(std::move(c)), w_(w) {}
  GaugeValue eval(const Vec& z) const override {
    return eval_with_ad<N>(z, [&](const Dual2<N>* x) { return bump_ellipsoid_gauge(x, a_, delta_, c_, w_); });
  }
  double value(const Vec& z) const override { return bump_ellipsoid_gauge(z.data(), a_, delta_, c_, w_); }

 private:
  std::vector<double> a_;
  double delta_;
  std::vector<double> c_;
  double w_;
};

// base + delta * |z|^2 / R^2: keeps 2-homogeneity and adds a uniform
// convexity margin to bodies whose gauge has flat directions.
class ConvexifiedModel final : public GaugeModel {
 public:
  ConvexifiedModel(std::shared_ptr<const GaugeModel> base, double coeff)
      : base_(std::move(base)), c_(coeff) {}
  GaugeValue eval(const Vec& z) const override {
    GaugeValue r = base_->eval(z);
    r.value += c_ * z.squaredNorm();
    r.gradient += 2.0 * c_ * z;
    r.hessian.diagonal().array() += 2.0 * c_;
    return r;
  }
  double value(const Vec& z) const override { return base_->value(z) + c_ * z.squaredNorm(); }
  std::optional<Mat> origin_hessian() const override {
    auto h = base_->origin_hessian();
    if (h) h->diagonal().array() += 2.0 * c_;
    return h;
  }

 private:
  std::shared_ptr<const GaugeModel> base_;
  double c_;
};

inline void require_positive(const std::vector<double>& v, const char* what) {
  if (v.empty()) throw Error(ErrorKind::InputDomain, std::string(what) + " must be non-empty");
  for (double x : v)
    if (!(x > 0.0) || !std::isfinite(x)) throw Error(ErrorKind::InputDomain, std::string(what) + " must be positive");
}

}  // namespace detail

inline ConvexBody make_ellipsoid(std::vector<double> a) {
  detail::require_positive(a, "ellipsoid parameters");
  ConvexBody b;
  b.name = "ellipsoid";
  b.dim_n = static_cast<int>(a.size());
  const double amax = *std::max_element(a.begin(), a.end());
  const double amin = *std::min_element(a.begin(), a.end());
  b.circumradius_bound = std::sqrt(amax / kPi);
  b.inradius_bound = std::sqrt(amin / kPi);
  b.spec.type = "ellipsoid";
  b.spec.a = a;
  b.model = std::make_shared<detail::EllipsoidModel>(std::move(a));
  return b;
}

// Round ball of capacity a in C^2, i.e. E(a, a).
inline ConvexBody make_ball(double a, int n = 2) {
  ConvexBody b = make_ellipsoid(std::vector<double>(n, a));
  b.name = "ball";
  b.spec = BodySpec{};
  b.spec.type = "ball";
  b.spec.a = {a};
  return b;
}

// Polydisk D(a) x D(b) with the corner smoothed over a band of relative
// width epsilon. The gauge is convex but flat along the smoothing band's
// complement, so it is not uniformly convex.
inline ConvexBody make_smoothed_polydisk(double a, double b, double epsilon) {
  if (!(a > 0) || !(b > 0)) throw Error(ErrorKind::InputDomain, "polydisk radii must be positive");
  if (!(epsilon > 0) || !(epsilon < 1)) throw Error(ErrorKind::InputDomain, "polydisk epsilon must lie in (0,1)");
  ConvexBody body;
  body.name = "smoothed_polydisk";
  body.dim_n = 2;
  body.circumradius_bound = std::sqrt((a + b) / kPi);
  body.inradius_bound = std::sqrt(std::min(a, b) / (kPi * (1.0 + 3.0 * epsilon / 8.0)));
  body.uniformly_convex = false;
  body.spec.type = "smoothed_polydisk";
  body.spec.a = {a};
  body.spec.b = b;
  body.spec.epsilon = epsilon;
  body.model = std::make_shared<detail::PolydiskModel>(a, b, epsilon);
  return body;
}

// Ellipsoid gauge times (1 + delta * bump) where the bump is a smooth
// compactly supported function on the unit ellipsoid around bump_center.
inline ConvexBody make_perturbed_ellipsoid(std::vector<double> a, double delta, std::vector<double> center,
                                           double width) {
  detail::require_positive(a, "ellipsoid parameters");
  const std::size_t n = a.size();
  if (center.size() != 2 * n) throw Error(ErrorKind::InputDomain, "bump_center must have 2n entries");
  if (!(width > 0) || !(delta > -1) || !std::isfinite(delta))
    throw Error(ErrorKind::InputDomain, "invalid bump parameters");
  // Normalize the center onto the unit level set of the ellipsoid.
  double e = 0.0;
  for (std::size_t i = 0; i < 2 * n; ++i) e += kPi / a[i / 2] * center[i] * center[i];
  if (!(e > 0)) throw Error(ErrorKind::InputDomain, "bump_center must be nonzero");
  std::vector<double> c(center);
  for (auto& x : c) x /= std::sqrt(e);

  ConvexBody body;
  body.name = "perturbed_ellipsoid";
  body.dim_n = static_cast<int>(n);
  const double amax = *std::max_element(a.begin(), a.end());
  const double amin = *std::min_element(a.begin(), a.end());
  const double lo = std::min(1.0, 1.0 + delta), hi = std::max(1.0, 1.0 + delta);
  body.circumradius_bound = std::sqrt(amax / (kPi * lo));
  body.inradius_bound = std::sqrt(amin / (kPi * hi));
  body.spec.type = "perturbed_ellipsoid";
  body.spec.a = a;
  body.spec.delta = delta;
  body.spec.bump_center = center;
  body.spec.bump_width = width;
  if (n == 2)
    body.model = std::make_shared<detail::BumpEllipsoidModel<4>>(a, delta, c, width);
  else
    body.model = std::make_shared<detail::BumpEllipsoidModel<Eigen::Dynamic>>(a, delta, c, width);
  return body;
}

// Adds delta * |z|^2 / R^2 to the gauge. The result is a slightly smaller,
// uniformly convex body; used to run the dual method on flat gauges.
inline ConvexBody convexified(const ConvexBody& base, double delta) {
  if (!(delta > 0)) return base;
  const double R2 = base.circumradius_bound * base.circumradius_bound;
  ConvexBody b = base;
  b.name = base.name + "+convexified";
  b.uniformly_convex = true;
  b.spec.convexify = delta;
  b.inradius_bound = 1.0 / std::sqrt(1.0 / (base.inradius_bound * base.inradius_bound) + delta / R2);
  b.model = std::make_shared<detail::ConvexifiedModel>(base.model, delta / R2);
  return b;
}

inline ConvexBody make_body(const BodySpec& s) {
  ConvexBody b;
  if (s.type == "ellipsoid") {
    b = make_ellipsoid(s.a);
  } else if (s.type == "ball") {
    if (s.a.size() != 1) throw Error(ErrorKind::InputDomain, "ball expects a single capacity a");
    b = make_ball(s.a[0]);
  } else if (s.type == "smoothed_polydisk") {
    if (s.a.size() != 1) throw Error(ErrorKind::InputDomain, "smoothed_polydisk expects scalar a");
    b = make_smoothed_polydisk(s.a[0], s.b, s.epsilon);
  } else if (s.type == "perturbed_ellipsoid") {
    b = make_perturbed_ellipsoid(s.a, s.delta, s.bump_center, s.bump_width);
  } else {
    throw Error(ErrorKind::InputDomain, "unknown body type '" + s.type + "'");
  }
  return s.convexify > 0 ? convexified(b, s.convexify) : b;
}

// Sampled checks of the gauge axioms.
struct BodyInvariantReport {
  int samples = 0;
  double homogeneity_error = 0.0;  // |H(sz) - s^2 H(z)| / (s^2 H(z))
  double euler_error = 0.0;        // |<z, dH> - 2H| / H
  double boundary_error = 0.0;     // |H(boundary sample) - 1|
  double hessian_min = 0.0;        // extreme Hessian eigenvalues over |z| = 1
  double hessian_max = 0.0;
  bool passed(double tol = 1e-10) const {
    return homogeneity_error < tol && euler_error < tol && boundary_error < tol && hessian_min > 0.0;
  }
};

inline BodyInvariantReport check_body_invariants(const ConvexBody& body, int samples, std::uint64_t seed) {
  Rng rng(seed);
  BodyInvariantReport r;
  r.samples = samples;
  r.hessian_min = std::numeric_limits<double>::infinity();
  r.hessian_max = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < samples; ++i) {
    const Vec z = rng.unit_vec(body.dim());
    const double s = rng.uniform(0.1, 3.0);
    const GaugeValue g = body.gauge(z);
    const double hs = body.gauge_value(s * z);
    r.homogeneity_error = std::max(r.homogeneity_error, std::abs(hs - s * s * g.value) / (s * s * g.value));
    r.euler_error = std::max(r.euler_error, std::abs(z.dot(g.gradient) - 2.0 * g.value) / g.value);
    r.boundary_error = std::max(r.boundary_error, std::abs(body.gauge_value(body.to_boundary(z)) - 1.0));
    Eigen::SelfAdjointEigenSolver<Mat> es(g.hessian, Eigen::EigenvaluesOnly);
    r.hessian_min = std::min(r.hessian_min, es.eigenvalues().minCoeff());
    r.hessian_max = std::max(r.hessian_max, es.eigenvalues().maxCoeff());
  }
  return r;
}

}  // namespace systola
