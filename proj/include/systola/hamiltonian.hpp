#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "body.hpp"
#include "dual2.hpp"
#include "error.hpp"
#include "linalg.hpp"

namespace systola {

// Convex profile k applied to the gauge. The smooth variant vanishes on
// [0, c0], is C2, and has slope exactly eta on [2, inf). The linear variant
// gives the homogeneous Hamiltonian scale * gauge.
struct Profile {
  enum class Kind { Smooth, Linear };
  Kind kind = Kind::Smooth;
  double eta = 1.0;
  double c0 = 0.25;

  static Profile smooth(double eta, double c0 = 0.25) { return {Kind::Smooth, eta, c0}; }
  static Profile linear(double scale) { return {Kind::Linear, scale, 0.0}; }

  double span() const { return 2.0 - c0; }

  // (k, k', k'') at s.
  void eval(double s, double& k, double& k1, double& k2) const {
    if (kind == Kind::Linear) {
      k = eta * s;
      k1 = eta;
      k2 = 0.0;
      return;
    }
    const double L = span();
    if (s <= c0) {
      k = k1 = k2 = 0.0;
    } else if (s < 2.0) {
      const double u = (s - c0) / L;
      k = eta * L * (u * u * u - 0.5 * u * u * u * u);
      k1 = eta * (3.0 * u * u - 2.0 * u * u * u);
      k2 = eta * (6.0 * u - 6.0 * u * u) / L;
    } else {
      k = 0.5 * eta * L + eta * (s - 2.0);
      k1 = eta;
      k2 = 0.0;
    }
  }
  double value(double s) const { double k, a, b; eval(s, k, a, b); return k; }
  double slope(double s) const { double k, a, b; eval(s, k, a, b); return a; }

  // Smallest level s with k'(s) = slope_target, for 0 < slope_target < eta.
  double level_for_slope(double slope_target) const {
    if (kind == Kind::Linear) throw Error(ErrorKind::Precondition, "linear profile has constant slope");
    if (!(slope_target > 0.0) || !(slope_target < eta))
      throw Error(ErrorKind::Precondition, "slope outside (0, eta)");
    double lo = 0.0, hi = 1.0;
    const double target = slope_target / eta;
    for (int i = 0; i < 200; ++i) {
      const double mid = 0.5 * (lo + hi);
      (3.0 * mid * mid - 2.0 * mid * mid * mid < target ? lo : hi) = mid;
    }
    return c0 + span() * 0.5 * (lo + hi);
  }
};

// H = smax(k(gauge), mu|z|^2/2) - shift, with an exact C2 smoothed max of
// half-width tau. Makes the flat core strictly convex with a unique
// nondegenerate minimum at the origin.
struct CorePatch {
  bool enabled = false;
  double mu = 0.0;
  double tau = 0.0;
  double shift = 0.0;
};

// Time-dependent term eps * chi((gauge - level)/width) * <e^{2 pi i t} c_hat, z> / rho
// concentrated near the circle t -> e^{2 pi i t} c_hat * rho on the given level.
struct OrbitSplitting {
  bool enabled = false;
  double epsilon = 1e-3;
  double level = 1.0;
  double width = 0.1;
  double rho = 1.0;
  Vec direction;  // unit mode-1 coefficient
};

struct HamiltonianEval {
  double value = 0.0;
  Vec gradient;
  Mat hessian;
};

namespace detail {

// Flat-top C-infinity cutoff: 1 on [-1,1], 0 outside (-2,2).
inline void flat_top(double u, double& c, double& c1, double& c2) {
  const double a = std::abs(u);
  if (a <= 1.0) { c = 1.0; c1 = c2 = 0.0; return; }
  if (a >= 2.0) { c = c1 = c2 = 0.0; return; }
  auto g = [](const Dual2<1>& x) {
    // exp(-1/x) for x > 0
    return exp(-1.0 * reciprocal(x));
  };
  const Dual2<1> x = Dual2<1>::variable(a, 0, 1);
  const Dual2<1> p = g(2.0 - x);
  const Dual2<1> q = g(x - 1.0);
  const Dual2<1> r = p / (p + q);
  const double s = u < 0 ? -1.0 : 1.0;
  c = r.v;
  c1 = s * r.g[0];
  c2 = r.h(0, 0);
}

// tau * P(x / tau) with P(u) = (3 + 6u^2 - u^4)/8 inside, |x| outside.
inline void smooth_abs3(double x, double tau, double& s, double& s1, double& s2) {
  if (x >= tau) { s = x; s1 = 1.0; s2 = 0.0; return; }
  if (x <= -tau) { s = -x; s1 = -1.0; s2 = 0.0; return; }
  const double u = x / tau, u2 = u * u;
  s = tau * (3.0 + 6.0 * u2 - u2 * u2) / 8.0;
  s1 = (12.0 * u - 4.0 * u2 * u) / 8.0;
  s2 = (12.0 - 12.0 * u2) / (8.0 * tau);
}

}  // namespace detail

class TimeHamiltonian {
 public:
  ConvexBody body;
  Profile profile;
  CorePatch core;
  OrbitSplitting split;

  int dim() const { return body.dim(); }
  int n() const { return body.dim_n; }
  double eta() const { return profile.eta; }
  bool autonomous() const { return !split.enabled; }

  HamiltonianEval eval(double t, const Vec& z, bool want_hessian = true) const {
    if (!z.allFinite()) throw Error(ErrorKind::InputDomain, "non-finite point");
    const int d = dim();
    HamiltonianEval r{0.0, Vec::Zero(d), want_hessian ? Mat::Zero(d, d) : Mat()};

    // a = k(gauge)
    double a = 0.0;
    Vec ga = Vec::Zero(d);
    Mat ha;
    if (want_hessian) ha = Mat::Zero(d, d);
    std::optional<GaugeValue> gv;
    const bool at_origin = z.squaredNorm() == 0.0;
    if (profile.kind == Profile::Kind::Linear) {
      gv = body.gauge(z);
      a = profile.eta * gv->value;
      ga = profile.eta * gv->gradient;
      if (want_hessian) ha = profile.eta * gv->hessian;
    } else if (!at_origin) {
      const double s = body.gauge_value(z);
      if (s > profile.c0) {
        gv = body.gauge(z);
        double k, k1, k2;
        profile.eval(gv->value, k, k1, k2);
        a = k;
        ga = k1 * gv->gradient;
        if (want_hessian) ha = k1 * gv->hessian + k2 * gv->gradient * gv->gradient.transpose();
      }
    }

    if (core.enabled) {
      const double b = 0.5 * core.mu * z.squaredNorm();
      double S, S1, S2;
      detail::smooth_abs3(0.5 * (a - b), core.tau, S, S1, S2);
      const double wa = 0.5 + 0.5 * S1, wb = 0.5 - 0.5 * S1;
      r.value = 0.5 * (a + b) + S - core.shift;
      const Vec gb = core.mu * z;
      r.gradient = wa * ga + wb * gb;
      if (want_hessian) {
        r.hessian = wa * ha;
        r.hessian.diagonal().array() += wb * core.mu;
        if (S2 != 0.0) {
          const Vec diff = ga - gb;
          r.hessian += 0.25 * S2 * diff * diff.transpose();
        }
      }
    } else {
      r.value = a;
      r.gradient = ga;
      if (want_hessian) r.hessian = ha;
    }

    if (split.enabled && !at_origin) add_split(t, z, gv, want_hessian, r);
    return r;
  }

  double value(double t, const Vec& z) const { return eval(t, z, false).value; }
  Vec gradient(double t, const Vec& z) const { return eval(t, z, false).gradient; }

 private:
  void add_split(double t, const Vec& z, std::optional<GaugeValue>& gv, bool want_hessian,
                 HamiltonianEval& r) const {
    const double s = body.gauge_value(z);
    const double q = (s - split.level) / split.width;
    double c, c1, c2;
    detail::flat_top(q, c, c1, c2);
    if (c == 0.0 && c1 == 0.0 && c2 == 0.0) return;
    if (!gv) gv = body.gauge(z);
    const Vec ell = rotate(split.direction, kTwoPi * t);
    const double L = ell.dot(z);
    const double f = split.epsilon / split.rho;
    const Vec gq = gv->gradient / split.width;
    r.value += f * c * L;
    r.gradient += f * (c1 * L * gq + c * ell);
    if (want_hessian) {
      r.hessian += f * (c2 * L * gq * gq.transpose() + (c1 * L / split.width) * gv->hessian +
                        c1 * (gq * ell.transpose() + ell * gq.transpose()));
    }
  }
};

// X_H = J0 grad H, so that omega0(X_H, .) = -dH.
inline Vec hamiltonian_field(const TimeHamiltonian& H, double t, const Vec& z) {
  return apply_j0(H.gradient(t, z));
}

// Core patch parameters for a smooth profile: the patch is inactive on every
// level where k' reaches an action of a closed characteristic, since those
// actions are at least pi * inradius^2.
inline CorePatch make_core_patch(const ConvexBody& body, const Profile& profile) {
  const double rin = body.inradius_bound, R = body.circumradius_bound;
  const double target = 0.9 * kPi * rin * rin;
  const double smin = target < profile.eta ? profile.level_for_slope(target) : 2.0;
  const double ks = profile.value(smin);
  CorePatch p;
  p.enabled = true;
  p.tau = 0.25 * ks;
  p.mu = 0.8 * ks / (R * R * smin);
  p.shift = 3.0 * p.tau / 8.0 + p.tau;
  return p;
}

struct PerturbationSpec {
  enum class Kind { None, Core, OrbitSplitting };
  Kind kind = Kind::Core;
  // orbit splitting: mode-1 coefficient of the target loop and its gauge level
  Vec mode1;
  double level = 1.0;
  double epsilon = 1e-3;
  double width = 0.1;

  static PerturbationSpec none() { return {Kind::None}; }
  static PerturbationSpec core_only() { return {Kind::Core}; }
  static PerturbationSpec orbit_splitting(Vec mode1, double level, double epsilon = 1e-3, double width = 0.1) {
    PerturbationSpec s;
    s.kind = Kind::OrbitSplitting;
    s.mode1 = std::move(mode1);
    s.level = level;
    s.epsilon = epsilon;
    s.width = width;
    return s;
  }
};

inline double default_eta(const ConvexBody& body) {
  return 1.5 * kPi * body.circumradius_bound * body.circumradius_bound;
}

// Orbit splitting always carries the core patch as well, so the
// Hamiltonian stays strictly convex.
inline TimeHamiltonian build_hamiltonian(const ConvexBody& body, double eta, const PerturbationSpec& pert,
                                         const std::vector<double>& known_actions = {},
                                         double exclusion_tol = 1e-4) {
  if (!(eta > 0.0) || !std::isfinite(eta)) throw Error(ErrorKind::InputDomain, "eta must be positive");
  for (double a : known_actions)
    if (std::abs(a - eta) < exclusion_tol)
      throw Error(ErrorKind::Resonance, "eta is within the exclusion tolerance of a known action", a);
  TimeHamiltonian H;
  H.body = body;
  H.profile = Profile::smooth(eta);
  if (pert.kind != PerturbationSpec::Kind::None) H.core = make_core_patch(body, H.profile);
  if (pert.kind == PerturbationSpec::Kind::OrbitSplitting) {
    const double rho = pert.mode1.norm();
    if (pert.mode1.size() != body.dim() || !(rho > 0))
      throw Error(ErrorKind::InputDomain, "orbit splitting needs a nonzero mode-1 coefficient");
    H.split.enabled = true;
    H.split.epsilon = pert.epsilon;
    H.split.level = pert.level;
    H.split.width = pert.width;
    H.split.rho = rho;
    H.split.direction = pert.mode1 / rho;
  }
  return H;
}

// Homogeneous Hamiltonian scale * gauge (no core, no perturbation).
inline TimeHamiltonian homogeneous_hamiltonian(const ConvexBody& body, double scale) {
  TimeHamiltonian H;
  H.body = body;
  H.profile = Profile::linear(scale);
  return H;
}

struct FenchelValue {
  double value = 0.0;
  Vec gradient;  // the maximizer z*
  Mat hessian;   // inverse Hessian of H at z*
  int iterations = 0;
};

// H*(t, w) = max_z <z, w> - H(t, z), by damped Newton on grad H(z) = w.
inline FenchelValue fenchel_eval(const TimeHamiltonian& H, double t, const Vec& w, const Vec* guess = nullptr,
                                 bool want_hessian = true, int max_iter = 100) {
  const int d = H.dim();
  if (w.size() != d || !w.allFinite()) throw Error(ErrorKind::InputDomain, "invalid covector");
  FenchelValue out;
  if (H.profile.kind == Profile::Kind::Linear && w.squaredNorm() == 0.0) {
    out.gradient = Vec::Zero(d);
    if (want_hessian) {
      auto h = H.body.model->origin_hessian();
      if (!h) throw Error(ErrorKind::InputDomain, "conjugate Hessian undefined at zero for this gauge");
      out.hessian = (H.eta() * *h).inverse();
    }
    return out;
  }
  Vec z;
  if (guess && guess->size() == d && guess->allFinite()) {
    z = *guess;
  } else {
    // Radial start: <grad H(r u), u> = |w| along u = w/|w| is monotone in r.
    z = Vec::Zero(d);
    const double wn = w.norm();
    if (wn > 0) {
      const Vec u = w / wn;
      auto radial = [&](double r) { return H.eval(t, Vec(r * u), false).gradient.dot(u) - wn; };
      double lo = 0.0, hi = std::max(1e-3, H.body.circumradius_bound);
      for (int i = 0; i < 200 && radial(hi) < 0; ++i) lo = hi, hi *= 2.0;
      for (int i = 0; i < 60; ++i) {
        const double mid = 0.5 * (lo + hi);
        (radial(mid) < 0 ? lo : hi) = mid;
      }
      z = 0.5 * (lo + hi) * u;
    }
  }
  const double scale = std::max(1.0, w.norm());
  HamiltonianEval e = H.eval(t, z, true);
  double f = z.dot(w) - e.value;
  Eigen::LLT<Mat> llt;
  double res = (w - e.gradient).norm();
  int it = 0;
  for (; it < max_iter; ++it) {
    llt.compute(e.hessian);
    if (llt.info() != Eigen::Success) {
      if (guess) return fenchel_eval(H, t, w, nullptr, want_hessian, max_iter);
      throw Error(ErrorKind::Convergence, "Hamiltonian Hessian not positive definite in conjugate solve", res);
    }
    if (res <= 1e-13 * scale) break;
    const Vec step = llt.solve(w - e.gradient);
    const double slope = (w - e.gradient).dot(step);
    double alpha = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      const Vec zt = z + alpha * step;
      HamiltonianEval et = H.eval(t, zt, true);
      const double ft = zt.dot(w) - et.value;
      const double rt = (w - et.gradient).norm();
      // Near the solution f is flat to rounding, so accept residual decrease too.
      if (ft >= f + 1e-4 * alpha * slope || (rt < res && alpha == 1.0)) {
        z = zt;
        e = std::move(et);
        f = ft;
        res = rt;
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) break;
  }
  if (res > 1e-9 * scale) {
    if (guess) return fenchel_eval(H, t, w, nullptr, want_hessian, max_iter);
    throw Error(ErrorKind::Convergence, "conjugate inner maximization did not converge", res);
  }
  if (it == max_iter) llt.compute(e.hessian);
  out.value = f;
  out.gradient = z;
  out.iterations = it;
  if (want_hessian) out.hessian = llt.solve(Mat::Identity(d, d));
  return out;
}

}  // namespace systola
