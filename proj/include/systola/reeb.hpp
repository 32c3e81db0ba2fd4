#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "body.hpp"
#include "error.hpp"
#include "fourier.hpp"
#include "frame.hpp"
#include "linalg.hpp"
#include "ode.hpp"
#include "parallel.hpp"
#include "random.hpp"

namespace systola {

struct ClosedOrbit {
  std::vector<Vec> points;  // uniform samples over one period, points[0] = base point
  double action = 0.0;      // Reeb period
  double level = 1.0;
  Mat monodromy;
  Mat2 transverse_monodromy = Mat2::Identity();
  bool has_transverse = false;
  bool nondegenerate = false;
  bool degenerate_family = false;
  int covering_multiplicity = 1;
  double closure_error = 0.0;

  const Vec& base_point() const { return points.front(); }
};

struct ReebOptions {
  OdeOptions ode{};
  double level_tol = 1e-6;
  int samples = 512;  // points stored per orbit
};

inline Vec reeb_field(const ConvexBody& body, const Vec& z, double level_tol = 1e-6) {
  const GaugeValue g = body.gauge(z);
  if (std::abs(g.value - 1.0) > level_tol)
    throw Error(ErrorKind::InputDomain, "point is off the unit level set", g.value - 1.0);
  return apply_j0(g.gradient);
}

namespace detail {

inline Vec radial_project(const ConvexBody& body, const Vec& z) { return z / std::sqrt(body.gauge_value(z)); }

}  // namespace detail

// Trajectory samples at the given times (no variations).
inline std::vector<Vec> reeb_trajectory(const ConvexBody& body, const Vec& z0, const std::vector<double>& times,
                                        const OdeOptions& opt = {}) {
  auto rhs = [&](double, const Vec& z) { return Vec(apply_j0(body.gauge(z).gradient)); };
  auto proj = [&](Vec z) { return detail::radial_project(body, z); };
  return dopri5(rhs, detail::radial_project(body, z0), times, opt, proj);
}

struct FlowResult {
  Vec z;
  Mat phi;
};

// Flow and linearized flow of X_{H_X} over time T (T >= 0).
inline FlowResult flow_with_variations(const ConvexBody& body, const Vec& z0, double T, const OdeOptions& opt = {},
                                       double level_tol = 1e-6) {
  const int d = body.dim();
  if (std::abs(body.gauge_value(z0) - 1.0) > level_tol)
    throw Error(ErrorKind::InputDomain, "start point is off the unit level set");
  if (!(T >= 0.0) || !std::isfinite(T)) throw Error(ErrorKind::InputDomain, "flow time must be finite and >= 0");
  if (T == 0.0) return {z0, Mat::Identity(d, d)};
  Vec y(d + d * d);
  y.head(d) = z0;
  const Mat I = Mat::Identity(d, d);
  y.tail(d * d) = Eigen::Map<const Vec>(I.data(), d * d);
  auto rhs = [&](double, const Vec& s) {
    const GaugeValue g = body.gauge(s.head(d));
    Vec out(s.size());
    out.head(d) = apply_j0(g.gradient);
    const Mat A = j0_matrix(d) * g.hessian;
    const Eigen::Map<const Mat> Phi(s.data() + d, d, d);
    Eigen::Map<Mat>(out.data() + d, d, d) = A * Phi;
    return out;
  };
  auto proj = [&](Vec s) {
    s.head(d) = detail::radial_project(body, s.head(d));
    return s;
  };
  const auto res = dopri5(rhs, y, std::vector<double>{T}, opt, proj);
  FlowResult r;
  r.z = res.back().head(d);
  r.phi = Eigen::Map<const Mat>(res.back().data() + d, d, d);
  return r;
}

// Restriction of a linear map preserving xi at z to the frame at z.
inline Mat2 transverse_restriction(const ConvexBody& body, const Vec& z, const Mat& M,
                                   const FrameOptions& fopt = {}) {
  const XiFrame f = xi_frame_at(body, z, fopt);
  Mat2 A;
  A.col(0) = frame_coordinates(f, M * f.w1);
  A.col(1) = frame_coordinates(f, M * f.w2);
  return A;
}

// Fills action, monodromy, transverse monodromy and nondegeneracy. Points
// are resampled from the base point.
inline ClosedOrbit orbit_data(const ConvexBody& body, ClosedOrbit orbit, const ReebOptions& opt = {}) {
  if (orbit.points.empty() || !(orbit.action > 0.0))
    throw Error(ErrorKind::Precondition, "orbit needs a base point and a positive period");
  // Base point: sample of maximal first coordinate.
  std::size_t ib = 0;
  for (std::size_t i = 1; i < orbit.points.size(); ++i)
    if (orbit.points[i][0] > orbit.points[ib][0]) ib = i;
  const Vec base = detail::radial_project(body, orbit.points[ib]);
  const double T = orbit.action;
  const int M = opt.samples;
  auto pts = reeb_trajectory(body, base, uniform_times(T, M, true), opt.ode);
  orbit.closure_error = (pts.back() - pts.front()).norm();
  pts.pop_back();
  orbit.points = std::move(pts);
  // Action as the integral of lambda0 over the sampled loop (spectral).
  Vec mean;
  const FourierLoop loop = FourierLoop::from_samples(orbit.points, M / 2 - 1, &mean);
  orbit.action = loop.lambda_integral();
  orbit.level = 1.0;
  const FlowResult fr = flow_with_variations(body, orbit.points.front(), T, opt.ode);
  orbit.monodromy = fr.phi;
  orbit.has_transverse = false;
  if (body.dim_n == 2) {
    orbit.transverse_monodromy = transverse_restriction(body, orbit.points.front(), fr.phi);
    orbit.has_transverse = true;
    orbit.nondegenerate = std::abs(2.0 - orbit.transverse_monodromy.trace()) > 1e-7;
  } else {
    // Without a contact frame: eigenvalue 1 has algebraic multiplicity 2
    // (flow direction and level direction) iff the orbit is nondegenerate.
    Eigen::EigenSolver<Mat> es(fr.phi);
    int near_one = 0;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
      if (std::abs(es.eigenvalues()[i] - Cplx(1.0, 0.0)) < 1e-4) ++near_one;
    orbit.nondegenerate = near_one <= 2;
  }
  return orbit;
}

inline double symplectic_defect(const Mat& M) {
  const Mat J = j0_matrix(static_cast<int>(M.rows()));
  return (M.transpose() * J * M - J).norm();
}

struct OrbitSearchOptions {
  int seeds = 24;
  std::uint64_t seed = 1;
  double action_tol = 1e-6;
  double hausdorff_tol = 1e-4;
  int max_family_representatives = 4;
  ReebOptions reeb{};
};

struct OrbitSearchResult {
  std::vector<ClosedOrbit> orbits;
  int converged_seeds = 0;
  std::vector<std::string> warnings;
};

namespace detail {

// Distance from each point of B to the polyline A, maximized.
inline double directed_hausdorff(const std::vector<Vec>& A, const std::vector<Vec>& B) {
  double worst = 0.0;
  const std::size_t m = A.size();
  for (const Vec& p : B) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < m; ++i) {
      const Vec& a = A[i];
      const Vec& b = A[(i + 1) % m];
      const Vec ab = b - a;
      const double s = std::clamp((p - a).dot(ab) / std::max(ab.squaredNorm(), 1e-300), 0.0, 1.0);
      best = std::min(best, (a + s * ab - p).norm());
    }
    worst = std::max(worst, best);
  }
  return worst;
}

inline double hausdorff(const std::vector<Vec>& A, const std::vector<Vec>& B) {
  return std::max(directed_hausdorff(A, B), directed_hausdorff(B, A));
}

struct ShotResult {
  bool ok = false;
  Vec z;
  double T = 0.0;
  double residual = 0.0;
};

// Gauss-Newton on (z, T) with min-norm SVD steps.
inline ShotResult shoot(const ConvexBody& body, const Vec& zs, double T0, const OdeOptions& ode) {
  const int d = body.dim();
  const Vec Xs = apply_j0(body.gauge(zs).gradient);
  Vec z = zs;
  double T = T0;
  ShotResult r;
  for (int it = 0; it < 40; ++it) {
    FlowResult fr;
    try {
      fr = flow_with_variations(body, z, T, ode);
    } catch (const Error&) {
      return r;
    }
    const GaugeValue gz = body.gauge(z);
    Vec F(d + 2);
    F.head(d) = fr.z - z;
    F[d] = (z - zs).dot(Xs);
    F[d + 1] = gz.value - 1.0;
    r.residual = F.norm();
    if (r.residual < 1e-11) {
      r.ok = true;
      r.z = z;
      r.T = T;
      return r;
    }
    Mat Jm = Mat::Zero(d + 2, d + 1);
    Jm.topLeftCorner(d, d) = fr.phi - Mat::Identity(d, d);
    Jm.topRightCorner(d, 1) = apply_j0(body.gauge(fr.z).gradient);
    Jm.block(d, 0, 1, d) = Xs.transpose();
    Jm.block(d + 1, 0, 1, d) = gz.gradient.transpose();
    Eigen::JacobiSVD<Mat> svd(Jm, Eigen::ComputeThinU | Eigen::ComputeThinV);
    svd.setThreshold(1e-9);
    const Vec step = -svd.solve(F);
    double maxstep = 0.25 * z.norm();
    const double sn = step.norm();
    const double scale = sn > maxstep ? maxstep / sn : 1.0;
    z = detail::radial_project(body, z + scale * step.head(d));
    T += scale * step[d];
    if (!(T > 1e-6) || !std::isfinite(T)) return r;
  }
  const FlowResult fr = flow_with_variations(body, z, T, ode);
  r.residual = (fr.z - z).norm();
  r.ok = r.residual < 1e-9;
  r.z = z;
  r.T = T;
  return r;
}

// Largest m > 1 such that the orbit closes at T/m.
inline int covering_of(const ConvexBody& body, const Vec& z, double T, double min_period, const OdeOptions& ode) {
  const int mmax = static_cast<int>(std::floor(T / min_period + 1e-9));
  for (int m = mmax; m >= 2; --m) {
    const auto p = reeb_trajectory(body, z, {T / m}, ode);
    if ((p.back() - z).norm() < 1e-6 * std::max(1.0, z.norm())) return m;
  }
  return 1;
}

}  // namespace detail

// Multistart shooting for closed Reeb orbits up to the action cutoff.
inline OrbitSearchResult find_closed_orbits(const ConvexBody& body, double action_cutoff,
                                            const OrbitSearchOptions& opt = {}) {
  if (!(action_cutoff > 0.0)) throw Error(ErrorKind::InputDomain, "action cutoff must be positive");
  const int d = body.dim();
  const double min_period = kPi * body.inradius_bound * body.inradius_bound * 0.999;

  std::vector<Vec> seeds;
  for (int j = 0; j < d; ++j) {
    Vec e = Vec::Zero(d);
    e[j] = 1.0;
    seeds.push_back(body.to_boundary(e));
  }
  Rng rng(opt.seed);
  for (int i = 0; i < opt.seeds; ++i) seeds.push_back(body.to_boundary(rng.unit_vec(d)));

  struct Candidate {
    Vec z;
    double T;
  };
  struct SeedOutcome {
    std::vector<Candidate> found;
  };

  const int scan = 1500;
  const double horizon = action_cutoff * 1.02;
  auto work = [&](std::size_t i) -> SeedOutcome {
    SeedOutcome out;
    const Vec& zs = seeds[i];
    std::vector<Vec> traj;
    try {
      traj = reeb_trajectory(body, zs, uniform_times(horizon, scan, true), opt.reeb.ode);
    } catch (const Error&) {
      return out;
    }
    std::vector<double> dist(traj.size());
    for (std::size_t k = 0; k < traj.size(); ++k) dist[k] = (traj[k] - zs).norm();
    // near-return local minima
    std::vector<std::pair<double, double>> cands;
    const double thresh = 0.5 * body.circumradius_bound;
    for (std::size_t k = 1; k + 1 < traj.size(); ++k) {
      const double t = horizon * static_cast<double>(k) / scan;
      if (t < 0.9 * min_period) continue;
      if (dist[k] <= dist[k - 1] && dist[k] <= dist[k + 1] && dist[k] < thresh) cands.push_back({dist[k], t});
    }
    std::sort(cands.begin(), cands.end());
    if (cands.size() > 4) cands.resize(4);
    for (const auto& c : cands) {
      const detail::ShotResult s = detail::shoot(body, zs, c.second, opt.reeb.ode);
      if (s.ok && s.T <= action_cutoff * (1.0 + 1e-9) + opt.action_tol) out.found.push_back({s.z, s.T});
    }
    return out;
  };
  const auto outcomes = parallel_map<SeedOutcome>(seeds.size(), work);

  OrbitSearchResult result;
  // Reduce every hit to its primitive orbit, then deduplicate.
  std::vector<ClosedOrbit> prims;
  for (const auto& o : outcomes) {
    if (!o.found.empty()) ++result.converged_seeds;
    for (const auto& c : o.found) {
      const int m = detail::covering_of(body, c.z, c.T, min_period, opt.reeb.ode);
      ClosedOrbit orb;
      orb.action = c.T / m;
      orb.points = {c.z};
      try {
        orb = orbit_data(body, orb, opt.reeb);
      } catch (const Error&) {
        continue;
      }
      if (orb.closure_error > 1e-7) continue;
      bool dup = false;
      for (const auto& p : prims) {
        if (std::abs(p.action - orb.action) < opt.action_tol &&
            detail::hausdorff(p.points, orb.points) < opt.hausdorff_tol) {
          dup = true;
          break;
        }
      }
      if (!dup) prims.push_back(std::move(orb));
    }
  }
  if (result.converged_seeds < static_cast<int>(seeds.size()) / 4)
    result.warnings.push_back("fewer than a quarter of the seeds converged");

  // Degenerate families: keep a bounded number of representatives per action.
  std::sort(prims.begin(), prims.end(), [](const ClosedOrbit& a, const ClosedOrbit& b) {
    if (a.action != b.action) return a.action < b.action;
    return a.points.front()[0] > b.points.front()[0];
  });
  std::vector<ClosedOrbit> kept;
  for (auto& p : prims) {
    if (!p.nondegenerate) {
      int same = 0;
      for (auto& k : kept)
        if (!k.nondegenerate && std::abs(k.action - p.action) < 1e-5) {
          ++same;
          k.degenerate_family = true;
          p.degenerate_family = true;
        }
      if (same >= opt.max_family_representatives) continue;
    }
    kept.push_back(std::move(p));
  }
  for (auto& p : kept)
    if (!p.nondegenerate) p.degenerate_family = true;

  // Iterates by period multiplication.
  for (const auto& p : kept) {
    result.orbits.push_back(p);
    for (int m = 2; m * p.action <= action_cutoff + opt.action_tol; ++m) {
      ClosedOrbit it = p;
      it.action = m * p.action;
      it.covering_multiplicity = m;
      try {
        it = orbit_data(body, it, opt.reeb);
      } catch (const Error&) {
        continue;
      }
      it.covering_multiplicity = m;
      it.degenerate_family = p.degenerate_family;
      result.orbits.push_back(std::move(it));
    }
  }
  std::sort(result.orbits.begin(), result.orbits.end(), [](const ClosedOrbit& a, const ClosedOrbit& b) {
    if (std::abs(a.action - b.action) > 1e-9) return a.action < b.action;
    for (Eigen::Index i = 0; i < a.points.front().size(); ++i)
      if (a.points.front()[i] != b.points.front()[i]) return a.points.front()[i] < b.points.front()[i];
    return false;
  });
  return result;
}

}  // namespace systola

namespace systola {

// Shooting refinement seeded at a candidate orbit: returns the refined period
// of the closed orbit through a nearby boundary point, if it closes.
inline std::optional<double> confirm_orbit(const ConvexBody& body, const ClosedOrbit& candidate,
                                           const ReebOptions& opt = {}) {
  if (candidate.points.empty()) return std::nullopt;
  const Vec z = detail::radial_project(body, candidate.points.front());
  const detail::ShotResult s = detail::shoot(body, z, candidate.action, opt.ode);
  if (!s.ok) return std::nullopt;
  return s.T;
}

}  // namespace systola
