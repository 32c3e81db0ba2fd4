#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "cz.hpp"
#include "dual_action.hpp"
#include "error.hpp"
#include "fourier.hpp"
#include "hamiltonian.hpp"
#include "parallel.hpp"
#include "random.hpp"
#include "reeb.hpp"

namespace systola {

// A_H(gamma) = int gamma^* lambda0 - int H(t, gamma) for a loop given by
// uniform samples over [0,1).
inline double direct_action(const TimeHamiltonian& H, const std::vector<Vec>& samples) {
  const int M = static_cast<int>(samples.size());
  if (M < 3) throw Error(ErrorKind::InputDomain, "loop needs at least three samples");
  for (const auto& s : samples)
    if (s.size() != H.dim() || !s.allFinite()) throw Error(ErrorKind::InputDomain, "invalid loop sample");
  const FourierLoop f = FourierLoop::from_samples(samples, (M - 1) / 2);
  double h = 0.0;
  for (int j = 0; j < M; ++j) h += H.value(static_cast<double>(j) / M, samples[j]);
  return f.lambda_integral() - h / M;
}

inline double direct_action(const TimeHamiltonian& H, const FourierLoop& loop, const Vec& mean, int M = 0) {
  if (M <= 0) M = 8 * std::max(loop.K, 2);
  double h = 0.0;
  for (int j = 0; j < M; ++j) {
    const double t = static_cast<double>(j) / M;
    h += H.value(t, Vec(loop.eval(t) + mean));
  }
  return loop.lambda_integral() - h / M;
}

struct DualOptions {
  int order = 8;           // N
  int tail = 0;            // K_tail, 0 means 4N
  int grid_factor = 8;
  int budget = 4;          // random ray directions per mode
  int ray_samples = 24;
  std::uint64_t seed = 1;
  double criticality_tol = 1e-9;
  double nullity_tol = 1e-6;
  int max_newton = 60;
  bool compute_orbit_data = true;
  bool compute_cz = true;
  int max_mode = 0;        // 0: derived from eta and the inradius
  int tail_or_default() const { return tail > 0 ? tail : 4 * order; }
};

struct DualCriticalPoint {
  ReducedPoint reduced;
  Vec recovered_mean;
  std::vector<Vec> loop;  // u(t_j) = gamma(t_j) + mean on the dual grid
  double hamiltonian_action = 0.0;
  double dual_value = 0.0;
  int morse_index = 0;
  int nullity = 0;
  int positive_index = 0;
  double ode_residual = 0.0;
  bool constant = false;
  bool spurious = false;
  double level = 0.0;
  double reeb_action = 0.0;
  std::optional<ClosedOrbit> orbit;
  std::optional<int> cz;       // transverse CZ for autonomous orbits, full CZ otherwise
  std::string cz_kind;         // "transverse" | "hamiltonian"
};

namespace detail {

inline Vec phase_shift(const Vec& x, int n, double theta) {
  Vec y = x;
  const int d = 2 * n;
  const int blocks = static_cast<int>(x.size()) / d;
  for (int b = 0; b < blocks; ++b) y.segment(b * d, d) = rotate(x.segment(b * d, d), kTwoPi * (b + 1) * theta);
  return y;
}

// min over theta of |a - shift_theta(b)| for low-mode vectors (modes 1..N).
inline double aligned_distance(const Vec& a, const Vec& b, int n) {
  const int S = 256;
  int best = 0;
  double bd = std::numeric_limits<double>::infinity();
  for (int i = 0; i < S; ++i) {
    const double d = (a - phase_shift(b, n, static_cast<double>(i) / S)).norm();
    if (d < bd) { bd = d; best = i; }
  }
  double lo = (best - 1.0) / S, hi = (best + 1.0) / S;
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  auto f = [&](double th) { return (a - phase_shift(b, n, th)).norm(); };
  double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
  double f1 = f(x1), f2 = f(x2);
  for (int it = 0; it < 80; ++it) {
    if (f1 < f2) { hi = x2; x2 = x1; f2 = f1; x1 = hi - gr * (hi - lo); f1 = f(x1); }
    else { lo = x1; x1 = x2; f1 = f2; x2 = lo + gr * (hi - lo); f2 = f(x2); }
  }
  return std::min({bd, f1, f2});
}

}  // namespace detail

// Newton iteration on the reduced gradient with a pseudo-inverse of the
// metric-preconditioned Hessian and a trust radius; merit is the gradient norm.
inline std::optional<ReducedPoint> newton_critical(ReducedFunctional& F, Vec x, const DualOptions& opt) {
  const DualProblem& P = F.problem();
  const Vec gs = P.metric().head(P.dim_low()).cwiseSqrt();  // G^{1/2}
  double radius = std::max(0.5, 0.25 * gs.cwiseProduct(x).norm());
  ReducedPoint rp;
  try {
    rp = F.eval(x, true);
  } catch (const Error&) {
    return std::nullopt;
  }
  double gn = rp.gradient.cwiseQuotient(gs).norm();
  for (int it = 0; it < opt.max_newton; ++it) {
    const double tol = opt.criticality_tol * std::max(1.0, gs.cwiseProduct(x).norm());
    if (gn < tol) return rp;
    const Mat Hp = rp.hessian->array() / (gs * gs.transpose()).array();
    Eigen::SelfAdjointEigenSolver<Mat> es(symmetrize(Hp));
    const Vec gp = rp.gradient.cwiseQuotient(gs);
    const double emax = es.eigenvalues().cwiseAbs().maxCoeff();
    Vec sp = Vec::Zero(gp.size());
    for (Eigen::Index i = 0; i < gp.size(); ++i) {
      const double lam = es.eigenvalues()[i];
      if (std::abs(lam) > 1e-7 * std::max(1.0, emax))
        sp -= (es.eigenvectors().col(i).dot(gp) / lam) * es.eigenvectors().col(i);
    }
    bool accepted = false;
    for (int tr = 0; tr < 12; ++tr) {
      Vec step = sp;
      if (step.norm() > radius) step *= radius / step.norm();
      const Vec xt = x + step.cwiseQuotient(gs);
      try {
        ReducedPoint rt = F.eval(xt, false);
        const double gt = rt.gradient.cwiseQuotient(gs).norm();
        if (gt < gn) {
          x = xt;
          gn = gt;
          rp = F.eval(x, true);
          if (step.norm() >= 0.99 * radius) radius *= 2.0;
          accepted = true;
          break;
        }
      } catch (const Error&) {
      }
      radius = 0.25 * std::min(radius, step.norm());
    }
    if (!accepted) break;
  }
  const double tol = opt.criticality_tol * std::max(1.0, gs.cwiseProduct(x).norm());
  if (gn < tol) return rp;
  return std::nullopt;
}

// Mean z with mean_t (gamma' - X_H(t, gamma + z)) = 0, Newton from z = 0.
inline Vec recover_mean(const TimeHamiltonian& H, const std::vector<Vec>& gamma, const std::vector<Vec>& dgamma) {
  const int d = H.dim();
  const int M = static_cast<int>(gamma.size());
  Vec z = Vec::Zero(d);
  const Mat J = j0_matrix(d);
  double res = 0.0;
  for (int it = 0; it < 60; ++it) {
    Vec G = Vec::Zero(d);
    Mat DG = Mat::Zero(d, d);
    for (int j = 0; j < M; ++j) {
      const HamiltonianEval e = H.eval(static_cast<double>(j) / M, Vec(gamma[j] + z), true);
      G += dgamma[j] - J * e.gradient;
      DG -= J * e.hessian;
    }
    G /= M;
    DG /= M;
    res = G.norm();
    if (res < 1e-12 * std::max(1.0, z.norm())) return z;
    const Vec step = -DG.fullPivLu().solve(G);
    if (!step.allFinite()) break;
    z += step;
  }
  if (res < 1e-9) return z;
  throw Error(ErrorKind::Reconstruction, "mean recovery did not converge", res);
}

// Completes a reduced critical point: mean, loop, actions, indices, orbit.
inline DualCriticalPoint reconstruct_orbit(const DualProblem& P, const ReducedPoint& rp, const DualOptions& opt) {
  const TimeHamiltonian& H = P.hamiltonian();
  DualCriticalPoint cp;
  cp.reduced = rp;
  cp.dual_value = rp.value;
  const int n = P.n();
  const FourierLoop loop = FourierLoop::unpack(rp.full(), n, P.tail_order());
  const int M = P.grid_size();
  std::vector<Vec> g(M), dg(M);
  for (int j = 0; j < M; ++j) {
    const double t = static_cast<double>(j) / M;
    g[j] = loop.eval(t);
    dg[j] = loop.derivative(t);
  }
  cp.recovered_mean = recover_mean(H, g, dg);
  cp.loop.resize(M);
  double res2 = 0.0, nrm2 = 0.0, hsum = 0.0, lvl = 0.0;
  for (int j = 0; j < M; ++j) {
    const double t = static_cast<double>(j) / M;
    cp.loop[j] = g[j] + cp.recovered_mean;
    const HamiltonianEval e = H.eval(t, cp.loop[j], false);
    res2 += (dg[j] - apply_j0(e.gradient)).squaredNorm();
    nrm2 += dg[j].squaredNorm();
    hsum += e.value;
    lvl += H.body.gauge_value(cp.loop[j]);
  }
  cp.ode_residual = std::sqrt(res2 / M);
  cp.spurious = cp.ode_residual > 1e-6 * std::max(1.0, std::sqrt(nrm2 / M));
  const double lam = loop.lambda_integral();
  cp.hamiltonian_action = lam - hsum / M;
  cp.level = lvl / M;
  cp.constant = loop.packed().norm() < 1e-10;
  if (rp.hessian) {
    const Vec gs = P.metric().head(P.dim_low()).cwiseSqrt();
    const Mat Hp = rp.hessian->array() / (gs * gs.transpose()).array();
    const Inertia in = inertia(Hp, opt.nullity_tol);
    cp.morse_index = in.negative;
    cp.nullity = in.null;
    cp.positive_index = in.positive;
  }
  if (cp.constant) {
    if (opt.compute_cz) {
      const AsymptoticOperator A = hamiltonian_linearization(H, std::vector<Vec>(64, cp.recovered_mean));
      try {
        cp.cz = conley_zehnder_rotation(A);
        cp.cz_kind = "hamiltonian";
      } catch (const Error&) {
      }
    }
    return cp;
  }
  if (cp.level > 0) cp.reeb_action = lam / cp.level;
  if (H.autonomous()) {
    if (opt.compute_orbit_data && !cp.spurious) {
      ClosedOrbit orb;
      orb.action = cp.reeb_action;
      for (const auto& u : cp.loop) orb.points.push_back(u / std::sqrt(cp.level));
      const double min_period = kPi * H.body.inradius_bound * H.body.inradius_bound * 0.999;
      const int m = detail::covering_of(H.body, orb.points.front(), orb.action, min_period, {});
      orb = orbit_data(H.body, orb);
      orb.covering_multiplicity = m;
      orb.degenerate_family = !orb.nondegenerate && cp.nullity > 1;
      if (opt.compute_cz && H.n() == 2 && orb.nondegenerate) {
        try {
          cp.cz = conley_zehnder(transverse_linearization(H.body, orb)).cz;
          cp.cz_kind = "transverse";
        } catch (const Error&) {
        }
      }
      cp.orbit = std::move(orb);
    }
  } else if (opt.compute_cz && cp.nullity == 0) {
    try {
      cp.cz = conley_zehnder_rotation(hamiltonian_linearization(H, cp.loop));
      cp.cz_kind = "hamiltonian";
    } catch (const Error&) {
    }
  }
  return cp;
}

struct CriticalSearchResult {
  std::vector<DualCriticalPoint> points;
  int seeds = 0;
  int converged = 0;
  std::vector<std::string> diagnostics;
};

// Ray seeds: x = 0, plus interior local maxima of psi along rays
// s * e^{i phi} u placed in a single mode m.
inline std::vector<Vec> ray_seeds(const DualProblem& P, const DualOptions& opt, CriticalSearchResult& log) {
  const TimeHamiltonian& H = P.hamiltonian();
  const int n = P.n(), d = 2 * n;
  const double rin2 = H.body.inradius_bound * H.body.inradius_bound;
  int mmax = opt.max_mode > 0 ? opt.max_mode : static_cast<int>(std::floor(H.eta() / (kPi * rin2)));
  mmax = std::clamp(mmax, 1, P.order());
  // complex directions
  std::vector<Vec> dirs;
  for (int j = 0; j < n; ++j) {
    Vec u = Vec::Zero(d);
    u[2 * j] = 1.0;
    dirs.push_back(u);
  }
  const unsigned primes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37};
  for (int i = 1; i <= opt.budget; ++i) {
    Vec u(d);
    for (int c = 0; c < d; ++c) {
      // Box-Muller on Halton pairs keeps the directions deterministic.
      const double h1 = std::max(1e-12, radical_inverse(i + 17ull * opt.seed, primes[(2 * c) % 12]));
      const double h2 = radical_inverse(i + 17ull * opt.seed, primes[(2 * c + 1) % 12]);
      u[c] = std::sqrt(-2 * std::log(h1)) * std::cos(kTwoPi * h2);
    }
    dirs.push_back(u / u.norm());
  }
  std::vector<double> phases = {0.0};
  if (!H.autonomous()) phases = {0.0, 0.25, 0.5, 0.75};

  struct Ray {
    int m;
    Vec dir;
  };
  std::vector<Ray> rays;
  for (int m = 1; m <= mmax; ++m)
    for (const auto& u : dirs)
      for (double ph : phases) {
        Vec x = Vec::Zero(P.dim_low());
        x.segment((m - 1) * d, d) = rotate(u, kTwoPi * ph);
        rays.push_back({m, x});
      }

  auto scan = [&](std::size_t r) -> std::vector<Vec> {
    ReducedFunctional F(P);
    const Vec& x = rays[r].dir;
    const double hu = H.body.gauge_value(x.segment((rays[r].m - 1) * d, d));
    const double lo = 0.7 * H.profile.c0, hi = 2.3;
    const int S = opt.ray_samples;
    std::vector<double> s(S), v(S, -std::numeric_limits<double>::infinity());
    std::vector<bool> ok(S, false);
    for (int i = 0; i < S; ++i) {
      const double lvl = lo + (hi - lo) * i / (S - 1);
      s[i] = std::sqrt(lvl / hu);
      try {
        v[i] = F.value(s[i] * x);
        ok[i] = true;
      } catch (const Error&) {
        F.reset();
      }
    }
    std::vector<Vec> out;
    for (int i = 1; i + 1 < S; ++i)
      if (ok[i - 1] && ok[i] && ok[i + 1] && v[i] >= v[i - 1] && v[i] >= v[i + 1]) out.push_back(s[i] * x);
    return out;
  };
  const auto found = parallel_map<std::vector<Vec>>(rays.size(), scan);
  std::vector<Vec> seeds = {Vec::Zero(P.dim_low())};
  for (const auto& f : found) seeds.insert(seeds.end(), f.begin(), f.end());
  log.diagnostics.push_back("rays=" + std::to_string(rays.size()) + " seeds=" + std::to_string(seeds.size()));
  return seeds;
}

inline CriticalSearchResult find_critical_points(const DualProblem& P, const DualOptions& opt = {}) {
  CriticalSearchResult res;
  const std::vector<Vec> seeds = ray_seeds(P, opt, res);
  res.seeds = static_cast<int>(seeds.size());
  auto solve = [&](std::size_t i) -> std::optional<ReducedPoint> {
    ReducedFunctional F(P);
    return newton_critical(F, seeds[i], opt);
  };
  const auto sols = parallel_map<std::optional<ReducedPoint>>(seeds.size(), solve);
  std::vector<ReducedPoint> uniq;
  const bool autonomous = P.hamiltonian().autonomous();
  for (const auto& s : sols) {
    if (!s) continue;
    ++res.converged;
    bool dup = false;
    for (const auto& u : uniq) {
      const double scale = std::max(1.0, u.x.norm());
      const double dist = autonomous ? detail::aligned_distance(u.x, s->x, P.n()) : (u.x - s->x).norm();
      if (dist < 1e-6 * scale) {
        dup = true;
        break;
      }
    }
    if (!dup) uniq.push_back(*s);
  }
  auto complete = [&](std::size_t i) -> std::optional<DualCriticalPoint> {
    try {
      return reconstruct_orbit(P, uniq[i], opt);
    } catch (const Error& e) {
      return std::nullopt;
    }
  };
  const auto done = parallel_map<std::optional<DualCriticalPoint>>(uniq.size(), complete);
  for (std::size_t i = 0; i < done.size(); ++i) {
    if (done[i]) res.points.push_back(*done[i]);
    else res.diagnostics.push_back("reconstruction failed for a converged point");
  }
  std::sort(res.points.begin(), res.points.end(), [](const DualCriticalPoint& a, const DualCriticalPoint& b) {
    if (std::abs(a.dual_value - b.dual_value) > 1e-10) return a.dual_value < b.dual_value;
    for (Eigen::Index i = 0; i < a.reduced.x.size(); ++i)
      if (a.reduced.x[i] != b.reduced.x[i]) return a.reduced.x[i] < b.reduced.x[i];
    return false;
  });
  return res;
}

}  // namespace systola
