#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "critical.hpp"
#include "reeb.hpp"

namespace systola {

struct DualInequalityReport {
  int samples = 0;
  int violations = 0;
  double max_excess = -std::numeric_limits<double>::infinity();  // max of lhs - rhs
  std::optional<FourierLoop> witness_beta;
  Vec witness_beta_mean;
  double equality_gap = std::numeric_limits<double>::quiet_NaN();
  bool ok() const { return violations == 0; }
};

namespace detail {

inline FourierLoop random_loop(Rng& rng, int n, int K, double amp, bool positive, bool negative) {
  FourierLoop f = FourierLoop::zero(n, K);
  for (int k = 1; k <= K; ++k) {
    if (positive) f.pos[k - 1] = (amp / k) * rng.normal_vec(2 * n);
    if (negative) f.neg[k - 1] = (amp / k) * rng.normal_vec(2 * n);
  }
  return f;
}

inline FourierLoop add_loops(const FourierLoop& a, const FourierLoop& b) {
  const int K = std::max(a.K, b.K);
  FourierLoop A = a.resized(K), B = b.resized(K), s = FourierLoop::zero(a.n, K);
  for (int k = 0; k < K; ++k) {
    s.pos[k] = A.pos[k] + B.pos[k];
    s.neg[k] = A.neg[k] + B.neg[k];
  }
  return s;
}

inline double half_norm_negative(const FourierLoop& f) {
  double s = 0.0;
  for (int k = 1; k <= f.K; ++k) s += kTwoPi * k * f.neg[k - 1].squaredNorm();
  return s;
}

}  // namespace detail

// A_H(beta + eta) <= Psi(P beta) - 1/2 |P_- eta|^2_{1/2} for beta a loop with
// mean and eta in the constants plus negative modes; P drops the mean.
inline DualInequalityReport check_dual_inequality(const TimeHamiltonian& H, int samples, std::uint64_t seed,
                                                  const DualCriticalPoint* orbit = nullptr, int K = 6) {
  DualInequalityReport rep;
  Rng rng(seed);
  const int n = H.n();
  const double R = H.body.circumradius_bound;
  for (int i = 0; i < samples; ++i) {
    const double amp = R * rng.uniform(0.05, 0.6);
    const bool constant_beta = (i % 50 == 0);
    FourierLoop beta = constant_beta ? FourierLoop::zero(n, K) : detail::random_loop(rng, n, K, amp, true, true);
    const Vec beta_mean = rng.uniform(0.0, 0.8) * R * rng.unit_vec(2 * n);
    const bool zero_eta = (i % 10 == 0);
    FourierLoop eta = zero_eta ? FourierLoop::zero(n, K) : detail::random_loop(rng, n, K, 0.5 * amp, false, true);
    const Vec eta_mean = zero_eta ? Vec::Zero(2 * n) : Vec(rng.uniform(0.0, 0.5) * R * rng.unit_vec(2 * n));
    const FourierLoop sum = detail::add_loops(beta, eta);
    const double lhs = direct_action(H, sum, Vec(beta_mean + eta_mean), 16 * K);
    const double rhs = dual_action_eval(H, beta) - 0.5 * detail::half_norm_negative(eta);
    const double excess = lhs - rhs;
    ++rep.samples;
    if (excess > rep.max_excess) rep.max_excess = excess;
    if (excess > 1e-9 * std::max(1.0, std::abs(rhs))) {
      if (rep.violations == 0) {
        rep.witness_beta = beta;
        rep.witness_beta_mean = beta_mean;
      }
      ++rep.violations;
    }
  }
  if (orbit && !orbit->loop.empty()) {
    const int M = static_cast<int>(orbit->loop.size());
    Vec mean;
    const FourierLoop beta = FourierLoop::from_samples(orbit->loop, (M - 1) / 2, &mean);
    rep.equality_gap = std::abs(dual_action_eval(H, beta) - direct_action(H, orbit->loop));
  }
  return rep;
}

// Smallest N in {N0, 2 N0, ...} with a positive definite fiber Hessian at the
// origin and at random low-mode points of several sizes.
inline int select_order(const TimeHamiltonian& H, int N0, int max_order, std::uint64_t seed, int tail = 0) {
  const double R = H.body.circumradius_bound;
  for (int N = N0; N <= max_order; N *= 2) {
    const int K = tail > 0 && tail > N ? tail : 4 * N;
    bool ok = true;
    for (double s : {0.3, 0.6, 1.0})
      if (!fiber_convex(H, N, K, s * R, seed)) {
        ok = false;
        break;
      }
    if (ok) return N;
  }
  throw Error(ErrorKind::Convergence, "no order up to the limit makes the fiber functional convex");
}

struct SystoleOptions {
  DualOptions dual;
  double eta = 0.0;              // 0: default policy
  int max_order = 64;
  double convexify_delta = 1e-3; // applied to bodies that are not uniformly convex
  double oracle_tol = 1e-5;
  double tol_action = 1e-6;      // merge tolerance for the action spectrum
  double exclusion_tol = 1e-4;
  bool cross_check = true;
  OrbitSearchOptions shooting;
};

struct SpectrumEntry {
  double action = 0.0;
  double level = 0.0;
  int morse_index = 0;
  int nullity = 0;
  std::optional<int> cz;
  bool nondegenerate = false;
  int covering = 1;
  std::optional<int> self_linking;
  double oracle_delta = 0.0;         // distance to the shooting spectrum
  bool seeded_confirmation = false;  // shooting confirmed it only from the dual orbit
};

struct SystoleResult {
  ConvexBody body;  // the body actually used by the dual solver
  bool convexified = false;
  double convexify_delta = 0.0;
  double eta = 0.0;
  int order = 0;
  int tail = 0;
  double action = 0.0;
  ClosedOrbit orbit;
  std::vector<SpectrumEntry> spectrum;
  std::vector<DualCriticalPoint> points;
  std::optional<double> oracle_action;
  std::vector<double> oracle_spectrum;
  double oracle_delta = 0.0;
  double spectrum_delta = 0.0;  // max distance from a dual action to the nearest shooting action
  std::vector<std::string> diagnostics;
  double seconds_dual = 0.0;
  double seconds_oracle = 0.0;
};

inline std::vector<SpectrumEntry> action_spectrum(const std::vector<DualCriticalPoint>& pts, double eta,
                                                  double tol) {
  std::vector<SpectrumEntry> out;
  for (const auto& p : pts) {
    if (p.constant || p.spurious || !p.orbit) continue;
    const double a = p.orbit->action;
    if (!(a < eta)) continue;
    auto it = std::find_if(out.begin(), out.end(), [&](const SpectrumEntry& e) { return std::abs(e.action - a) < tol * std::max(1.0, a) * 10; });
    if (it != out.end()) continue;
    SpectrumEntry e;
    e.action = a;
    e.level = p.level;
    e.morse_index = p.morse_index;
    e.nullity = p.nullity;
    e.cz = p.cz;
    e.nondegenerate = p.orbit->nondegenerate;
    e.covering = p.orbit->covering_multiplicity;
    out.push_back(e);
  }
  std::sort(out.begin(), out.end(), [](const SpectrumEntry& a, const SpectrumEntry& b) { return a.action < b.action; });
  return out;
}

inline SystoleResult systole(const ConvexBody& input, const SystoleOptions& opt = {}) {
  SystoleResult res;
  res.body = input;
  if (!input.uniformly_convex) {
    res.body = convexified(input, opt.convexify_delta);
    res.convexified = true;
    res.convexify_delta = opt.convexify_delta;
  }
  const ConvexBody& body = res.body;
  const bool user_eta = opt.eta > 0.0;
  double eta = user_eta ? opt.eta : default_eta(body);

  using clock = std::chrono::steady_clock;
  auto t0 = clock::now();
  OrbitSearchResult shots;
  if (opt.cross_check) {
    shots = find_closed_orbits(body, eta + 10 * opt.exclusion_tol, opt.shooting);
    for (const auto& w : shots.warnings) res.diagnostics.push_back("shooting: " + w);
  }
  res.seconds_oracle = std::chrono::duration<double>(clock::now() - t0).count();
  std::vector<double> known;
  for (const auto& o : shots.orbits) known.push_back(o.action);
  if (!user_eta) {
    // nudge the automatic slope off any detected action
    for (int i = 0; i < 20; ++i) {
      const bool clash = std::any_of(known.begin(), known.end(),
                                     [&](double a) { return std::abs(a - eta) < 10 * opt.exclusion_tol; });
      if (!clash) break;
      eta *= 1.01;
    }
  }
  const TimeHamiltonian H = build_hamiltonian(body, eta, PerturbationSpec::core_only(), known, opt.exclusion_tol);
  res.eta = eta;

  t0 = clock::now();
  DualOptions dopt = opt.dual;
  dopt.order = select_order(H, dopt.order, opt.max_order, dopt.seed, dopt.tail);
  if (dopt.tail > 0 && dopt.tail <= dopt.order) dopt.tail = 0;
  res.order = dopt.order;
  res.tail = dopt.tail_or_default();
  DualProblem P(H, res.order, res.tail, dopt.grid_factor);
  CriticalSearchResult found = find_critical_points(P, dopt);
  res.seconds_dual = std::chrono::duration<double>(clock::now() - t0).count();
  for (const auto& d : found.diagnostics) res.diagnostics.push_back("dual: " + d);
  res.points = std::move(found.points);
  res.spectrum = action_spectrum(res.points, eta, opt.tol_action);
  if (res.spectrum.empty()) throw Error(ErrorKind::Convergence, "no nonconstant critical point was found");

  const DualCriticalPoint* best = nullptr;
  for (const auto& p : res.points)
    if (!p.constant && !p.spurious && p.orbit && (!best || p.orbit->action < best->orbit->action)) best = &p;
  res.action = best->orbit->action;
  res.orbit = *best->orbit;

  if (opt.cross_check) {
    for (const auto& o : shots.orbits)
      if (o.action < eta) res.oracle_spectrum.push_back(o.action);
    if (res.oracle_spectrum.empty())
      throw Error(ErrorKind::Inconsistency, "shooting oracle found no orbit below eta", res.action);
    res.oracle_action = *std::min_element(res.oracle_spectrum.begin(), res.oracle_spectrum.end());
    res.oracle_delta = std::abs(res.action - *res.oracle_action);
    for (auto& e : res.spectrum) {
      double best_d = std::numeric_limits<double>::infinity();
      for (double a : res.oracle_spectrum) best_d = std::min(best_d, std::abs(a - e.action));
      e.oracle_delta = best_d;
      if (best_d > opt.tol_action) {
        // Not hit by the multistart: let the shooter refine from the dual orbit.
        for (const auto& p : res.points)
          if (p.orbit && std::abs(p.orbit->action - e.action) < 10 * opt.tol_action) {
            if (const auto T = confirm_orbit(body, *p.orbit)) {
              e.oracle_delta = std::abs(*T - e.action);
              e.seeded_confirmation = true;
            }
            break;
          }
      }
      res.spectrum_delta = std::max(res.spectrum_delta, e.oracle_delta);
    }
    if (res.oracle_delta > opt.oracle_tol)
      throw Error(ErrorKind::Inconsistency,
                  "dual systole " + std::to_string(res.action) + " disagrees with shooting " +
                      std::to_string(*res.oracle_action),
                  res.oracle_delta);
  }
  return res;
}

// Hamiltonian with slope eta between the systole and the next action, with a
// time-dependent term splitting the systole circle into two orbits.
struct SplitSetup {
  TimeHamiltonian autonomous;
  TimeHamiltonian split;
  DualCriticalPoint circle;
  double level = 0.0;
};

inline SplitSetup split_systole_hamiltonian(const ConvexBody& body, double eta, double epsilon = 1e-3,
                                            int order = 8, std::uint64_t seed = 1) {
  SplitSetup s;
  s.autonomous = build_hamiltonian(body, eta, PerturbationSpec::core_only());
  DualProblem P(s.autonomous, order, 4 * order);
  DualOptions o;
  o.order = order;
  o.seed = seed;
  o.compute_cz = false;
  const auto found = find_critical_points(P, o);
  const DualCriticalPoint* best = nullptr;
  for (const auto& p : found.points)
    if (!p.constant && !p.spurious && (!best || p.dual_value < best->dual_value)) best = &p;
  if (!best) throw Error(ErrorKind::Convergence, "no circle of critical points below eta");
  s.circle = *best;
  s.level = s.autonomous.profile.level_for_slope(1.0 * best->reeb_action);
  const Vec mode1 = best->reduced.x.head(2 * body.dim_n);
  s.split = build_hamiltonian(body, eta, PerturbationSpec::orbit_splitting(mode1, best->level, epsilon));
  return s;
}

}  // namespace systola
