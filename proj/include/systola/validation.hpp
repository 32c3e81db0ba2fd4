#pragma once

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "analysis.hpp"
#include "capacity.hpp"
#include "certificate.hpp"
#include "cz.hpp"
#include "knots.hpp"
#include "morse.hpp"

namespace systola {

enum class SuiteLevel { Quick, Full };

inline SuiteLevel parse_suite_level(const std::string& s) {
  if (s == "quick") return SuiteLevel::Quick;
  if (s == "full") return SuiteLevel::Full;
  throw Error(ErrorKind::Usage, "suite must be 'quick' or 'full'");
}

struct ValidationOptions {
  SuiteLevel level = SuiteLevel::Quick;
  std::uint64_t seed = 1;
  int morse_jitters = 5;
  std::function<void(const SuiteEntry&, double seconds)> on_result;  // progress hook
};

struct ValidationReport {
  std::vector<SuiteEntry> entries;
  std::vector<double> seconds;  // kept apart so the entries stay deterministic
  bool all_pass() const {
    for (const auto& e : entries)
      if (!e.pass) return false;
    return !entries.empty();
  }
};

namespace detail {

inline std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

inline std::string g10(double v) { return fmt("%.10g", v); }
inline std::string e2(double v) { return fmt("%.2e", v); }

// Shared, lazily built artifacts; several criteria look at the same runs.
class ValidationContext {
 public:
  explicit ValidationContext(const ValidationOptions& opt) : opt_(opt) {}

  const ValidationOptions& options() const { return opt_; }
  bool full() const { return opt_.level == SuiteLevel::Full; }

  static SystoleOptions standard_options() {
    SystoleOptions o;
    o.dual.order = 8;
    o.dual.tail = 32;
    return o;
  }

  const SystoleResult& ellipsoid() {
    if (!ellipsoid_) {
      const auto t0 = std::chrono::steady_clock::now();
      ellipsoid_ = systole(make_ellipsoid({1.0, std::sqrt(2.0)}), standard_options());
      ellipsoid_seconds_ = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
    return *ellipsoid_;
  }
  double ellipsoid_seconds() {
    ellipsoid();
    return ellipsoid_seconds_;
  }

  const SystoleResult& ball() {
    if (!ball_) ball_ = systole(make_ball(1.0), standard_options());
    return *ball_;
  }

  const SystoleResult& comparison_ellipsoid() {
    if (!cmp_) cmp_ = systole(make_ellipsoid({1.2, 1.7}), standard_options());
    return *cmp_;
  }

  std::vector<ConvexBody> oracle_bodies() const {
    std::vector<ConvexBody> out;
    Rng rng(opt_.seed ^ 0xE11u);
    for (int i = 0; i < 3; ++i) out.push_back(make_ellipsoid({1.0, rng.uniform(1.1, 1.9)}));
    out.push_back(bump_ellipsoid());
    if (full()) out.push_back(make_smoothed_polydisk(1.0, 2.0, 0.02));
    return out;
  }

  static std::string label(const ConvexBody& b) {
    std::string s = b.spec.type + "(";
    for (std::size_t i = 0; i < b.spec.a.size(); ++i) s += (i ? "," : "") + fmt("%.4g", b.spec.a[i]);
    if (b.spec.type == "smoothed_polydisk") s += "," + fmt("%.4g", b.spec.b);
    return s + ")";
  }

  static ConvexBody bump_ellipsoid() {
    return make_perturbed_ellipsoid({1.0, std::sqrt(2.0)}, 0.05, {0.3, 0.2, 0.3, 0.1}, 0.3);
  }

  // Runs (or recalls) the oracle bodies; a failed run is kept as its message.
  const std::vector<std::pair<std::string, std::optional<SystoleResult>>>& oracle_runs() {
    if (!oracle_runs_) {
      oracle_runs_.emplace();
      for (const auto& b : oracle_bodies()) {
        try {
          oracle_runs_->push_back({label(b), systole(b, standard_options())});
        } catch (const Error& e) {
          oracle_runs_->push_back({label(b) + ": " + e.what(), std::nullopt});
        }
      }
    }
    return *oracle_runs_;
  }

  struct Split {
    SplitSetup setup;
    std::unique_ptr<DualProblem> problem;
    CriticalSearchResult found;
  };

  Split& split() {
    if (!split_) {
      split_ = std::make_unique<Split>();
      split_->setup = split_systole_hamiltonian(make_ellipsoid({1.0, std::sqrt(2.0)}), 1.2);
      split_->problem = std::make_unique<DualProblem>(split_->setup.split, 8, 32);
      split_->found = find_critical_points(*split_->problem, {});
    }
    return *split_;
  }

 private:
  ValidationOptions opt_;
  std::optional<SystoleResult> ellipsoid_, ball_, cmp_;
  double ellipsoid_seconds_ = 0.0;
  std::optional<std::vector<std::pair<std::string, std::optional<SystoleResult>>>> oracle_runs_;
  std::unique_ptr<Split> split_;
};

struct Outcome {
  bool pass = false;
  std::string detail;
};

inline const DualCriticalPoint* lowest_orbit_point(const SystoleResult& r) {
  const DualCriticalPoint* best = nullptr;
  for (const auto& p : r.points)
    if (!p.constant && !p.spurious && p.orbit && (!best || p.orbit->action < best->orbit->action)) best = &p;
  return best;
}

inline Outcome ellipsoid_capacity(ValidationContext& ctx) {
  const SystoleResult& r = ctx.ellipsoid();
  const double secs = ctx.ellipsoid_seconds();
  const std::vector<double> expect = {1.0, std::sqrt(2.0), 2.0};
  std::vector<double> got;
  for (const auto& e : r.spectrum)
    if (e.action < 2.2) got.push_back(e.action);
  bool ok = std::abs(r.action - 1.0) < 1e-6 && got.size() == expect.size();
  double worst = std::abs(r.action - 1.0);
  for (std::size_t i = 0; ok && i < got.size(); ++i) {
    worst = std::max(worst, std::abs(got[i] - expect[i]));
    ok = std::abs(got[i] - expect[i]) < 1e-6;
  }
  std::string d = "systole " + g10(r.action) + ", spectrum below 2.2:";
  for (double a : got) d += " " + g10(a);
  d += ", max error " + e2(worst) + ", N " + std::to_string(r.order) + ", K_tail " + std::to_string(r.tail);
  d += secs < 60.0 ? ", runtime under 60 s" : ", runtime over 60 s";
  return {ok && secs < 60.0 && r.order == 8 && r.tail == 32, d};
}

inline Outcome ball_normalization(ValidationContext& ctx) {
  const SystoleResult& r = ctx.ball();
  const bool deg = r.orbit.degenerate_family;
  return {std::abs(r.action - 1.0) < 1e-6 && deg,
          "systole " + g10(r.action) + ", degenerate family " + (deg ? "yes" : "no")};
}

inline Outcome oracle_agreement(ValidationContext& ctx) {
  bool ok = true;
  std::string d;
  for (const auto& [name, run] : ctx.oracle_runs()) {
    if (!d.empty()) d += "; ";
    if (!run) {
      ok = false;
      d += name;
      continue;
    }
    const double delta = std::max(run->oracle_delta, run->spectrum_delta);
    ok = ok && delta <= 1e-6;
    d += name + " systole " + g10(run->action) + " delta " + e2(delta);
  }
  return {ok, d};
}

// i_M = CZ - n wherever both sides are defined and the point is nondegenerate
// (nullity 1 from the circle symmetry in the autonomous case).
inline void index_identity_on(const std::vector<DualCriticalPoint>& pts, bool autonomous, int n, int& checked,
                              int& failed) {
  for (const auto& p : pts) {
    if (p.spurious || !p.cz) continue;
    const int expected_nullity = (autonomous && !p.constant) ? 1 : 0;
    if (p.nullity != expected_nullity) continue;
    if (autonomous && !p.constant && !(p.orbit && p.orbit->nondegenerate)) continue;
    ++checked;
    if (p.morse_index != *p.cz - n) ++failed;
  }
}

inline Outcome index_identity(ValidationContext& ctx) {
  int checked = 0, failed = 0;
  index_identity_on(ctx.ellipsoid().points, true, 2, checked, failed);
  index_identity_on(ctx.comparison_ellipsoid().points, true, 2, checked, failed);
  for (const auto& [name, run] : ctx.oracle_runs())
    if (run) index_identity_on(run->points, true, 2, checked, failed);
  auto& sp = ctx.split();
  index_identity_on(sp.found.points, false, 2, checked, failed);
  std::optional<int> split_cz, split_index;
  const DualCriticalPoint* low = nullptr;  // the lower of the two split orbits
  for (const auto& p : sp.found.points)
    if (!p.constant && !p.spurious && (!low || p.dual_value < low->dual_value)) low = &p;
  if (low) {
    split_cz = low->cz;
    split_index = low->morse_index;
  }
  const bool split_ok = split_cz && *split_cz == 3 && split_index && *split_index == 1;
  std::string d = std::to_string(checked) + " points checked, " + std::to_string(failed) + " mismatches; split systole ";
  d += split_cz ? "CZ " + std::to_string(*split_cz) + " index " + std::to_string(*split_index) : std::string("missing");
  return {failed == 0 && checked > 0 && split_ok, d};
}

inline AsymptoticOperator random_rank1_operator(Rng& rng) {
  const int M = 64;
  Mat S0(2, 2), A1(2, 2), B1(2, 2);
  auto sym = [&](double scale) {
    Mat m(2, 2);
    m(0, 0) = rng.uniform(-1, 1);
    m(1, 1) = rng.uniform(-1, 1);
    m(0, 1) = m(1, 0) = rng.uniform(-1, 1);
    return Mat(scale * m);
  };
  S0 = sym(3.0 * kTwoPi);
  A1 = sym(kTwoPi);
  B1 = sym(kTwoPi);
  AsymptoticOperator A;
  A.rank = 1;
  for (int j = 0; j < M; ++j) {
    const double t = static_cast<double>(j) / M;
    A.S.push_back(symmetrize(S0 + A1 * std::cos(kTwoPi * t) + B1 * std::sin(kTwoPi * t)));
  }
  return A;
}

inline Outcome cz_cross_validation(ValidationContext& ctx) {
  Rng rng(ctx.options().seed ^ 0xC2u);
  int agree = 0, total = 0, draws = 0;
  while (total < 50 && draws < 500) {
    ++draws;
    const AsymptoticOperator A = random_rank1_operator(rng);
    const SymplecticPath path = symplectic_path(A);
    if (std::abs((path.psi.back() - Mat::Identity(2, 2)).determinant()) < 0.05) continue;
    ++total;
    try {
      if (conley_zehnder(A).cz == conley_zehnder_rotation(path, &A)) ++agree;
    } catch (const Error&) {
    }
  }
  std::string rot;
  bool rot_ok = true;
  const std::vector<std::pair<double, int>> table = {{0.3, 1}, {1.4, 3}, {2.7, 5}};
  for (const auto& [c, want] : table) {
    const auto A = AsymptoticOperator::rotation(c);
    const int w = conley_zehnder(A).cz, r = conley_zehnder_rotation(A);
    rot_ok = rot_ok && w == want && r == want;
    rot += " " + std::to_string(w) + "/" + std::to_string(r);
  }
  return {total == 50 && agree == 50 && rot_ok,
          std::to_string(agree) + "/" + std::to_string(total) + " random operators agree; rotation c=0.3,1.4,2.7 winding/rotation:" + rot};
}

// Lowest CZ of an orbit: its index when nondegenerate, else the lower end of
// the bracket of nearby nondegenerate operators.
inline std::optional<int> lower_cz(const ConvexBody& body, const DualCriticalPoint& p) {
  if (p.cz) return p.cz;
  if (!p.orbit) return std::nullopt;
  const auto br = conley_zehnder_bracket(transverse_linearization(body, *p.orbit));
  return std::min(br.first, br.second);
}

inline Outcome dynamical_convexity(ValidationContext& ctx) {
  std::vector<const SystoleResult*> runs = {&ctx.ellipsoid(), &ctx.ball(), &ctx.comparison_ellipsoid()};
  for (const auto& [name, run] : ctx.oracle_runs())
    if (run && run->body.uniformly_convex && !run->convexified) runs.push_back(&*run);
  int orbits = 0, low = 0, missing = 0;
  int min_cz = 1 << 20;
  for (const SystoleResult* r : runs) {
    for (const auto& p : r->points) {
      if (p.constant || p.spurious || !p.orbit) continue;
      ++orbits;
      std::optional<int> cz;
      try {
        cz = lower_cz(r->body, p);
      } catch (const Error&) {
      }
      if (!cz) {
        ++missing;
        continue;
      }
      min_cz = std::min(min_cz, *cz);
      if (*cz < 3) ++low;
    }
  }
  const DualCriticalPoint* sys = lowest_orbit_point(ctx.ellipsoid());
  const bool sys_ok = sys && sys->cz && *sys->cz == 3;
  return {low == 0 && missing == 0 && orbits > 0 && sys_ok,
          std::to_string(orbits) + " orbits on " + std::to_string(runs.size()) + " bodies, minimum CZ " +
              std::to_string(min_cz) + ", unresolved " + std::to_string(missing) + ", ellipsoid systole CZ " +
              (sys && sys->cz ? std::to_string(*sys->cz) : std::string("n/a"))};
}

inline std::string matrix_string(const std::vector<std::vector<long long>>& B) {
  std::string s = "[";
  for (std::size_t i = 0; i < B.size(); ++i) {
    if (i) s += ";";
    for (std::size_t j = 0; j < B[i].size(); ++j) s += (j ? " " : "") + std::to_string(B[i][j]);
  }
  return s + "]";
}

inline Outcome morse_structure(ValidationContext& ctx) {
  auto& sp = ctx.split();
  std::vector<int> idx;
  for (const auto& p : sp.found.points) idx.push_back(p.morse_index);
  const bool three = idx == std::vector<int>{0, 1, 2};
  if (!three) return {false, "critical point indices do not read (0,1,2)"};
  bool ok = true;
  std::string d = "indices (0,1,2)";
  std::optional<std::string> reference;
  for (int s = 1; s <= ctx.options().morse_jitters; ++s) {
    MorseOptions mo;
    mo.seed = ctx.options().seed + static_cast<std::uint64_t>(s) - 1;
    const MorseComplexData data = build_complex(*sp.problem, sp.found.points, mo);
    const ComplexReport rep = verify_complex(data);
    const auto d0 = data.boundary.count(0) ? data.boundary.at(0) : std::vector<std::vector<long long>>{};
    const auto d1 = data.boundary.count(1) ? data.boundary.at(1) : std::vector<std::vector<long long>>{};
    const bool d0_ok = d0.size() == 1 && d0[0].size() == 1 && std::llabs(d0[0][0]) == 1;
    bool d1_ok = d1.size() == 1 && d1[0].size() == 1;
    for (const auto& row : d1)
      for (long long v : row) d1_ok = d1_ok && v == 0;
    const auto h0 = rep.homology.count(0) ? rep.homology.at(0) : HomologyGroup{};
    const bool h0_ok = h0.rank == 0 && h0.torsion.empty();
    const bool run_ok = d0_ok && d1_ok && rep.ok() && h0_ok && data.failures.empty();
    std::string key = "|d0| " + std::to_string(d0.empty() || d0[0].empty() ? -1 : std::llabs(d0[0][0])) +
                      " d1 " + matrix_string(d1);
    if (!reference) reference = key;
    ok = ok && run_ok && key == *reference;
    if (!run_ok) d += "; jitter seed " + std::to_string(mo.seed) + " failed (" + key + ")";
  }
  d += "; " + (reference ? *reference : std::string()) + ", d^2 = 0, H0 = 0 across " +
       std::to_string(ctx.options().morse_jitters) + " jitters";
  return {ok, d};
}

inline Outcome mountain_pass(ValidationContext& ctx) {
  auto& sp = ctx.split();
  ReducedFlowModel model(*sp.problem);
  const auto mp = morse_points(*sp.problem, sp.found.points, model.metric());
  int i1 = -1, i0 = -1;
  for (int i = 0; i < static_cast<int>(mp.size()); ++i) {
    if (mp[i].index == 1) i1 = i;
    if (mp[i].index == 0) i0 = i;
  }
  if (i1 < 0 || i0 < 0) return {false, "no index-1 or index-0 point"};
  const BranchFates b = trace_unstable(model, mp, i1);
  auto converged = [&](const FlowFate& f) { return f.kind == FateKind::Converged && f.target == i0; };
  auto escaped = [&](const FlowFate& f) { return f.kind == FateKind::Escaped && f.final_value < -1e3; };
  const bool ok = (converged(b.plus) && escaped(b.minus)) || (converged(b.minus) && escaped(b.plus));
  return {ok, "branches: " + to_string(b.plus) + ", " + to_string(b.minus)};
}

inline Outcome dual_inequality(ValidationContext& ctx) {
  const SystoleResult& r = ctx.ellipsoid();
  const TimeHamiltonian H = build_hamiltonian(r.body, r.eta, PerturbationSpec::core_only());
  const DualCriticalPoint* orbit = lowest_orbit_point(r);
  const DualInequalityReport rep = check_dual_inequality(H, 1000, ctx.options().seed, orbit);
  const bool ok = rep.samples == 1000 && rep.violations == 0 && std::isfinite(rep.equality_gap) && rep.equality_gap < 1e-6;
  return {ok, std::to_string(rep.violations) + " violations in " + std::to_string(rep.samples) +
                  " samples, max excess " + e2(rep.max_excess) + ", equality gap " + e2(rep.equality_gap)};
}

inline Outcome action_identity(ValidationContext& ctx) {
  double worst = 0.0;
  int count = 0;
  auto scan = [&](const std::vector<DualCriticalPoint>& pts) {
    for (const auto& p : pts) {
      if (p.spurious) continue;
      worst = std::max(worst, std::abs(p.dual_value - p.hamiltonian_action));
      ++count;
    }
  };
  scan(ctx.ellipsoid().points);
  scan(ctx.ball().points);
  scan(ctx.comparison_ellipsoid().points);
  for (const auto& [name, run] : ctx.oracle_runs())
    if (run) scan(run->points);
  scan(ctx.split().found.points);
  // Homogeneous Hamiltonian: the period-1 orbit has zero dual action.
  const ConvexBody body = make_ellipsoid({1.0, std::sqrt(2.0)});
  const ClosedOrbit& a1 = ctx.ellipsoid().orbit;
  const FourierLoop loop = FourierLoop::from_samples(a1.points, 32);
  const double zero = dual_action_eval(homogeneous_hamiltonian(body, 1.0), loop);
  return {count > 0 && worst < 1e-8 && std::abs(zero) < 1e-8,
          std::to_string(count) + " critical points, max |Psi - A_H| " + e2(worst) + ", homogeneous value " + e2(std::abs(zero))};
}

inline Outcome hopf_signature(ValidationContext& ctx) {
  const SystoleResult& r = ctx.ellipsoid();
  const ClosedOrbit* other = nullptr;
  for (const auto& p : r.points)
    if (p.orbit && std::abs(p.orbit->action - std::sqrt(2.0)) < 1e-5) other = &*p.orbit;
  if (!other) return {false, "second simple orbit not found"};
  int sl = 0, lk = 0;
  try {
    sl = self_linking(r.body, r.orbit).value;
    lk = linking_number(r.orbit, *other);
  } catch (const Error& e) {
    return {false, e.what()};
  }
  bool ok = sl == -1 && lk == 1;
  std::string d = "ellipsoid systole sl " + std::to_string(sl) + ", lk with a2 " + std::to_string(lk);
  if (ctx.full()) {
    const ConvexBody pd = make_smoothed_polydisk(1.0, 1.5, 0.02);
    const OrbitSearchResult found = find_closed_orbits(pd, 1.2);
    double amin = std::numeric_limits<double>::infinity();
    for (const auto& o : found.orbits) amin = std::min(amin, o.action);
    std::vector<const ClosedOrbit*> reps;
    for (const auto& o : found.orbits)
      if (o.action < amin + 1e-5) reps.push_back(&o);
    int nonzero = 0, pairs = 0;
    try {
      for (std::size_t i = 0; i < reps.size(); ++i)
        for (std::size_t j = i + 1; j < reps.size(); ++j) {
          ++pairs;
          if (linking_number(*reps[i], *reps[j]) != 0) ++nonzero;
        }
    } catch (const Error& e) {
      return {false, d + "; polydisk: " + e.what()};
    }
    ok = ok && reps.size() >= 2 && nonzero == 0;
    d += "; polydisk " + std::to_string(reps.size()) + " systole representatives, " + std::to_string(nonzero) +
         " linked pairs out of " + std::to_string(pairs);
  }
  return {ok, d};
}

inline Outcome monotonicity(ValidationContext& ctx) {
  const double a = ctx.ellipsoid().action, b = ctx.comparison_ellipsoid().action;
  return {a <= b && std::abs(a - 1.0) < 1e-6 && std::abs(b - 1.2) < 1e-6,
          "E(1,1.414..) " + g10(a) + " <= E(1.2,1.7) " + g10(b)};
}

inline Outcome fredholm_arithmetic(ValidationContext&) {
  const int plane = curve_index({2, 1, 0, {3}, {}});
  const int cylinder = curve_index({2, 0, 0, {3}, {3}});
  const int sphere = fredholm_index({1, 2, 0, {}, {}});
  return {plane == 2 && cylinder == 0 && sphere == 2,
          "plane " + std::to_string(plane) + ", cylinder " + std::to_string(cylinder) + ", sphere " + std::to_string(sphere)};
}

// Central differences of f along every coordinate, compared with g.
template <class F>
double gradient_error(F&& f, const Vec& x, const Vec& g, double h) {
  Vec fd(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Vec xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    fd[i] = (f(xp) - f(xm)) / (2 * h);
  }
  return (fd - g).norm() / std::max(g.norm(), 1e-12);
}

inline Outcome numerical_hygiene(ValidationContext& ctx) {
  Rng rng(ctx.options().seed ^ 0xF0u);
  const int pts = 10;
  double e_gauge = 0, e_fench = 0, e_psi = 0, e_red = 0;
  const std::vector<ConvexBody> bodies = {make_ellipsoid({1.0, std::sqrt(2.0)}), make_ball(1.0),
                                          ValidationContext::bump_ellipsoid(), make_smoothed_polydisk(1.0, 2.0, 0.02)};
  for (const auto& b : bodies)
    for (int i = 0; i < pts; ++i) {
      const Vec z = rng.uniform(0.3, 1.5) * rng.unit_vec(4);
      e_gauge = std::max(e_gauge, gradient_error([&](const Vec& x) { return b.gauge_value(x); }, z, b.gauge(z).gradient, 1e-6));
    }
  const ConvexBody E = bodies[0];
  const TimeHamiltonian H = build_hamiltonian(E, 2.2, PerturbationSpec::core_only());
  for (int i = 0; i < pts; ++i) {
    const Vec z = rng.uniform(0.1, 1.2) * rng.unit_vec(4);
    const Vec w = H.gradient(0.0, z);
    const Vec g = fenchel_eval(H, 0.0, w).gradient;
    e_fench = std::max(e_fench, gradient_error([&](const Vec& x) { return fenchel_eval(H, 0.0, x, nullptr, false).value; }, w, g, 1e-6));
  }
  {
    const DualProblem P(H, 2, 6);
    for (int i = 0; i < pts; ++i) {
      const Vec c = 0.05 * rng.normal_vec(P.dim()).cwiseQuotient(P.metric().cwiseSqrt()) * 4.0;
      const Vec g = P.eval(c, 1).gradient;
      e_psi = std::max(e_psi, gradient_error([&](const Vec& x) { return P.value(x); }, c, g, 1e-6));
    }
  }
  {
    const DualProblem P(H, 2, 8);
    ReducedFunctional F(P);
    for (int i = 0; i < pts; ++i) {
      const Vec x = 0.05 * rng.normal_vec(P.dim_low()).cwiseQuotient(P.metric().head(P.dim_low()).cwiseSqrt()) * 4.0;
      const Vec g = F.eval(x).gradient;
      e_red = std::max(e_red, gradient_error([&](const Vec& y) { return F.value(y); }, x, g, 1e-5));
    }
  }
  const bool grads_ok = e_gauge < 1e-5 && e_fench < 1e-5 && e_psi < 1e-5 && e_red < 1e-5;

  // Refinement: (N, K_tail) -> (2N, 2K_tail), K_gal -> 2 K_gal.
  const SystoleResult& base = ctx.ellipsoid();
  SystoleOptions fine = ValidationContext::standard_options();
  fine.dual.order = 16;
  fine.dual.tail = 64;
  double d_sys = 0.0, d_spec = 0.0, d_gal = 0.0;
  bool refine_ok = true;
  try {
    const SystoleResult r2 = systole(base.body, fine);
    d_sys = std::abs(r2.action - base.action);
    refine_ok = r2.spectrum.size() == base.spectrum.size();
    for (std::size_t i = 0; refine_ok && i < base.spectrum.size(); ++i)
      d_spec = std::max(d_spec, std::abs(r2.spectrum[i].action - base.spectrum[i].action));
    const AsymptoticOperator A = transverse_linearization(base.body, base.orbit);
    SpectrumOptions s1, s2;
    s2.K_gal = 2 * s1.K_gal;
    const SpectralData a = operator_spectrum(A, -12.5, 12.5, s1), b = operator_spectrum(A, -12.5, 12.5, s2);
    refine_ok = refine_ok && a.eigenvalues.size() == b.eigenvalues.size() &&
                conley_zehnder(A, 0.0, s1).cz == conley_zehnder(A, 0.0, s2).cz;
    for (std::size_t i = 0; refine_ok && i < a.eigenvalues.size(); ++i)
      d_gal = std::max(d_gal, std::abs(a.eigenvalues[i] - b.eigenvalues[i]));
  } catch (const Error& e) {
    return {false, std::string("refinement failed: ") + e.what()};
  }
  refine_ok = refine_ok && d_sys < 1e-6 && d_spec < 1e-6 && d_gal < 1e-6;
  return {grads_ok && refine_ok,
          "gradient errors gauge " + e2(e_gauge) + ", Fenchel " + e2(e_fench) + ", Psi " + e2(e_psi) + ", psi " +
              e2(e_red) + "; doubling shifts systole " + e2(d_sys) + ", spectrum " + e2(d_spec) +
              ", operator eigenvalues " + e2(d_gal)};
}

}  // namespace detail

inline ValidationReport validate_suite(const ValidationOptions& opt = {}) {
  using detail::Outcome;
  using detail::ValidationContext;
  struct Criterion {
    int id;
    const char* name;
    bool quick;  // part of the quick suite (possibly reduced)
    Outcome (*run)(ValidationContext&);
  };
  static const Criterion table[] = {
      {1, "ellipsoid capacity", true, detail::ellipsoid_capacity},
      {2, "ball normalization", true, detail::ball_normalization},
      {3, "oracle agreement", true, detail::oracle_agreement},
      {4, "index identity", true, detail::index_identity},
      {5, "CZ cross-validation", true, detail::cz_cross_validation},
      {6, "dynamical convexity", true, detail::dynamical_convexity},
      {7, "Morse structure", false, detail::morse_structure},
      {8, "mountain pass", true, detail::mountain_pass},
      {9, "dual inequality", true, detail::dual_inequality},
      {10, "action identity", true, detail::action_identity},
      {11, "Hopf signature", true, detail::hopf_signature},
      {12, "monotonicity", true, detail::monotonicity},
      {13, "Fredholm arithmetic", true, detail::fredholm_arithmetic},
      {14, "numerical hygiene", true, detail::numerical_hygiene},
  };
  ValidationContext ctx(opt);
  ValidationReport rep;
  for (const auto& c : table) {
    if (!c.quick && opt.level == SuiteLevel::Quick) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run(ctx);
    } catch (const Error& e) {
      o = {false, std::string("error: ") + e.what()};
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    SuiteEntry e;
    e.id = c.id;
    e.name = c.name;
    e.pass = o.pass;
    e.quick = c.quick;
    e.detail = o.detail;
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    rep.entries.push_back(e);
    rep.seconds.push_back(secs);
    if (opt.on_result) opt.on_result(e, secs);
  }
  return rep;
}

}  // namespace systola
