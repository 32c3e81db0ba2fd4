#include <gtest/gtest.h>

#include <cmath>

#include <systola/systola.hpp>

using namespace systola;

namespace {

const double kSqrt2 = std::sqrt(2.0);

ConvexBody ellipsoid() { return make_ellipsoid({1.0, kSqrt2}); }

TimeHamiltonian validation_hamiltonian() { return build_hamiltonian(ellipsoid(), 2.2, PerturbationSpec::core_only()); }

Vec smooth_low(Rng& rng, const DualProblem& P, double amp) {
  return amp * rng.normal_vec(P.dim_low()).cwiseQuotient(P.metric().head(P.dim_low()).cwiseSqrt());
}

// Shared split setup (orbit-splitting Hamiltonian between the two lowest actions).
struct SplitFixture {
  SplitSetup setup;
  std::unique_ptr<DualProblem> problem;
  CriticalSearchResult found;
  static const SplitFixture& get() {
    static const SplitFixture f = [] {
      SplitFixture s;
      s.setup = split_systole_hamiltonian(ellipsoid(), 1.2);
      s.problem = std::make_unique<DualProblem>(s.setup.split, 8, 32);
      s.found = find_critical_points(*s.problem, {});
      return s;
    }();
    return f;
  }
};

}  // namespace

TEST(Fourier, SamplesRoundTrip) {
  Rng rng(1);
  FourierLoop f = FourierLoop::zero(2, 5);
  for (int k = 1; k <= 5; ++k) {
    f.coeff(k) = rng.normal_vec(4);
    f.coeff(-k) = rng.normal_vec(4);
  }
  Vec mean;
  const FourierLoop g = FourierLoop::from_samples(f.samples(64), 5, &mean);
  EXPECT_LT(mean.norm(), 1e-13);
  EXPECT_LT((g.packed() - f.packed()).norm(), 1e-12);
  EXPECT_LT((FourierLoop::unpack(f.packed(), 2, 5).packed() - f.packed()).norm(), 0.0 + 1e-300);
  // lambda integral by quadrature of 1/2 omega0(z, z').
  double q = 0.0;
  for (int j = 0; j < 256; ++j) q += lambda0(f.eval(j / 256.0), f.derivative(j / 256.0)) / 256.0;
  EXPECT_NEAR(f.lambda_integral(), q, 1e-10);
}

TEST(DualFunctional, ZeroLoopValueIsConjugateAtZero) {
  const TimeHamiltonian H = validation_hamiltonian();
  const DualProblem P(H, 4, 16);
  EXPECT_NEAR(P.value(Vec::Zero(P.dim())), fenchel_eval(H, 0.0, Vec::Zero(4)).value, 1e-14);
}

TEST(DualFunctional, HomogeneousReparametrizedSystoleHasZeroValue) {
  const ConvexBody E = ellipsoid();
  const OrbitSearchResult r = find_closed_orbits(E, 1.2);
  ASSERT_FALSE(r.orbits.empty());
  const ClosedOrbit& a1 = r.orbits.front();
  // Reeb period a1 = 1, so the orbit is already 1-periodic for 1 * H_X.
  const FourierLoop loop = FourierLoop::from_samples(a1.points, 32);
  EXPECT_NEAR(dual_action_eval(homogeneous_hamiltonian(E, a1.action), loop), 0.0, 1e-8);
}

TEST(DualFunctional, GradientMatchesFiniteDifferences) {
  const DualProblem P(validation_hamiltonian(), 2, 6);
  Rng rng(3);
  const Vec c = 0.2 * rng.normal_vec(P.dim()).cwiseQuotient(P.metric().cwiseSqrt());
  const Vec g = P.eval(c, 1).gradient;
  for (int i = 0; i < 20; ++i) {
    const Vec v = rng.unit_vec(P.dim());
    const double h = 1e-6;
    const double fd = (P.value(c + h * v) - P.value(c - h * v)) / (2 * h);
    EXPECT_NEAR(fd, g.dot(v), 1e-5 * std::max(1.0, std::abs(g.dot(v))));
  }
}

TEST(ReducedFunctional, ZeroIsFiberMinimizerAtOrigin) {
  const DualProblem P(validation_hamiltonian(), 4, 16);
  ReducedFunctional F(P);
  EXPECT_LT(F.tail_minimizer(Vec::Zero(P.dim_low())).norm(), 1e-12);
}

TEST(ReducedFunctional, MinimizesOverTheFiber) {
  const DualProblem P(validation_hamiltonian(), 4, 16);
  ReducedFunctional F(P);
  Rng rng(5);
  const Vec x = smooth_low(rng, P, 0.2);
  const ReducedPoint r = F.eval(x);
  Vec c(P.dim());
  c << x, Vec::Zero(P.dim_tail());
  EXPECT_LE(r.value, P.value(c) + 1e-12);
  for (int i = 0; i < 50; ++i) {
    c.tail(P.dim_tail()) = r.tail + 0.05 * rng.normal_vec(P.dim_tail()).cwiseQuotient(P.metric().tail(P.dim_tail()).cwiseSqrt());
    EXPECT_LE(r.value, P.value(c) + 1e-12);
  }
}

TEST(ReducedFunctional, GradientMatchesFiniteDifferences) {
  const DualProblem P(validation_hamiltonian(), 2, 8);
  ReducedFunctional F(P);
  Rng rng(7);
  for (int i = 0; i < 10; ++i) {
    const Vec x = smooth_low(rng, P, 0.2);
    const Vec g = F.eval(x).gradient;
    Vec fd(x.size());
    for (Eigen::Index j = 0; j < x.size(); ++j) {
      Vec xp = x, xm = x;
      xp[j] += 1e-5;
      xm[j] -= 1e-5;
      fd[j] = (F.value(xp) - F.value(xm)) / 2e-5;
    }
    EXPECT_LT((fd - g).norm(), 1e-5 * std::max(1.0, g.norm()));
  }
}

TEST(ReducedFunctional, TailDoublingIsStableAtCriticalPoints) {
  const TimeHamiltonian H = validation_hamiltonian();
  const DualProblem P1(H, 8, 32), P2(H, 8, 64);
  DualOptions o;
  o.compute_cz = false;
  const CriticalSearchResult r = find_critical_points(P1, o);
  ReducedFunctional F2(P2);
  ASSERT_GE(r.points.size(), 2u);
  for (const auto& p : r.points) EXPECT_NEAR(F2.value(p.reduced.x), p.dual_value, 1e-8);
}

TEST(ReducedFunctional, UnboundedBelowAlongTheSystoleRay) {
  const auto& s = SplitFixture::get();
  ReducedFunctional F(*s.problem);
  const Vec x = s.setup.circle.reduced.x;
  double prev = F.value(2.0 * x);
  for (double sc : {4.0, 8.0, 16.0, 32.0, 64.0}) {
    const double v = F.value(sc * x);
    EXPECT_LT(v, prev);
    prev = v;
  }
  EXPECT_LT(prev, -1e3);
}

TEST(CriticalPoints, SplitHamiltonianHasThreePoints) {
  const auto& s = SplitFixture::get();
  ASSERT_EQ(s.found.points.size(), 3u);
  EXPECT_EQ(s.found.points[0].morse_index, 0);
  EXPECT_TRUE(s.found.points[0].constant);
  EXPECT_EQ(s.found.points[1].morse_index, 1);
  EXPECT_EQ(s.found.points[2].morse_index, 2);
  for (const auto& p : s.found.points) {
    EXPECT_EQ(p.nullity, 0);
    ASSERT_TRUE(p.cz.has_value());
    EXPECT_EQ(p.morse_index, *p.cz - 2);
    EXPECT_NEAR(p.dual_value, p.hamiltonian_action, 1e-8);
  }
}

TEST(CriticalPoints, UnsplitHamiltonianHasCircleWithNullityOne) {
  const auto& s = SplitFixture::get();
  const DualCriticalPoint& c = s.setup.circle;
  EXPECT_EQ(c.nullity, 1);
  EXPECT_EQ(c.morse_index, 1);
  EXPECT_NEAR(c.reeb_action, 1.0, 1e-6);
  EXPECT_LT(c.ode_residual, 1e-6);
  ASSERT_TRUE(c.orbit.has_value());
  EXPECT_NEAR(c.orbit->action, 1.0, 1e-6);
  const TimeHamiltonian& H = s.setup.autonomous;
  const DualProblem P(H, 8, 32);
  DualOptions o;
  const CriticalSearchResult r = find_critical_points(P, o);
  ASSERT_EQ(r.points.size(), 2u);
  const DualCriticalPoint& z0 = r.points.front();
  EXPECT_TRUE(z0.constant);
  EXPECT_LT(z0.recovered_mean.norm(), 1e-8);
  EXPECT_NEAR(z0.level, 0.0, 1e-12);
  EXPECT_FALSE(z0.orbit.has_value());
  EXPECT_EQ(r.points[1].nullity, 1);
}

TEST(Capacity, EllipsoidSpectrumAndIndices) {
  SystoleOptions o;
  o.dual.order = 8;
  o.dual.tail = 32;
  const SystoleResult r = systole(ellipsoid(), o);
  EXPECT_NEAR(r.action, 1.0, 1e-6);
  ASSERT_TRUE(r.oracle_action.has_value());
  EXPECT_LT(r.oracle_delta, 1e-6);
  const std::vector<double> expect = {1.0, kSqrt2, 2.0};
  ASSERT_EQ(r.spectrum.size(), expect.size());
  const int idx[] = {1, 3, 5};
  for (std::size_t i = 0; i < expect.size(); ++i) {
    EXPECT_NEAR(r.spectrum[i].action, expect[i], 1e-6);
    EXPECT_EQ(r.spectrum[i].morse_index, idx[i]);
    ASSERT_TRUE(r.spectrum[i].cz.has_value());
    EXPECT_EQ(*r.spectrum[i].cz, idx[i] + 2);
  }
}

TEST(Capacity, BallAndMonotonicity) {
  const SystoleResult b = systole(make_ball(1.0));
  EXPECT_NEAR(b.action, 1.0, 1e-6);
  EXPECT_TRUE(b.orbit.degenerate_family);
  const SystoleResult e = systole(make_ellipsoid({1.2, 1.7}));
  EXPECT_NEAR(e.action, 1.2, 1e-6);
  EXPECT_LE(b.action, e.action);
}

TEST(Capacity, SmoothedPolydiskNearOne) {
  const double eps = 0.02;
  const SystoleResult r = systole(make_smoothed_polydisk(1.0, 2.0, eps));
  EXPECT_TRUE(r.convexified);
  EXPECT_NEAR(r.action, 1.0, 5 * eps);
  EXPECT_LT(r.oracle_delta, 1e-6);
  EXPECT_LT(r.spectrum_delta, 1e-6);
}

TEST(Capacity, ResonantCutoffIsAnError) {
  SystoleOptions o;
  o.eta = 1.0;
  try {
    systole(ellipsoid(), o);
    FAIL() << "expected a resonance error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Resonance);
  }
}

TEST(Capacity, DualInequalityHoldsOnRandomSamples) {
  SystoleOptions o;
  const SystoleResult r = systole(ellipsoid(), o);
  const TimeHamiltonian H = build_hamiltonian(r.body, r.eta, PerturbationSpec::core_only());
  const DualCriticalPoint* orbit = nullptr;
  for (const auto& p : r.points)
    if (p.orbit && std::abs(p.orbit->action - 1.0) < 1e-6) orbit = &p;
  ASSERT_NE(orbit, nullptr);
  const DualInequalityReport rep = check_dual_inequality(H, 1000, 42, orbit);
  EXPECT_EQ(rep.samples, 1000);
  EXPECT_EQ(rep.violations, 0);
  EXPECT_LT(rep.equality_gap, 1e-6);
  EXPECT_LE(rep.max_excess, 1e-9);
}
