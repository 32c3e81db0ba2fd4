#include <gtest/gtest.h>

#include <cmath>

#include <systola/systola.hpp>

using namespace systola;

namespace {

const double kSqrt2 = std::sqrt(2.0);

Vec point(std::initializer_list<double> v) {
  Vec z(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) z[i++] = x;
  return z;
}

}  // namespace

TEST(Gauge, EllipsoidBoundaryPointHasValueOne) {
  const ConvexBody E = make_ellipsoid({1.0, 2.0});
  EXPECT_NEAR(E.gauge_value(point({std::sqrt(1.0 / kPi), 0, 0, 0})), 1.0, 1e-14);
}

TEST(Gauge, TwoHomogeneousOnEveryFamily) {
  Rng rng(3);
  for (const ConvexBody& b : {make_ellipsoid({1.0, kSqrt2}), make_ball(1.0), make_smoothed_polydisk(1.0, 1.5, 0.02),
                              make_perturbed_ellipsoid({1.0, kSqrt2}, 0.05, {0.3, 0.2, 0.3, 0.1}, 0.3)}) {
    for (int i = 0; i < 20; ++i) {
      const Vec z = rng.uniform(0.2, 2.0) * rng.unit_vec(4);
      EXPECT_NEAR(b.gauge_value(2.0 * z), 4.0 * b.gauge_value(z), 1e-12 * b.gauge_value(z)) << b.name;
    }
  }
}

TEST(Gauge, EllipsoidClosedFormAndGradient) {
  const std::vector<double> a = {1.0, kSqrt2};
  const ConvexBody E = make_ellipsoid(a);
  Rng rng(5);
  for (int i = 0; i < 10; ++i) {
    const Vec z = rng.normal_vec(4);
    const double closed = kPi * (z[0] * z[0] + z[1] * z[1]) / a[0] + kPi * (z[2] * z[2] + z[3] * z[3]) / a[1];
    const GaugeValue g = E.gauge(z);
    EXPECT_NEAR(g.value, closed, 1e-12 * closed);
    for (int j = 0; j < 4; ++j) {
      EXPECT_NEAR(g.gradient[j], 2.0 * kPi * z[j] / a[j / 2], 1e-12);
      Vec zp = z, zm = z;
      zp[j] += 1e-6;
      zm[j] -= 1e-6;
      EXPECT_NEAR((E.gauge_value(zp) - E.gauge_value(zm)) / 2e-6, g.gradient[j], 1e-6);
    }
  }
}

TEST(Gauge, InvariantsAndConvexityFlags) {
  for (const ConvexBody& b : {make_ellipsoid({1.0, kSqrt2}), make_ball(1.0),
                              make_perturbed_ellipsoid({1.0, kSqrt2}, 0.05, {0.3, 0.2, 0.3, 0.1}, 0.3)}) {
    const BodyInvariantReport r = check_body_invariants(b, 200, 11);
    EXPECT_TRUE(r.passed()) << b.name;
    EXPECT_TRUE(b.uniformly_convex);
  }
  const ConvexBody pd = make_smoothed_polydisk(1.0, 2.0, 0.02);
  EXPECT_FALSE(pd.uniformly_convex);
  const ConvexBody cv = convexified(pd, 1e-3);
  EXPECT_TRUE(cv.uniformly_convex);
  EXPECT_GT(check_body_invariants(cv, 200, 2).hessian_min, 0.0);
}

TEST(Gauge, RejectsBadInput) {
  const ConvexBody E = make_ellipsoid({1.0, 2.0});
  EXPECT_THROW(E.gauge(Vec::Zero(3)), Error);
  EXPECT_THROW(E.gauge(point({NAN, 0, 0, 0})), Error);
  EXPECT_THROW(make_ellipsoid({1.0, -2.0}), Error);
  EXPECT_THROW(make_smoothed_polydisk(1.0, 2.0, 0.0), Error);
}

TEST(Fenchel, MatchesClosedFormOnHomogeneousEllipsoid) {
  const std::vector<double> a = {1.0, kSqrt2};
  const TimeHamiltonian H = homogeneous_hamiltonian(make_ellipsoid(a), 1.0);
  Rng rng(7);
  for (int i = 0; i < 10; ++i) {
    const Vec w = rng.normal_vec(4);
    double closed = 0.0;
    for (int j = 0; j < 4; ++j) closed += a[j / 2] * w[j] * w[j] / (4.0 * kPi);
    EXPECT_NEAR(fenchel_eval(H, 0.0, w).value, closed, 1e-8 * std::max(1.0, closed));
  }
}

TEST(Fenchel, EqualityAtTheMaximizer) {
  const ConvexBody E = make_ellipsoid({1.0, kSqrt2});
  const TimeHamiltonian H = build_hamiltonian(E, 2.5, PerturbationSpec::core_only());
  const TimeHamiltonian Hh = homogeneous_hamiltonian(E, 1.0);
  Rng rng(9);
  for (int i = 0; i < 10; ++i) {
    const Vec z0 = rng.uniform(0.1, 1.2) * rng.unit_vec(4);
    const Vec w = H.gradient(0.0, z0);
    const FenchelValue f = fenchel_eval(H, 0.0, w);
    EXPECT_NEAR(f.value + H.value(0.0, z0), z0.dot(w), 1e-10);
    EXPECT_LT((f.gradient - z0).norm(), 1e-8);
    const Vec wh = Hh.gradient(0.0, z0);
    EXPECT_NEAR(fenchel_eval(Hh, 0.0, wh).value, Hh.value(0.0, z0), 1e-10);
  }
}

TEST(Hamiltonian, ProfileSlopeCoversZeroToEta) {
  const Profile p = Profile::smooth(2.5);
  double prev = 0.0;
  for (int i = 0; i <= 400; ++i) {
    const double s = 3.0 * i / 400.0;
    const double k1 = p.slope(s);
    EXPECT_GE(k1, prev - 1e-15);
    prev = k1;
  }
  EXPECT_DOUBLE_EQ(p.slope(3.0), 2.5);
  for (double target : {0.1, 1.0, 2.4}) EXPECT_NEAR(p.slope(p.level_for_slope(target)), target, 1e-9);
}

TEST(Hamiltonian, CorePatchGivesUniqueNegativeMinimum) {
  for (const ConvexBody& b : {make_ellipsoid({1.0, kSqrt2}), make_ball(1.0)}) {
    const TimeHamiltonian H = build_hamiltonian(b, 2.0, PerturbationSpec::core_only());
    const HamiltonianEval e = H.eval(0.0, Vec::Zero(4));
    EXPECT_LT(e.value, 0.0);
    EXPECT_LT(e.gradient.norm(), 1e-14);
    Eigen::SelfAdjointEigenSolver<Mat> es(e.hessian);
    EXPECT_GT(es.eigenvalues().minCoeff(), 0.0);
    Rng rng(1);
    for (int i = 0; i < 50; ++i) EXPECT_GT(H.gradient(0.0, rng.uniform(0.01, 2.0) * rng.unit_vec(4)).norm(), 0.0);
  }
}

TEST(Hamiltonian, ResonantSlopeIsRejected) {
  const ConvexBody E = make_ellipsoid({1.0, kSqrt2});
  EXPECT_THROW(
      {
        try {
          build_hamiltonian(E, 1.0, PerturbationSpec::core_only(), {1.0, kSqrt2});
        } catch (const Error& e) {
          EXPECT_EQ(e.kind(), ErrorKind::Resonance);
          throw;
        }
      },
      Error);
}

TEST(Hamiltonian, FieldIsTangentToLevelSets) {
  const TimeHamiltonian H = build_hamiltonian(make_ellipsoid({1.0, kSqrt2}), 2.5, PerturbationSpec::core_only());
  Rng rng(13);
  for (int i = 0; i < 100; ++i) {
    const Vec z = rng.uniform(0.1, 1.5) * rng.unit_vec(4);
    EXPECT_NEAR(H.gradient(0.0, z).dot(hamiltonian_field(H, 0.0, z)), 0.0, 1e-10);
  }
  const TimeHamiltonian Hh = homogeneous_hamiltonian(make_ellipsoid({1.0, kSqrt2}), 1.0);
  const Vec z = point({0.3, -0.2, 0.1, 0.4});
  const Vec X = hamiltonian_field(Hh, 0.0, z);
  EXPECT_NEAR(X[0], -2 * kPi * z[1], 1e-12);
  EXPECT_NEAR(X[1], 2 * kPi * z[0], 1e-12);
  EXPECT_NEAR(X[2], -2 * kPi / kSqrt2 * z[3], 1e-12);
}

TEST(Action, CircleAndConstantLoops) {
  const TimeHamiltonian zeroH = homogeneous_hamiltonian(make_ellipsoid({1.0, kSqrt2}), 0.0);
  std::vector<Vec> circle;
  const double r = std::sqrt(1.0 / kPi);
  for (int j = 0; j < 64; ++j) {
    const double t = j / 64.0;
    circle.push_back(point({r * std::cos(kTwoPi * t), r * std::sin(kTwoPi * t), 0, 0}));
  }
  EXPECT_NEAR(direct_action(zeroH, circle), 1.0, 1e-12);
  const TimeHamiltonian H = build_hamiltonian(make_ellipsoid({1.0, kSqrt2}), 2.0, PerturbationSpec::core_only());
  const std::vector<Vec> origin(16, Vec::Zero(4));
  EXPECT_NEAR(direct_action(H, origin), -H.value(0.0, Vec::Zero(4)), 1e-14);
}

TEST(Reeb, FieldNormalizationAndTangency) {
  const ConvexBody b = make_perturbed_ellipsoid({1.0, kSqrt2}, 0.05, {0.3, 0.2, 0.3, 0.1}, 0.3);
  Rng rng(17);
  for (int i = 0; i < 100; ++i) {
    const Vec z = b.to_boundary(rng.unit_vec(4));
    const Vec R = reeb_field(b, z);
    EXPECT_NEAR(lambda0(z, R), 1.0, 1e-10);
    EXPECT_NEAR(b.gauge(z).gradient.dot(R), 0.0, 1e-10);
  }
}

TEST(Reeb, EllipsoidCircleClosesAfterOnePeriod) {
  const ConvexBody E = make_ellipsoid({1.0, kSqrt2});
  const Vec z0 = point({std::sqrt(1.0 / kPi), 0, 0, 0});
  const FlowResult f0 = flow_with_variations(E, z0, 0.0);
  EXPECT_EQ(f0.z, z0);
  EXPECT_TRUE(f0.phi.isIdentity());
  const FlowResult f = flow_with_variations(E, z0, 1.0);
  EXPECT_LT((f.z - z0).norm(), 1e-8);
  EXPECT_LT(symplectic_defect(f.phi), 1e-8);
  const auto traj = reeb_trajectory(E, z0, {0.25});
  EXPECT_NEAR(traj[0][1], std::sqrt(1.0 / kPi), 1e-8);  // quarter turn
  Rng rng(19);
  const ConvexBody B = make_perturbed_ellipsoid({1.0, kSqrt2}, 0.05, {0.3, 0.2, 0.3, 0.1}, 0.3);
  for (int i = 0; i < 5; ++i) {
    const auto pts = reeb_trajectory(B, B.to_boundary(rng.unit_vec(4)), {rng.uniform(0.0, 5.0)});
    EXPECT_NEAR(B.gauge_value(pts[0]), 1.0, 1e-9);
  }
}

TEST(Reeb, EllipsoidOrbitsBelowCutoff) {
  const ConvexBody E = make_ellipsoid({1.0, kSqrt2});
  const OrbitSearchResult r = find_closed_orbits(E, 2.05);
  ASSERT_EQ(r.orbits.size(), 3u);
  EXPECT_NEAR(r.orbits[0].action, 1.0, 1e-6);
  EXPECT_NEAR(r.orbits[1].action, kSqrt2, 1e-6);
  EXPECT_NEAR(r.orbits[2].action, 2.0, 1e-6);
  EXPECT_EQ(r.orbits[0].covering_multiplicity, 1);
  EXPECT_EQ(r.orbits[1].covering_multiplicity, 1);
  EXPECT_EQ(r.orbits[2].covering_multiplicity, 2);
  for (const auto& o : r.orbits) EXPECT_TRUE(o.nondegenerate);
  // Transverse monodromy of the a1 orbit is a rotation by 2 pi / sqrt 2.
  const Mat2 M = r.orbits[0].transverse_monodromy;
  EXPECT_NEAR(M.trace(), 2.0 * std::cos(kTwoPi / kSqrt2), 1e-6);
  EXPECT_NEAR(M.determinant(), 1.0, 1e-8);
  EXPECT_NEAR(r.orbits[1].transverse_monodromy.trace(), 2.0 * std::cos(kTwoPi * kSqrt2), 1e-6);
}

TEST(Reeb, BallOrbitsFormDegenerateFamily) {
  const OrbitSearchResult r = find_closed_orbits(make_ball(1.0), 1.5);
  ASSERT_FALSE(r.orbits.empty());
  for (const auto& o : r.orbits) {
    EXPECT_NEAR(o.action, 1.0, 1e-6);
    EXPECT_TRUE(o.degenerate_family);
    EXPECT_FALSE(o.nondegenerate);
    EXPECT_LT((o.transverse_monodromy - Mat2::Identity()).norm(), 1e-6);
  }
}

TEST(Reeb, PolydiskHasSeveralSystoleRepresentatives) {
  const double eps = 0.02;
  const OrbitSearchResult r = find_closed_orbits(make_smoothed_polydisk(1.0, 1.5, eps), 1.2);
  int reps = 0;
  for (const auto& o : r.orbits)
    if (std::abs(o.action - 1.0) < 5 * eps) ++reps;
  EXPECT_GE(reps, 2);
}
