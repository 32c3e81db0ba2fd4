#include <gtest/gtest.h>

#include <cmath>

#include <systola/systola.hpp>

using namespace systola;

namespace {

// Hopf fibre through (r cos a, r sin a, s cos b, s sin b) on the round sphere.
std::vector<Vec> hopf_fiber(double a, double b, int M = 300) {
  const double r = 0.714, s = std::sqrt(1.0 - r * r);
  std::vector<Vec> out;
  for (int j = 0; j < M; ++j) {
    const double t = kTwoPi * j / M;
    Vec z(4);
    z << r * std::cos(a + t), r * std::sin(a + t), s * std::cos(b + t), s * std::sin(b + t);
    out.push_back(z);
  }
  return out;
}

std::vector<Vec> planar_circle(double cx, double radius, int M = 200) {
  std::vector<Vec> out;
  for (int j = 0; j < M; ++j) {
    const double t = kTwoPi * j / M;
    Vec z(4);
    z << cx + radius * std::cos(t), radius * std::sin(t), 0.3, 0.1;
    out.push_back(z);
  }
  return out;
}

const std::vector<ClosedOrbit>& ellipsoid_orbits() {
  static const auto o = find_closed_orbits(make_ellipsoid({1.0, std::sqrt(2.0)}), 1.5).orbits;
  return o;
}

}  // namespace

TEST(Linking, HopfFibersLinkOnce) {
  const auto a = hopf_fiber(0, 0), b = hopf_fiber(1, 2);
  EXPECT_EQ(linking_number(a, b), 1);
  EXPECT_EQ(linking_number(b, a), 1);
  EXPECT_EQ(linking_number(hopf_fiber(0, 0, 600), hopf_fiber(1, 2, 600)), 1);
}

TEST(Linking, SeparatedCirclesDoNotLink) {
  EXPECT_EQ(linking_number(planar_circle(0.0, 0.2), planar_circle(0.6, 0.2)), 0);
}

TEST(Linking, TouchingCurvesAreRejected) {
  const auto a = hopf_fiber(0, 0);
  try {
    linking_number(a, a);
    FAIL() << "expected a precondition error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Precondition);
  }
}

TEST(Linking, EllipsoidSimpleOrbitsLinkPositively) {
  const auto& o = ellipsoid_orbits();
  ASSERT_EQ(o.size(), 2u);
  EXPECT_EQ(linking_number(o[0], o[1]), 1);
  EXPECT_EQ(linking_number(o[1], o[0]), 1);
}

TEST(Linking, PolydiskSystolesAreUnlinked) {
  const auto found = find_closed_orbits(make_smoothed_polydisk(1.0, 1.5, 0.02), 1.2).orbits;
  std::vector<const ClosedOrbit*> reps;
  for (const auto& o : found)
    if (o.action < found.front().action + 1e-5) reps.push_back(&o);
  ASSERT_GE(reps.size(), 2u);
  for (std::size_t i = 0; i < reps.size(); ++i)
    for (std::size_t j = i + 1; j < reps.size(); ++j) EXPECT_EQ(linking_number(*reps[i], *reps[j]), 0);
}

TEST(SelfLinking, EllipsoidOrbitsAreHopfLike) {
  const ConvexBody E = make_ellipsoid({1.0, std::sqrt(2.0)});
  for (const auto& o : ellipsoid_orbits()) {
    const SelfLinking sl = self_linking(E, o);
    EXPECT_EQ(sl.value, -1);
    EXPECT_EQ(self_linking(E, o, 1024).value, -1);
  }
}

TEST(SelfLinking, BallAndPerturbedEllipsoid) {
  const ConvexBody B = make_ball(1.0);
  const auto ob = find_closed_orbits(B, 1.2).orbits;
  ASSERT_FALSE(ob.empty());
  EXPECT_EQ(self_linking(B, ob[0]).value, -1);
  const ConvexBody P = make_perturbed_ellipsoid({1.0, std::sqrt(2.0)}, 0.05, {0.3, 0.2, 0.3, 0.1}, 0.3);
  const auto op = find_closed_orbits(P, 1.2).orbits;
  ASSERT_FALSE(op.empty());
  EXPECT_EQ(self_linking(P, op[0]).value, -1);
}
