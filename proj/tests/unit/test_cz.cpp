#include <gtest/gtest.h>

#include <cmath>

#include <systola/systola.hpp>

using namespace systola;

namespace {

const double kSqrt2 = std::sqrt(2.0);

const std::vector<ClosedOrbit>& ellipsoid_orbits() {
  static const std::vector<ClosedOrbit> orbits = find_closed_orbits(make_ellipsoid({1.0, kSqrt2}), 1.5).orbits;
  return orbits;
}

}  // namespace

TEST(Spectrum, RotationOperatorClosedForm) {
  const double c = 0.3;
  const SpectralData sd = operator_spectrum(AsymptoticOperator::rotation(c), -20.0, 20.0);
  ASSERT_FALSE(sd.eigenvalues.empty());
  for (std::size_t i = 0; i < sd.eigenvalues.size(); ++i) {
    const double k = sd.eigenvalues[i] / kTwoPi + c;
    EXPECT_NEAR(k, std::round(k), 1e-9);
    EXPECT_EQ(sd.multiplicity[i], 2);
    EXPECT_EQ(sd.winding[i], static_cast<int>(std::lround(k)));
    EXPECT_LT(sd.residuals[i], 1e-8);
  }
}

TEST(Spectrum, ZeroOperatorHasTwoDimensionalKernel) {
  const SpectralData sd = operator_spectrum(AsymptoticOperator::rotation(0.0), -1.0, 1.0);
  ASSERT_EQ(sd.eigenvalues.size(), 1u);
  EXPECT_NEAR(sd.eigenvalues[0], 0.0, 1e-10);
  EXPECT_EQ(sd.multiplicity[0], 2);
  EXPECT_THROW(conley_zehnder(AsymptoticOperator::rotation(0.0)), Error);
}

TEST(Spectrum, WindingIsMonotoneAndHitsEachIntegerTwice) {
  Mat S0(2, 2);
  S0 << 3.0, 1.0, 1.0, -2.0;
  AsymptoticOperator A;
  for (int j = 0; j < 64; ++j) {
    const double t = j / 64.0;
    A.S.push_back(symmetrize(S0 + 4.0 * std::cos(kTwoPi * t) * Mat::Identity(2, 2)));
  }
  const SpectralData sd = operator_spectrum(A, -30.0, 30.0);
  std::map<int, int> count;
  for (std::size_t i = 0; i < sd.eigenvalues.size(); ++i) {
    if (i > 0) {
      EXPECT_GE(sd.winding[i], sd.winding[i - 1]);
    }
    count[sd.winding[i]] += sd.multiplicity[i];
  }
  // Interior windings (away from the window edges) appear exactly twice.
  for (auto it = std::next(count.begin()); it != std::prev(count.end()); ++it) EXPECT_EQ(it->second, 2) << it->first;
}

TEST(Spectrum, CsvHeader) {
  const std::string csv = spectrum_csv(operator_spectrum(AsymptoticOperator::rotation(0.3), -5, 5));
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "eigenvalue,multiplicity,winding");
}

TEST(ConleyZehnder, RotationTable) {
  const std::vector<std::pair<double, int>> table = {{0.3, 1}, {1.4, 3}, {2.7, 5}, {-0.4, -1}};
  for (const auto& [c, cz] : table) {
    const auto A = AsymptoticOperator::rotation(c);
    const CZResult r = conley_zehnder(A);
    EXPECT_EQ(r.cz, cz) << c;
    EXPECT_EQ(conley_zehnder_rotation(A), cz) << c;
    EXPECT_EQ(conley_zehnder_count(A), cz) << c;
  }
  const CZResult r = conley_zehnder(AsymptoticOperator::rotation(0.3));
  EXPECT_EQ(r.alpha_lo, 0);
  EXPECT_EQ(r.alpha_hi, 1);
}

TEST(ConleyZehnder, RoutesAgreeOnRandomOperators) {
  Rng rng(2024);
  int tested = 0;
  while (tested < 50) {
    const AsymptoticOperator A = detail::random_rank1_operator(rng);
    const SymplecticPath p = symplectic_path(A);
    if (std::abs((p.psi.back() - Mat::Identity(2, 2)).determinant()) < 0.05) continue;
    ++tested;
    EXPECT_EQ(conley_zehnder(A).cz, conley_zehnder_rotation(p, &A));
  }
}

TEST(ConleyZehnder, HigherRankCountMatchesRotation) {
  Mat S = Mat::Zero(4, 4);
  S.diagonal() << kTwoPi * 0.3, kTwoPi * 0.3, kTwoPi * 1.4, kTwoPi * 1.4;
  const auto A = AsymptoticOperator::constant(S);
  EXPECT_EQ(conley_zehnder_count(A), 4);
  EXPECT_EQ(conley_zehnder_rotation(A), 4);
}

TEST(ConleyZehnder, EllipsoidOrbits) {
  const ConvexBody E = make_ellipsoid({1.0, kSqrt2});
  const auto& orbits = ellipsoid_orbits();
  ASSERT_GE(orbits.size(), 2u);
  const AsymptoticOperator A1 = transverse_linearization(E, orbits[0]);
  EXPECT_LT(A1.symmetry_defect, 1e-6);
  // Constant in the global frame, rotation rate 2 pi (1 + 1/sqrt 2).
  for (const Mat& S : A1.S) EXPECT_LT((S - kTwoPi * (1.0 + 1.0 / kSqrt2) * Mat::Identity(2, 2)).norm(), 1e-5);
  EXPECT_EQ(conley_zehnder(A1).cz, 3);
  EXPECT_EQ(conley_zehnder(transverse_linearization(E, orbits[1])).cz, 5);
}

TEST(ConleyZehnder, SpectrumIndependentOfFramePhase) {
  const ConvexBody E = make_ellipsoid({1.0, kSqrt2});
  const ClosedOrbit& o = ellipsoid_orbits()[0];
  const SpectralData a = operator_spectrum(transverse_linearization(E, o), -15.0, 15.0);
  const SpectralData b = operator_spectrum(transverse_linearization(E, o, 1024, {0.8, 0.5}), -15.0, 15.0);
  ASSERT_EQ(a.eigenvalues.size(), b.eigenvalues.size());
  for (std::size_t i = 0; i < a.eigenvalues.size(); ++i) EXPECT_NEAR(a.eigenvalues[i], b.eigenvalues[i], 1e-6);
}

TEST(ConleyZehnder, BallOrbitIsDegenerate) {
  const ConvexBody B = make_ball(1.0);
  const auto orbits = find_closed_orbits(B, 1.2).orbits;
  ASSERT_FALSE(orbits.empty());
  const AsymptoticOperator A = transverse_linearization(B, orbits[0]);
  const SpectralData sd = operator_spectrum(A, -1.0, 1.0);
  ASSERT_FALSE(sd.eigenvalues.empty());
  EXPECT_NEAR(sd.eigenvalues[0], 0.0, 1e-6);
  EXPECT_THROW(conley_zehnder(A), Error);
  const auto br = conley_zehnder_bracket(A);
  EXPECT_EQ(std::min(br.first, br.second), 3);
  EXPECT_EQ(std::max(br.first, br.second), 5);
}

TEST(Fredholm, TabulatedExamples) {
  EXPECT_EQ(curve_index({2, 1, 0, {3}, {}}), 2);
  EXPECT_EQ(curve_index({2, 0, 0, {3}, {3}}), 0);
  EXPECT_EQ(fredholm_index({1, 2, 0, {}, {}}), 2);
  // A small weight at a positive end picks the lower neighbour, CZ 1.
  const auto A = AsymptoticOperator::rotation(1.0);
  EXPECT_EQ(weighted_fredholm_index(1, 1, 0, {{A, 1e-3, true}}), 1 + 1);
}

TEST(Frame, SymplecticAndWellConditioned) {
  const ConvexBody B = make_ball(1.0);
  const auto orbits = find_closed_orbits(B, 1.2).orbits;
  ASSERT_FALSE(orbits.empty());
  for (const XiFrame& f : xi_frame(B, orbits[0])) {
    EXPECT_NEAR(omega0(f.w1, f.w2), 1.0, 1e-8);
    EXPECT_LT(f.condition, 10.0);
  }
  EXPECT_EQ(frame_relative_winding(B, orbits[0], {}, {0.7, 0.0}), 0);
  const ConvexBody E = make_ellipsoid({1.0, kSqrt2});
  EXPECT_EQ(frame_relative_winding(E, ellipsoid_orbits()[0], {}, {0.0, 1.3}), 0);
}
