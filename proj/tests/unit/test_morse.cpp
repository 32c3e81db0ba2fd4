#include <gtest/gtest.h>

#include <cmath>

#include <systola/systola.hpp>

using namespace systola;

namespace {

// f(x, y) = (x^2 - 1)^2 + (y^2 - 1)^2: four minima, four saddles, one maximum.
class EggCrate final : public FlowModel {
 public:
  int dim() const override { return 2; }
  Vec metric() const override { return Vec::Ones(2); }
  std::unique_ptr<FlowEvaluator> evaluator() const override { return std::make_unique<Eval>(); }

 private:
  struct Eval final : FlowEvaluator {
    double value_gradient(const Vec& x, Vec& g) override {
      g.resize(2);
      double f = 0.0;
      for (int i = 0; i < 2; ++i) {
        const double a = x[i] * x[i] - 1.0;
        f += a * a;
        g[i] = 4.0 * x[i] * a;
      }
      return f;
    }
    Mat hessian(const Vec& x) override {
      Mat h = Mat::Zero(2, 2);
      for (int i = 0; i < 2; ++i) h(i, i) = 12.0 * x[i] * x[i] - 4.0;
      return h;
    }
  };
};

Vec v2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

struct Split {
  SplitSetup setup;
  std::unique_ptr<DualProblem> problem;
  CriticalSearchResult found;
  static const Split& get() {
    static const Split s = [] {
      Split r;
      r.setup = split_systole_hamiltonian(make_ellipsoid({1.0, std::sqrt(2.0)}), 1.2);
      r.problem = std::make_unique<DualProblem>(r.setup.split, 8, 32);
      r.found = find_critical_points(*r.problem, {});
      return r;
    }();
    return s;
  }
};

}  // namespace

TEST(Morse, DoubleWellBranchesBothConverge) {
  DoubleWellModel dw;
  const std::vector<Vec> xs = {Vec::Zero(2), v2(1, 0), v2(-1, 0)};
  const auto pts = morse_points(dw, xs, dw.metric());
  EXPECT_EQ(pts[0].index, 1);
  EXPECT_EQ(pts[1].index, 0);
  const BranchFates bf = trace_unstable(dw, pts, 0);
  EXPECT_EQ(bf.plus.kind, FateKind::Converged);
  EXPECT_EQ(bf.minus.kind, FateKind::Converged);
  EXPECT_NE(bf.plus.target, bf.minus.target);
  EXPECT_THROW(trace_unstable(dw, pts, 1), Error);
}

TEST(Morse, EggCrateComplexComputesHomologyOfThePlane) {
  EggCrate m;
  std::vector<Vec> xs = {v2(0, 0)};
  for (double a : {-1.0, 1.0}) {
    xs.push_back(v2(a, 0));
    xs.push_back(v2(0, a));
    for (double b : {-1.0, 1.0}) xs.push_back(v2(a, b));
  }
  const MorseComplexData data = build_complex(m, xs);
  EXPECT_TRUE(data.failures.empty());
  ASSERT_EQ(data.by_index.at(0).size(), 4u);
  ASSERT_EQ(data.by_index.at(1).size(), 4u);
  ASSERT_EQ(data.by_index.at(2).size(), 1u);
  for (const auto& row : data.boundary.at(0)) {
    int nonzero = 0;
    for (long long v : row) nonzero += v != 0;
    EXPECT_EQ(nonzero, 2);
  }
  for (long long v : data.boundary.at(1)[0]) EXPECT_EQ(std::llabs(v), 1);
  const ComplexReport rep = verify_complex(data);
  EXPECT_TRUE(rep.ok());
  EXPECT_EQ(rep.homology.at(0).rank, 1);
  EXPECT_EQ(rep.homology.at(1).rank, 0);
  EXPECT_EQ(rep.homology.at(2).rank, 0);
}

TEST(Morse, SmithNormalForm) {
  EXPECT_EQ(smith_diagonal({{2, 4}, {6, 8}}), (std::vector<long long>{2, 4}));
  EXPECT_EQ(smith_diagonal({{0, 0}, {0, 0}}), std::vector<long long>{});
  EXPECT_EQ(smith_diagonal({{1, -1}}), std::vector<long long>{1});
}

TEST(Morse, VerifyDetectsNonzeroSquare) {
  MorseComplexData d;
  d.by_index = {{0, {0}}, {1, {1}}, {2, {2}}};
  d.boundary[0] = {{1}};
  d.boundary[1] = {{1}};
  const ComplexReport rep = verify_complex(d);
  EXPECT_FALSE(rep.d_squared_zero);
  EXPECT_FALSE(rep.witnesses.empty());
  const ComplexReport empty = verify_complex(MorseComplexData{});
  EXPECT_TRUE(empty.ok());
  EXPECT_EQ(empty.homology.at(0).rank, 0);
}

TEST(Morse, CoreHamiltonianBelowEveryActionHasOneMinimum) {
  const TimeHamiltonian H = build_hamiltonian(make_ellipsoid({1.0, std::sqrt(2.0)}), 0.8, PerturbationSpec::core_only());
  const DualProblem P(H, 4, 16);
  const CriticalSearchResult r = find_critical_points(P, {});
  ASSERT_EQ(r.points.size(), 1u);
  const MorseComplexData data = build_complex(P, r.points);
  EXPECT_TRUE(data.flow_records.empty());
  const ComplexReport rep = verify_complex(data);
  EXPECT_TRUE(rep.ok());
  EXPECT_EQ(rep.homology.at(0).rank, 1);
}

TEST(Morse, MountainPassOnSplitHamiltonian) {
  const auto& s = Split::get();
  ASSERT_EQ(s.found.points.size(), 3u);
  ReducedFlowModel model(*s.problem);
  const auto mp = morse_points(*s.problem, s.found.points, model.metric());
  ASSERT_EQ(mp[1].index, 1);
  std::optional<std::pair<FlowFate, FlowFate>> first;
  for (std::uint64_t seed : {1u, 2u}) {
    MorseOptions o;
    o.seed = seed;
    const BranchFates b = trace_unstable(model, mp, 1, o);
    const FlowFate& conv = b.plus.kind == FateKind::Converged ? b.plus : b.minus;
    const FlowFate& esc = b.plus.kind == FateKind::Converged ? b.minus : b.plus;
    EXPECT_EQ(conv.kind, FateKind::Converged);
    EXPECT_EQ(conv.target, 0);
    EXPECT_EQ(esc.kind, FateKind::Escaped);
    EXPECT_LT(esc.final_value, -1e3);
    if (!first) first = std::make_pair(b.plus, b.minus);
    else {
      EXPECT_TRUE(first->first == b.plus);
      EXPECT_TRUE(first->second == b.minus);
    }
  }
}
