#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "critical.hpp"
#include "dual_action.hpp"
#include "error.hpp"
#include "linalg.hpp"
#include "parallel.hpp"
#include "random.hpp"

namespace systola {

// Per-thread evaluator of a smooth function on R^m.
class FlowEvaluator {
 public:
  virtual ~FlowEvaluator() = default;
  virtual double value_gradient(const Vec& x, Vec& g) = 0;
  virtual Mat hessian(const Vec& x) = 0;
};

// A function together with a diagonal Riemannian metric.
class FlowModel {
 public:
  virtual ~FlowModel() = default;
  virtual int dim() const = 0;
  virtual Vec metric() const = 0;
  virtual std::unique_ptr<FlowEvaluator> evaluator() const = 0;
};

class ReducedFlowModel final : public FlowModel {
 public:
  explicit ReducedFlowModel(const DualProblem& P) : P_(&P) {}
  int dim() const override { return P_->dim_low(); }
  Vec metric() const override { return P_->metric().head(P_->dim_low()); }
  std::unique_ptr<FlowEvaluator> evaluator() const override { return std::make_unique<Eval>(*P_); }

 private:
  struct Eval final : FlowEvaluator {
    explicit Eval(const DualProblem& P) : F(P) {}
    double value_gradient(const Vec& x, Vec& g) override {
      try {
        const ReducedPoint r = F.eval(x, false);
        g = r.gradient;
        return r.value;
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::Convergence) throw;
        F.reset();
        const ReducedPoint r = F.eval(x, false);
        g = r.gradient;
        return r.value;
      }
    }
    Mat hessian(const Vec& x) override { return *F.eval(x, true).hessian; }
    ReducedFunctional F;
  };
  const DualProblem* P_;
};

// f(x, y) = (x^2 - 1)^2 + y^2 (+ extra quadratic directions): a saddle at the
// origin whose two unstable branches fall into the minima (+-1, 0).
class DoubleWellModel final : public FlowModel {
 public:
  explicit DoubleWellModel(int dim = 2) : dim_(std::max(dim, 2)) {}
  int dim() const override { return dim_; }
  Vec metric() const override { return Vec::Ones(dim_); }
  std::unique_ptr<FlowEvaluator> evaluator() const override { return std::make_unique<Eval>(); }

 private:
  struct Eval final : FlowEvaluator {
    double value_gradient(const Vec& x, Vec& g) override {
      g = 2.0 * x;
      g[0] = 4.0 * x[0] * (x[0] * x[0] - 1.0);
      const double a = x[0] * x[0] - 1.0;
      return a * a + x.tail(x.size() - 1).squaredNorm();
    }
    Mat hessian(const Vec& x) override {
      Mat h = 2.0 * Mat::Identity(x.size(), x.size());
      h(0, 0) = 12.0 * x[0] * x[0] - 4.0;
      return h;
    }
  };
  int dim_;
};

struct MorsePoint {
  Vec x;
  int index = 0;
  double value = 0.0;
  std::vector<Vec> unstable;  // oriented unstable eigenvectors in x coordinates (metric-unit length)
};

struct MorseOptions {
  double jitter = 1e-4;
  std::uint64_t seed = 1;
  double escape = -1e3;
  int index2_directions = 24;
  double angular_tol = 1e-10;
  double start_offset = 1e-4;
  double rtol = 1e-6;
  long max_steps = 40000;
  bool early_escape = true;  // for circle shooting only: below every critical value means no return
};

enum class FateKind { Converged, Escaped, Undetermined };

struct FlowFate {
  FateKind kind = FateKind::Undetermined;
  int target = -1;  // index into the critical point list when converged
  double final_value = 0.0;
  Vec final_x;
  std::vector<double> closest;  // closest metric distance to every critical point along the line
  long steps = 0;
  bool operator==(const FlowFate& o) const { return kind == o.kind && target == o.target; }
};

inline std::string to_string(const FlowFate& f) {
  switch (f.kind) {
    case FateKind::Converged: return "converged-to(" + std::to_string(f.target) + ")";
    case FateKind::Escaped: return "escaped-below";
    default: return "undetermined";
  }
}

struct FlowRecord {
  int source = 0;  // index into critical points
  int target = 0;
  int sign = 1;
  double angle = 0.0;  // shooting angle (index-2 sources) or branch sign (index-1)
};

struct MorseComplexData {
  std::vector<MorsePoint> critical_points;
  std::map<int, std::vector<std::vector<long long>>> boundary;  // k -> (index k+1) x (index k)
  std::map<int, std::vector<int>> by_index;                       // k -> positions in critical_points
  double metric_jitter = 0.0;
  std::vector<FlowRecord> flow_records;
  std::vector<std::string> failures;
  std::map<int, std::pair<FlowFate, FlowFate>> index1_fates;  // position -> (+e, -e)
};

namespace detail {

inline Vec jittered_metric(const FlowModel& m, double jitter, std::uint64_t seed) {
  Vec g = m.metric();
  Rng rng(seed);
  for (Eigen::Index i = 0; i < g.size(); ++i) g[i] *= 1.0 + jitter * rng.uniform(-1.0, 1.0);
  return g;
}

// Unstable eigenvectors of G^{-1/2} H G^{-1/2}, ordered by eigenvalue, first
// significant entry positive, mapped back to x coordinates.
inline std::vector<Vec> oriented_unstable(const Mat& H, const Vec& G, double null_tol = 1e-6) {
  const Vec s = G.cwiseSqrt();
  const Mat Hp = H.array() / (s * s.transpose()).array();
  Eigen::SelfAdjointEigenSolver<Mat> es(symmetrize(Hp));
  std::vector<Vec> out;
  for (Eigen::Index i = 0; i < Hp.rows(); ++i) {
    if (!(es.eigenvalues()[i] < -null_tol)) break;
    Vec v = es.eigenvectors().col(i);
    for (Eigen::Index k = 0; k < v.size(); ++k)
      if (std::abs(v[k]) > 1e-8) {
        if (v[k] < 0) v = -v;
        break;
      }
    out.push_back(v.cwiseQuotient(s));
  }
  return out;
}

inline double metric_norm(const Vec& v, const Vec& G) { return std::sqrt((v.array().square() * G.array()).sum()); }

}  // namespace detail

// Negative gradient flow x' = -G^{-1} grad / (1 + |grad|_{G^{-1}}) with
// Bogacki-Shampine steps; stops at a minimum, below the escape level, or
// (optionally) below every critical value.
inline FlowFate integrate_flow(FlowEvaluator& ev, const Vec& G, const Vec& x0, const std::vector<MorsePoint>& pts,
                               const MorseOptions& opt, bool early) {
  FlowFate fate;
  fate.closest.assign(pts.size(), std::numeric_limits<double>::infinity());
  double min_crit = std::numeric_limits<double>::infinity();
  for (const auto& p : pts) min_crit = std::min(min_crit, p.value);
  auto rhs = [&](const Vec& x, double& val) {
    Vec g;
    val = ev.value_gradient(x, g);
    const Vec v = g.cwiseQuotient(G);
    const double gn = std::sqrt(g.dot(v));
    return Vec(-v / (1.0 + gn));
  };
  Vec x = x0;
  double val;
  Vec k1 = rhs(x, val);
  double h = 1e-2;
  for (long step = 0; step < opt.max_steps; ++step) {
    fate.steps = step;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const double d = detail::metric_norm(x - pts[i].x, G);
      fate.closest[i] = std::min(fate.closest[i], d);
      if (pts[i].index == 0 && d < 1e-3 * std::max(1.0, detail::metric_norm(pts[i].x, G))) {
        fate.kind = FateKind::Converged;
        fate.target = static_cast<int>(i);
        fate.final_x = x;
        fate.final_value = val;
        return fate;
      }
    }
    if (val < opt.escape || (early && val < min_crit - 1.0)) {
      fate.kind = FateKind::Escaped;
      fate.final_x = x;
      fate.final_value = val;
      return fate;
    }
    double v2, v3, v4;
    const Vec k2 = rhs(x + 0.5 * h * k1, v2);
    const Vec k3 = rhs(x + 0.75 * h * k2, v3);
    const Vec xn = x + h * (2.0 / 9 * k1 + 1.0 / 3 * k2 + 4.0 / 9 * k3);
    const Vec k4 = rhs(xn, v4);
    const Vec err = h * (-5.0 / 72 * k1 + 1.0 / 12 * k2 + 1.0 / 9 * k3 - 1.0 / 8 * k4);
    const double scale = opt.rtol * std::max(1.0, detail::metric_norm(x, G));
    const double en = detail::metric_norm(err, G) / scale;
    if (en <= 1.0) {
      x = xn;
      k1 = k4;
      val = v4;
      const double speed = detail::metric_norm(k1, G);
      if (speed < 1e-13) {
        fate.final_x = x;
        fate.final_value = val;
        return fate;  // stalled away from any minimum
      }
    }
    h *= std::clamp(0.9 * std::pow(std::max(en, 1e-10), -1.0 / 3.0), 0.2, 5.0);
    h = std::min(h, 10.0);
  }
  fate.final_x = x;
  fate.final_value = val;
  return fate;
}

// Critical points in Morse form (index, value, oriented unstable directions).
inline std::vector<MorsePoint> morse_points(const FlowModel& model, const std::vector<Vec>& xs, const Vec& G) {
  std::vector<MorsePoint> out;
  auto ev = model.evaluator();
  for (const auto& x : xs) {
    MorsePoint p;
    p.x = x;
    Vec g;
    p.value = ev->value_gradient(x, g);
    p.unstable = detail::oriented_unstable(ev->hessian(x), G);
    p.index = static_cast<int>(p.unstable.size());
    out.push_back(std::move(p));
  }
  return out;
}

inline std::vector<MorsePoint> morse_points(const DualProblem& P, const std::vector<DualCriticalPoint>& cps,
                                            const Vec& G) {
  std::vector<Vec> xs;
  for (const auto& c : cps) xs.push_back(c.reduced.x);
  return morse_points(ReducedFlowModel(P), xs, G);
}

struct BranchFates {
  FlowFate plus;
  FlowFate minus;
};

// Fates of the two branches of the unstable manifold of an index-1 point.
inline BranchFates trace_unstable(const FlowModel& model, const std::vector<MorsePoint>& pts, int p,
                                  const MorseOptions& opt = {}) {
  if (pts.at(p).index != 1) throw Error(ErrorKind::Precondition, "trace_unstable needs an index-1 point");
  const Vec G = detail::jittered_metric(model, opt.jitter, opt.seed);
  const Vec& e = pts[p].unstable[0];
  const double off = opt.start_offset * std::max(1.0, detail::metric_norm(pts[p].x, G));
  const auto fates = parallel_map<FlowFate>(2, [&](std::size_t b) {
    auto ev = model.evaluator();
    const Vec x0 = pts[p].x + (b == 0 ? off : -off) * e;
    return integrate_flow(*ev, G, x0, pts, opt, false);
  });
  return {fates[0], fates[1]};
}

namespace detail {

inline Vec circle_point(const MorsePoint& p, double theta, double off) {
  return p.x + off * (std::cos(theta) * p.unstable[0] + std::sin(theta) * p.unstable[1]);
}

}  // namespace detail

// Flow lines of the negative gradient between critical points of index
// difference one, counted with signs.
inline MorseComplexData build_complex(const FlowModel& model, const std::vector<Vec>& xs, const MorseOptions& opt = {}) {
  MorseComplexData data;
  data.metric_jitter = opt.jitter;
  const Vec G = detail::jittered_metric(model, opt.jitter, opt.seed);
  data.critical_points = morse_points(model, xs, G);
  const auto& pts = data.critical_points;
  for (std::size_t i = 0; i < pts.size(); ++i) data.by_index[pts[i].index].push_back(static_cast<int>(i));
  auto pos_in = [&](int k, int i) {
    const auto& v = data.by_index[k];
    return static_cast<int>(std::find(v.begin(), v.end(), i) - v.begin());
  };
  for (auto& [k, v] : data.by_index)
    if (k >= 1) data.boundary[k - 1].assign(v.size(), std::vector<long long>(data.by_index[k - 1].size(), 0));

  // index 1: both branches
  for (int i : data.by_index[1]) {
    const BranchFates bf = trace_unstable(model, pts, i, opt);
    data.index1_fates[i] = {bf.plus, bf.minus};
    for (int b = 0; b < 2; ++b) {
      const FlowFate& f = b == 0 ? bf.plus : bf.minus;
      if (f.kind == FateKind::Converged) {
        const int q = f.target;
        if (pts[q].index != 0) {
          data.failures.push_back("flow line from index 1 ends at index " + std::to_string(pts[q].index));
          continue;
        }
        data.boundary[0][pos_in(1, i)][pos_in(0, q)] += b == 0 ? 1 : -1;
        data.flow_records.push_back({i, q, b == 0 ? 1 : -1, b == 0 ? 1.0 : -1.0});
      } else if (f.kind == FateKind::Undetermined) {
        data.failures.push_back("undetermined branch of an index-1 point");
      }
    }
  }

  // index 2: shoot a circle of directions, bisect fate changes
  for (int i : data.by_index[2]) {
    const MorsePoint& p = pts[i];
    const double off = opt.start_offset * std::max(1.0, detail::metric_norm(p.x, G));
    const int D = opt.index2_directions;
    auto fate_at = [&](FlowEvaluator& ev, double th) {
      return integrate_flow(ev, G, detail::circle_point(p, th, off), pts, opt, opt.early_escape);
    };
    // half-step phase keeps the ring off symmetry axes, where a ray can
    // run straight into a saddle
    auto angle = [&](std::size_t j) { return kTwoPi * (static_cast<double>(j) + 0.5) / D; };
    const auto ring = parallel_map<FlowFate>(D, [&](std::size_t j) {
      auto ev = model.evaluator();
      return fate_at(*ev, angle(j));
    });
    std::vector<std::size_t> changes;
    for (int j = 0; j < D; ++j)
      if (!(ring[j] == ring[(j + 1) % D])) changes.push_back(j);
    struct Transition {
      double angle;
      FlowFate lo, hi;
    };
    const auto trans = parallel_map<Transition>(changes.size(), [&](std::size_t c) {
      auto ev = model.evaluator();
      const std::size_t j = changes[c];
      double a = angle(j), b = angle(j + 1);
      FlowFate fa = ring[j], fb = ring[(j + 1) % D];
      while (b - a > opt.angular_tol) {
        const double m = 0.5 * (a + b);
        FlowFate fm = fate_at(*ev, m);
        if (fm == fa) {
          a = m;
          fa = std::move(fm);
        } else if (fm == fb) {
          b = m;
          fb = std::move(fm);
        } else {
          // a third fate inside the bracket: keep the side that still changes
          b = m;
          fb = std::move(fm);
        }
      }
      return Transition{0.5 * (a + b), fa, fb};
    });
    for (const auto& t : trans) {
      // the separating line runs into the index-1 point it passes closest to
      int q = -1;
      double best = std::numeric_limits<double>::infinity();
      for (int c : data.by_index[1]) {
        const double d = std::min(t.lo.closest[c], t.hi.closest[c]);
        if (d < best) {
          best = d;
          q = c;
        }
      }
      if (q < 0) {
        data.failures.push_back("fate change of an index-2 point with no index-1 point to pass");
        continue;
      }
      const auto& bf = data.index1_fates[q];
      int sign = 0;
      if (t.hi == bf.first && t.lo == bf.second) sign = 1;
      else if (t.hi == bf.second && t.lo == bf.first) sign = -1;
      if (sign == 0) {
        data.failures.push_back("fates around a broken line do not match the branches of the index-1 point");
        continue;
      }
      data.boundary[1][pos_in(2, i)][pos_in(1, q)] += sign;
      data.flow_records.push_back({i, q, sign, t.angle});
    }
  }
  return data;
}

inline MorseComplexData build_complex(const DualProblem& P, const std::vector<DualCriticalPoint>& cps,
                                      const MorseOptions& opt = {}) {
  std::vector<Vec> xs;
  for (const auto& c : cps) xs.push_back(c.reduced.x);
  return build_complex(ReducedFlowModel(P), xs, opt);
}

// Smith normal form diagonal of an integer matrix.
inline std::vector<long long> smith_diagonal(std::vector<std::vector<long long>> A) {
  const std::size_t m = A.size(), n = m ? A[0].size() : 0;
  std::vector<long long> diag;
  std::size_t t = 0;
  while (t < m && t < n) {
    // pivot: smallest nonzero absolute value in the remaining block
    std::size_t pr = m, pc = n;
    long long best = 0;
    for (std::size_t i = t; i < m; ++i)
      for (std::size_t j = t; j < n; ++j)
        if (A[i][j] != 0 && (best == 0 || std::llabs(A[i][j]) < best)) {
          best = std::llabs(A[i][j]);
          pr = i;
          pc = j;
        }
    if (best == 0) break;
    std::swap(A[t], A[pr]);
    for (auto& row : A) std::swap(row[t], row[pc]);
    bool clean = false;
    while (!clean) {
      clean = true;
      for (std::size_t i = t + 1; i < m; ++i) {
        const long long q = A[i][t] / A[t][t];
        for (std::size_t j = t; j < n; ++j) A[i][j] -= q * A[t][j];
        if (A[i][t] != 0) {
          clean = false;
          std::swap(A[t], A[i]);
        }
      }
      for (std::size_t j = t + 1; j < n; ++j) {
        const long long q = A[t][j] / A[t][t];
        for (std::size_t i = t; i < m; ++i) A[i][j] -= q * A[i][t];
        if (A[t][j] != 0) {
          clean = false;
          for (auto& row : A) std::swap(row[t], row[j]);
        }
      }
      if (clean) {
        // divisibility of the remaining block by the pivot
        for (std::size_t i = t + 1; i < m && clean; ++i)
          for (std::size_t j = t + 1; j < n; ++j)
            if (A[i][j] % A[t][t] != 0) {
              for (std::size_t k = t; k < n; ++k) A[t][k] += A[i][k];
              clean = false;
              break;
            }
      }
    }
    diag.push_back(std::llabs(A[t][t]));
    ++t;
  }
  return diag;
}

struct HomologyGroup {
  int rank = 0;
  std::vector<long long> torsion;
};

struct ComplexReport {
  bool d_squared_zero = true;
  std::vector<std::string> witnesses;
  std::map<int, HomologyGroup> homology;
  bool ok() const { return d_squared_zero && witnesses.empty(); }
};

inline std::vector<std::vector<long long>> integer_product(const std::vector<std::vector<long long>>& A,
                                                           const std::vector<std::vector<long long>>& B) {
  const std::size_t m = A.size(), k = B.size(), n = k ? B[0].size() : 0;
  std::vector<std::vector<long long>> C(m, std::vector<long long>(n, 0));
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t l = 0; l < k && l < A[i].size(); ++l)
      for (std::size_t j = 0; j < n; ++j) C[i][j] += A[i][l] * B[l][j];
  return C;
}

// d o d = 0 and integer homology of the complex.
inline ComplexReport verify_complex(const MorseComplexData& data) {
  ComplexReport rep;
  for (const auto& f : data.failures) rep.witnesses.push_back(f);
  auto count = [&](int k) {
    auto it = data.by_index.find(k);
    return it == data.by_index.end() ? 0 : static_cast<int>(it->second.size());
  };
  auto bmat = [&](int k) -> std::vector<std::vector<long long>> {  // C_{k+1} -> C_k
    auto it = data.boundary.find(k);
    if (it != data.boundary.end()) return it->second;
    return std::vector<std::vector<long long>>(count(k + 1), std::vector<long long>(count(k), 0));
  };
  int top = 0;
  for (const auto& [k, v] : data.by_index) top = std::max(top, k);
  for (int k = 0; k + 1 < top; ++k) {
    const auto C = integer_product(bmat(k + 1), bmat(k));
    for (std::size_t i = 0; i < C.size(); ++i)
      for (std::size_t j = 0; j < C[i].size(); ++j)
        if (C[i][j] != 0) {
          rep.d_squared_zero = false;
          rep.witnesses.push_back("d^2 entry (" + std::to_string(i) + "," + std::to_string(j) + ") in degree " +
                                  std::to_string(k) + " is " + std::to_string(C[i][j]));
        }
  }
  for (int k = 0; k <= top; ++k) {
    const auto out = k > 0 ? smith_diagonal(bmat(k - 1)) : std::vector<long long>{};
    const auto in = smith_diagonal(bmat(k));
    HomologyGroup h;
    h.rank = count(k) - static_cast<int>(out.size()) - static_cast<int>(in.size());
    for (long long d : in)
      if (d > 1) h.torsion.push_back(d);
    rep.homology[k] = h;
  }
  return rep;
}

}  // namespace systola
