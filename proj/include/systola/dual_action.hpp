#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "error.hpp"
#include "fourier.hpp"
#include "hamiltonian.hpp"
#include "linalg.hpp"

namespace systola {

struct DualEval {
  double value = 0.0;
  Vec gradient;
  std::vector<Vec> primal;     // maximizers z*(t_j), reused as warm starts
  std::vector<Mat> curvature;  // inverse Hamiltonian Hessians at z*(t_j)
};

// Truncated dual action on mean-zero loops with modes 1 <= |k| <= K, packed
// as in FourierLoop::packed. The low space H_N is the leading 2nN entries.
class DualProblem {
 public:
  DualProblem(TimeHamiltonian H, int N, int K, int grid_factor = 8)
      : H_(std::move(H)), n_(H_.n()), N_(N), K_(K), grid_(grid_factor * K) {
    if (N < 1 || K <= N) throw Error(ErrorKind::Precondition, "need 1 <= N < K_tail");
    const int d = 2 * n_;
    dim_ = 2 * K_ * d;
    const auto modes = FourierLoop::packed_modes(K_);
    kdiag_.resize(dim_);
    metric_.resize(dim_);
    for (std::size_t b = 0; b < modes.size(); ++b) {
      kdiag_.segment(b * d, d).setConstant(kTwoPi * modes[b]);
      metric_.segment(b * d, d).setConstant(1.0 + kTwoPi * kTwoPi * modes[b] * modes[b]);
    }
    W_ = Mat::Zero(static_cast<Eigen::Index>(grid_) * d, dim_);
    times_.resize(grid_);
    for (int j = 0; j < grid_; ++j) {
      const double t = static_cast<double>(j) / grid_;
      times_[j] = t;
      for (std::size_t b = 0; b < modes.size(); ++b) {
        const double k = modes[b];
        const Mat2 R = kTwoPi * k * rotation2(kTwoPi * k * t);
        for (int p = 0; p < n_; ++p) W_.block<2, 2>(j * d + 2 * p, b * d + 2 * p) = R;
      }
    }
  }

  const TimeHamiltonian& hamiltonian() const { return H_; }
  int n() const { return n_; }
  int order() const { return N_; }
  int tail_order() const { return K_; }
  int grid_size() const { return grid_; }
  int dim() const { return dim_; }
  int dim_low() const { return 2 * n_ * N_; }
  int dim_tail() const { return dim_ - dim_low(); }
  const Vec& kdiag() const { return kdiag_; }
  const Vec& metric() const { return metric_; }
  const std::vector<double>& times() const { return times_; }
  const Mat& sample_matrix() const { return W_; }

  // Samples of -J0 gamma' on the grid, stacked.
  Vec covectors(const Vec& c) const { return W_ * c; }

  // order 0: value; 1: + gradient; 2: + curvature for Hessians.
  DualEval eval(const Vec& c, int order, const std::vector<Vec>* warm = nullptr) const {
    if (c.size() != dim_) throw Error(ErrorKind::InputDomain, "coefficient vector has wrong length");
    const int d = 2 * n_;
    const Vec w = W_ * c;
    DualEval e;
    e.primal.resize(grid_);
    if (order >= 2) e.curvature.resize(grid_);
    double hsum = 0.0;
    Vec zs(static_cast<Eigen::Index>(grid_) * d);
    for (int j = 0; j < grid_; ++j) {
      const Vec wj = w.segment(j * d, d);
      const Vec* g = (warm && static_cast<int>(warm->size()) == grid_) ? &(*warm)[j] : nullptr;
      FenchelValue f = fenchel_eval(H_, times_[j], wj, g, order >= 2);
      hsum += f.value;
      zs.segment(j * d, d) = f.gradient;
      e.primal[j] = std::move(f.gradient);
      if (order >= 2) e.curvature[j] = std::move(f.hessian);
    }
    e.value = -0.5 * c.dot(kdiag_.cwiseProduct(c)) + hsum / grid_;
    if (order >= 1) e.gradient = -kdiag_.cwiseProduct(c) + W_.transpose() * zs / grid_;
    return e;
  }

  double value(const Vec& c) const { return eval(c, 0).value; }

  // Hessian block over the packed index range [offset, offset+size).
  Mat hessian_block(const DualEval& e, Eigen::Index offset, Eigen::Index size) const {
    if (e.curvature.empty()) throw Error(ErrorKind::Precondition, "evaluation carries no curvature");
    const int d = 2 * n_;
    const auto Wb = W_.middleCols(offset, size);
    Mat MW(Wb.rows(), size);
    for (int j = 0; j < grid_; ++j) MW.middleRows(j * d, d).noalias() = e.curvature[j] * Wb.middleRows(j * d, d);
    Mat Hb = Wb.transpose() * MW / grid_;
    Hb.diagonal() -= kdiag_.segment(offset, size);
    return symmetrize(Hb);
  }

  Mat hessian(const DualEval& e) const { return hessian_block(e, 0, dim_); }

  // Dual norm of a covector in the H^1 metric, restricted to [offset, ...).
  double precond_norm(const Vec& g, Eigen::Index offset = 0) const {
    return std::sqrt((g.array().square() / metric_.segment(offset, g.size()).array()).sum());
  }

 private:
  TimeHamiltonian H_;
  int n_, N_, K_, grid_;
  int dim_ = 0;
  Vec kdiag_, metric_;
  Mat W_;
  std::vector<double> times_;
};

// Dual action of an arbitrary loop under a given Hamiltonian (grid of 8K).
inline double dual_action_eval(const TimeHamiltonian& H, const FourierLoop& loop, Vec* gradient = nullptr) {
  DualProblem P(H, 1, std::max(loop.K, 2));
  const Vec c = loop.resized(std::max(loop.K, 2)).packed();
  DualEval e = P.eval(c, gradient ? 1 : 0);
  if (gradient) *gradient = e.gradient;
  return e.value;
}

struct ReducedPoint {
  Vec x;
  Vec tail;
  double value = 0.0;
  Vec gradient;
  std::optional<Mat> hessian;
  double fiber_residual = 0.0;
  std::vector<Vec> primal;
  Vec full() const {
    Vec c(x.size() + tail.size());
    c << x, tail;
    return c;
  }
};

struct TailOptions {
  double tol = 1e-9;
  int max_iter = 80;
};

// Reduced functional psi(x) = min_y Psi(x + y). Holds warm-start caches, so
// each thread needs its own instance.
class ReducedFunctional {
 public:
  explicit ReducedFunctional(const DualProblem& P, TailOptions opt = {}) : P_(&P), opt_(opt) {
    tail_ = Vec::Zero(P.dim_tail());
  }

  const DualProblem& problem() const { return *P_; }

  void reset() {
    tail_ = Vec::Zero(P_->dim_tail());
    primal_.clear();
    has_factor_ = false;
  }

  // Minimizes the fiber restriction; leaves the last evaluation in last_.
  Vec tail_minimizer(const Vec& x) {
    const DualProblem& P = *P_;
    const Eigen::Index nl = P.dim_low(), nt = P.dim_tail();
    if (x.size() != nl) throw Error(ErrorKind::InputDomain, "low-mode vector has wrong length");
    const double tol = opt_.tol * std::max(1.0, x.norm());
    Vec c(P.dim());
    c << x, tail_;
    DualEval e = eval_or_cold(c, 1);
    double res = P.precond_norm(e.gradient.tail(nt), nl);
    bool refactor = !has_factor_;
    for (int it = 0; it < opt_.max_iter && res > tol; ++it) {
      if (refactor) {
        DualEval eh = P.eval(c, 2, &e.primal);
        factor_.compute(P.hessian_block(eh, nl, nt));
        if (factor_.info() != Eigen::Success)
          throw Error(ErrorKind::Convergence, "fiber Hessian is not positive definite (order N too small)", res);
        has_factor_ = true;
        refactor = false;
      }
      const Vec gy = e.gradient.tail(nt);
      const Vec step = -factor_.solve(gy);
      const double slope = gy.dot(step);
      double alpha = 1.0;
      bool accepted = false;
      for (int ls = 0; ls < 40; ++ls) {
        Vec ct = c;
        ct.tail(nt) += alpha * step;
        try {
          DualEval et = P.eval(ct, 1, &e.primal);
          const double rt = P.precond_norm(et.gradient.tail(nt), nl);
          if (et.value <= e.value + 1e-4 * alpha * slope || (alpha == 1.0 && rt < res)) {
            if (rt > 0.3 * res) refactor = true;
            c = std::move(ct);
            e = std::move(et);
            res = rt;
            accepted = true;
            break;
          }
        } catch (const Error& err) {
          if (err.kind() != ErrorKind::Convergence) throw;
        }
        alpha *= 0.5;
      }
      if (!accepted) {
        if (!refactor) {
          refactor = true;
          continue;
        }
        break;
      }
      if (alpha < 1.0) refactor = true;
    }
    if (res > tol) throw Error(ErrorKind::Convergence, "fiber minimization did not converge", res);
    tail_ = c.tail(nt);
    primal_ = e.primal;
    last_ = std::move(e);
    last_res_ = res;
    return tail_;
  }

  ReducedPoint eval(const Vec& x, bool want_hessian = false) {
    const DualProblem& P = *P_;
    tail_minimizer(x);
    ReducedPoint r;
    r.x = x;
    r.tail = tail_;
    r.value = last_.value;
    r.gradient = last_.gradient.head(P.dim_low());
    r.fiber_residual = last_res_;
    r.primal = primal_;
    if (want_hessian) {
      const Vec c = r.full();
      const DualEval eh = P.eval(c, 2, &primal_);
      r.hessian = reduced_hessian(eh);
    }
    return r;
  }

  double value(const Vec& x) {
    tail_minimizer(x);
    return last_.value;
  }

  // Schur complement of the fiber block.
  Mat reduced_hessian(const DualEval& eh) const {
    const DualProblem& P = *P_;
    const Eigen::Index nl = P.dim_low(), nt = P.dim_tail();
    const Mat full = P.hessian(eh);
    Eigen::LLT<Mat> llt(full.bottomRightCorner(nt, nt));
    if (llt.info() != Eigen::Success)
      throw Error(ErrorKind::Convergence, "fiber Hessian is not positive definite (order N too small)");
    const Mat Hyx = full.bottomLeftCorner(nt, nl);
    return symmetrize(full.topLeftCorner(nl, nl) - Hyx.transpose() * llt.solve(Hyx));
  }

  // Seed the tail cache, e.g. when moving along a path.
  void set_tail(const Vec& y) {
    tail_ = y;
    primal_.clear();
  }
  const Vec& tail() const { return tail_; }

 private:
  DualEval eval_or_cold(const Vec& c, int order) {
    if (!primal_.empty()) {
      try {
        return P_->eval(c, order, &primal_);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::Convergence) throw;
      }
    }
    return P_->eval(c, order);
  }

  const DualProblem* P_;
  TailOptions opt_;
  Vec tail_;
  std::vector<Vec> primal_;
  Eigen::LLT<Mat> factor_;
  bool has_factor_ = false;
  DualEval last_;
  double last_res_ = 0.0;
};

// Smallest order N = 8, 16, ... for which the fiber Hessian is positive
// definite at the origin and at a few random low-mode points of size scale.
inline bool fiber_convex(const TimeHamiltonian& H, int N, int K, double scale, std::uint64_t seed, int probes = 3) {
  DualProblem P(H, N, K);
  Rng rng(seed);
  for (int i = 0; i <= probes; ++i) {
    Vec c = Vec::Zero(P.dim());
    if (i > 0) c.head(P.dim_low()) = scale * rng.unit_vec(P.dim_low());
    try {
      const DualEval e = P.eval(c, 2);
      Eigen::LLT<Mat> llt(P.hessian_block(e, P.dim_low(), P.dim_tail()));
      if (llt.info() != Eigen::Success) return false;
    } catch (const Error&) {
      return false;
    }
  }
  return true;
}

}  // namespace systola
