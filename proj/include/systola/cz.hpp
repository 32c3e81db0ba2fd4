#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "error.hpp"
#include "frame.hpp"
#include "hamiltonian.hpp"
#include "linalg.hpp"
#include "ode.hpp"
#include "reeb.hpp"

namespace systola {

// A = -J0 d/dt - S(t) on loops t in [0,1], with S sampled at t_j = j/M.
struct AsymptoticOperator {
  int rank = 1;
  std::vector<Mat> S;
  std::string source = "synthetic";
  double symmetry_defect = 0.0;  // largest asymmetry before symmetrization

  int dim() const { return 2 * rank; }
  int grid() const { return static_cast<int>(S.size()); }

  static AsymptoticOperator constant(const Mat& S0, int M = 64) {
    AsymptoticOperator A;
    A.rank = static_cast<int>(S0.rows()) / 2;
    A.S.assign(M, symmetrize(S0));
    return A;
  }

  // S = 2 pi c Id in rank r.
  static AsymptoticOperator rotation(double c, int rank = 1, int M = 64) {
    return constant(kTwoPi * c * Mat::Identity(2 * rank, 2 * rank), M);
  }

  // Trigonometric interpolation of the samples.
  Mat at(double t) const {
    prepare();
    const int M = grid();
    Mat out = cos_[0];
    const int half = M / 2;
    for (int m = 1; m < (M + 1) / 2; ++m) {
      const double th = kTwoPi * m * t;
      out += 2.0 * (cos_[m] * std::cos(th) + sin_[m] * std::sin(th));
    }
    if (M % 2 == 0 && M > 1) out += cos_[half] * std::cos(kTwoPi * half * t);
    return out;
  }

  AsymptoticOperator resampled(int Q) const {
    if (Q == grid()) return *this;
    AsymptoticOperator B = *this;
    B.S.resize(Q);
    for (int q = 0; q < Q; ++q) B.S[q] = symmetrize(at(static_cast<double>(q) / Q));
    B.cos_.clear();
    B.sin_.clear();
    return B;
  }

  AsymptoticOperator shifted(double s) const {
    AsymptoticOperator B = *this;
    for (auto& m : B.S) m.diagonal().array() -= s;  // A + s
    B.cos_.clear();
    B.sin_.clear();
    return B;
  }

 private:
  void prepare() const {
    if (!cos_.empty()) return;
    const int M = grid();
    const int d = dim();
    cos_.assign(M / 2 + 1, Mat::Zero(d, d));
    sin_.assign(M / 2 + 1, Mat::Zero(d, d));
    for (int m = 0; m <= M / 2; ++m) {
      for (int j = 0; j < M; ++j) {
        const double th = kTwoPi * m * j / M;
        cos_[m] += S[j] * std::cos(th);
        sin_[m] += S[j] * std::sin(th);
      }
      cos_[m] /= M;
      sin_[m] /= M;
    }
  }
  mutable std::vector<Mat> cos_, sin_;
};

struct SpectralData {
  std::vector<double> eigenvalues;  // distinct, sorted
  std::vector<int> multiplicity;
  std::vector<int> winding;         // rank 1 only, else empty
  std::vector<Mat> eigenfunctions;  // Q x dim samples of a representative
  std::vector<double> residuals;
};

namespace detail {

struct Galerkin {
  int K = 0;
  int Q = 0;
  int d = 0;
  Mat basis;  // (Q*d) x D, basis values at t_q
  Vec modes;  // 2 pi k per column
  Mat matrix;
  AsymptoticOperator op;
};

inline Galerkin galerkin(const AsymptoticOperator& A, int K) {
  Galerkin g;
  g.K = K;
  g.d = A.dim();
  g.Q = std::max(A.grid(), 8 * K + 16);
  g.op = A.resampled(g.Q);
  const int D = g.d * (2 * K + 1);
  g.basis.resize(static_cast<Eigen::Index>(g.Q) * g.d, D);
  g.modes.resize(D);
  for (int q = 0; q < g.Q; ++q) {
    const double t = static_cast<double>(q) / g.Q;
    for (int k = -K; k <= K; ++k) {
      const Mat2 R = rotation2(kTwoPi * k * t);
      for (int i = 0; i < g.d; ++i) {
        const int col = (k + K) * g.d + i;
        auto blk = g.basis.block(q * g.d, col, g.d, 1);
        blk.setZero();
        const int p = i / 2;
        blk(2 * p, 0) = R(0, i % 2);
        blk(2 * p + 1, 0) = R(1, i % 2);
      }
    }
  }
  for (int k = -K; k <= K; ++k) g.modes.segment((k + K) * g.d, g.d).setConstant(kTwoPi * k);
  Mat SB(g.basis.rows(), D);
  for (int q = 0; q < g.Q; ++q) SB.middleRows(q * g.d, g.d).noalias() = g.op.S[q] * g.basis.middleRows(q * g.d, g.d);
  g.matrix = -(g.basis.transpose() * SB) / g.Q;
  g.matrix.diagonal() += g.modes;
  g.matrix = symmetrize(g.matrix);
  return g;
}

// Winding of a nowhere-vanishing planar loop sampled on a closed grid.
inline int winding_of(const Mat& f) {
  double total = 0.0;
  const Eigen::Index Q = f.rows();
  double minabs = std::numeric_limits<double>::infinity(), maxabs = 0.0;
  for (Eigen::Index q = 0; q < Q; ++q) {
    const Cplx a(f(q, 0), f(q, 1));
    const Cplx b(f((q + 1) % Q, 0), f((q + 1) % Q, 1));
    minabs = std::min(minabs, std::abs(a));
    maxabs = std::max(maxabs, std::abs(a));
    total += std::arg(b / a);
  }
  if (!(minabs > 1e-8 * maxabs)) throw Error(ErrorKind::Resolution, "eigenfunction vanishes on the grid", minabs);
  return static_cast<int>(std::lround(total / kTwoPi));
}

}  // namespace detail

struct SpectrumOptions {
  int K_gal = 64;
  double multiplicity_tol = 1e-6;
};

inline SpectralData operator_spectrum(const AsymptoticOperator& A, double lo, double hi,
                                      const SpectrumOptions& opt = {}) {
  if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi))
    throw Error(ErrorKind::InputDomain, "spectral window must be finite and nonempty");
  const detail::Galerkin g = detail::galerkin(A, opt.K_gal);
  Eigen::SelfAdjointEigenSolver<Mat> es(g.matrix);
  const Vec& ev = es.eigenvalues();
  for (Eigen::Index i = 0; i < ev.size(); ++i)
    if (std::abs(ev[i] - lo) < 1e-8 || std::abs(ev[i] - hi) < 1e-8)
      throw Error(ErrorKind::Resolution, "eigenvalue at the spectral window edge", ev[i]);
  SpectralData sd;
  Eigen::Index i = 0;
  while (i < ev.size()) {
    Eigen::Index j = i + 1;
    while (j < ev.size() && ev[j] - ev[i] < opt.multiplicity_tol * (1.0 + std::abs(ev[i]))) ++j;
    const double nu = ev.segment(i, j - i).mean();
    if (nu > lo && nu < hi) {
      sd.eigenvalues.push_back(nu);
      sd.multiplicity.push_back(static_cast<int>(j - i));
      const Vec v = es.eigenvectors().col(i);
      Mat f(g.Q, g.d);
      Vec lin = g.basis * v;
      Vec lin_d = g.basis * g.modes.cwiseProduct(v);
      double res2 = 0.0, nrm2 = 0.0;
      for (int q = 0; q < g.Q; ++q) {
        f.row(q) = lin.segment(q * g.d, g.d).transpose();
        const Vec r = lin_d.segment(q * g.d, g.d) - g.op.S[q] * lin.segment(q * g.d, g.d) -
                      nu * lin.segment(q * g.d, g.d);
        res2 += r.squaredNorm();
        nrm2 += lin.segment(q * g.d, g.d).squaredNorm();
      }
      sd.residuals.push_back(std::sqrt(res2 / nrm2));
      if (A.rank == 1) sd.winding.push_back(detail::winding_of(f));
      sd.eigenfunctions.push_back(std::move(f));
    }
    i = j;
  }
  return sd;
}

inline std::string spectrum_csv(const SpectralData& sd) {
  std::ostringstream os;
  os.precision(17);
  os << "eigenvalue,multiplicity,winding\n";
  for (std::size_t i = 0; i < sd.eigenvalues.size(); ++i) {
    os << sd.eigenvalues[i] << "," << sd.multiplicity[i] << ",";
    if (i < sd.winding.size()) os << sd.winding[i];
    os << "\n";
  }
  return os.str();
}

struct CZResult {
  int cz = 0;
  int alpha_lo = 0;  // winding below delta
  int alpha_hi = 0;  // winding at or above delta
  int p = 0;
};

// Winding route: CZ^delta = alpha^{<delta} + alpha^{>=delta}.
inline CZResult conley_zehnder(const AsymptoticOperator& A, double delta = 0.0, const SpectrumOptions& opt = {}) {
  if (A.rank != 1) throw Error(ErrorKind::Precondition, "winding route needs rank 1");
  double smax = 0.0;
  for (const auto& m : A.S) smax = std::max(smax, m.norm());
  const double half = smax + 2.5 * kTwoPi;
  const detail::Galerkin g = detail::galerkin(A, opt.K_gal);
  Eigen::SelfAdjointEigenSolver<Mat> es(g.matrix);
  const Vec& ev = es.eigenvalues();
  Eigen::Index below = -1, above = -1;
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (std::abs(ev[i] - delta) < 1e-8)
      throw Error(ErrorKind::Precondition, "delta lies in the spectrum (degenerate operator)", ev[i] - delta);
    if (ev[i] < delta) below = i;
    else if (above < 0) above = i;
  }
  if (below < 0 || above < 0 || ev[below] < delta - half || ev[above] > delta + half)
    throw Error(ErrorKind::Resolution, "Galerkin truncation too small around delta");
  auto wind = [&](Eigen::Index i) {
    const Vec lin = g.basis * es.eigenvectors().col(i);
    Mat f(g.Q, 2);
    for (int q = 0; q < g.Q; ++q) f.row(q) = lin.segment(2 * q, 2).transpose();
    return detail::winding_of(f);
  };
  CZResult r;
  r.alpha_lo = wind(below);
  r.alpha_hi = wind(above);
  r.p = r.alpha_hi - r.alpha_lo;
  if (r.p != 0 && r.p != 1) throw Error(ErrorKind::Inconsistency, "winding jump across delta is not 0 or 1", r.p);
  r.cz = 2 * r.alpha_lo + r.p;
  return r;
}

// (CZ^{+shift}, CZ^{-shift}): the two nondegenerate neighbours of a
// degenerate operator.
inline std::pair<int, int> conley_zehnder_bracket(const AsymptoticOperator& A, double shift = 1e-4,
                                                  const SpectrumOptions& opt = {}) {
  return {conley_zehnder(A, shift, opt).cz, conley_zehnder(A, -shift, opt).cz};
}

// Fundamental solution of w' = J0 S(t) w sampled at t_i = i/steps.
struct SymplecticPath {
  std::vector<double> t;
  std::vector<Mat> psi;
};

inline SymplecticPath symplectic_path(const AsymptoticOperator& A, int steps = 2048) {
  const int d = A.dim();
  const Mat J = j0_matrix(d);
  Vec y(d * d);
  const Mat I = Mat::Identity(d, d);
  y = Eigen::Map<const Vec>(I.data(), d * d);
  auto rhs = [&](double t, const Vec& s) {
    const Eigen::Map<const Mat> P(s.data(), d, d);
    Vec out(d * d);
    Eigen::Map<Mat>(out.data(), d, d) = J * A.at(t) * P;
    return out;
  };
  OdeOptions o;
  o.rtol = o.atol = 1e-12;
  SymplecticPath p;
  p.t = uniform_times(1.0, steps, true);
  const auto ys = dopri5(rhs, y, p.t, o);
  for (const auto& s : ys) p.psi.push_back(Eigen::Map<const Mat>(s.data(), d, d));
  return p;
}

namespace detail {

inline double total_angle(const SymplecticPath& p, const Vec2& v) {
  double total = 0.0;
  Vec2 prev = v;
  for (std::size_t i = 1; i < p.psi.size(); ++i) {
    const Vec2 cur = p.psi[i] * v;
    total += std::atan2(prev[0] * cur[1] - prev[1] * cur[0], prev.dot(cur));
    prev = cur;
  }
  return total;
}

}  // namespace detail

// Rank 1: CZ from the rotation interval of the path. General rank: crossing
// form count of the path t -> Psi(t).
inline int conley_zehnder_rotation(const SymplecticPath& p, const AsymptoticOperator* A = nullptr) {
  const int d = static_cast<int>(p.psi.front().rows());
  const Mat& end = p.psi.back();
  const double det = (Mat::Identity(d, d) - end).determinant();
  if (std::abs(det) < 1e-8) throw Error(ErrorKind::Precondition, "degenerate path endpoint", det);
  if (d == 2) {
    const int samples = 720;
    std::vector<double> th(samples);
    for (int i = 0; i < samples; ++i) {
      const double phi = kPi * i / samples;  // v and -v rotate alike
      th[i] = detail::total_angle(p, Vec2(std::cos(phi), std::sin(phi)));
    }
    auto refine = [&](int i, bool want_max) {
      double a = kPi * (i - 1) / samples, b = kPi * (i + 1) / samples;
      auto f = [&](double phi) {
        const double v = detail::total_angle(p, Vec2(std::cos(phi), std::sin(phi)));
        return want_max ? -v : v;
      };
      const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
      double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
      double f1 = f(x1), f2 = f(x2);
      for (int it = 0; it < 40; ++it) {
        if (f1 < f2) { b = x2; x2 = x1; f2 = f1; x1 = b - gr * (b - a); f1 = f(x1); }
        else { a = x1; x1 = x2; f1 = f2; x2 = a + gr * (b - a); f2 = f(x2); }
      }
      return want_max ? -std::min(f1, f2) : std::min(f1, f2);
    };
    const int imin = static_cast<int>(std::min_element(th.begin(), th.end()) - th.begin());
    const int imax = static_cast<int>(std::max_element(th.begin(), th.end()) - th.begin());
    const double lo = std::min(th[imin], refine(imin, false));
    const double hi = std::max(th[imax], refine(imax, true));
    const long k = static_cast<long>(std::floor(lo / kTwoPi));
    if (hi < kTwoPi * (k + 1)) return static_cast<int>(2 * k + 1);
    return static_cast<int>(2 * (k + 1));
  }
  if (!A) throw Error(ErrorKind::Precondition, "crossing form needs the generator S(t)");
  // Crossing form: 1/2 sign S(0) + sum of signatures of S restricted to
  // ker(Psi(t) - I) at interior crossings.
  auto signature = [](const Mat& Q) {
    Eigen::SelfAdjointEigenSolver<Mat> es(symmetrize(Q), Eigen::EigenvaluesOnly);
    int s = 0;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
      double e = es.eigenvalues()[i];
      if (std::abs(e) < 1e-9) e += 1e-6;  // fixed regularization at degenerate crossings
      s += e > 0 ? 1 : -1;
    }
    return s;
  };
  const Mat I = Mat::Identity(d, d);
  const Mat J = j0_matrix(d);
  auto smin = [&](const Mat& P) {
    Eigen::JacobiSVD<Mat> svd(P - I);
    return svd.singularValues().minCoeff();
  };
  const std::size_t n = p.psi.size();
  std::vector<double> sv(n);
  for (std::size_t i = 0; i < n; ++i) sv[i] = smin(p.psi[i]);
  int twice = signature(A->at(0.0));
  // Psi on demand from the nearest stored sample.
  auto psi_at = [&](double t) {
    std::size_t i = static_cast<std::size_t>(std::floor(t * (n - 1)));
    i = std::min(i, n - 2);
    const double t0 = p.t[i];
    if (t <= t0) return Mat(p.psi[i]);
    Vec y = Eigen::Map<const Vec>(p.psi[i].data(), d * d);
    auto rhs = [&](double s, const Vec& st) {
      const Eigen::Map<const Mat> P(st.data(), d, d);
      Vec out(d * d);
      Eigen::Map<Mat>(out.data(), d, d) = J * A->at(t0 + s) * P;
      return out;
    };
    OdeOptions o;
    o.h0 = (t - t0) / 4;
    const auto ys = dopri5(rhs, y, {t - t0}, o);
    return Mat(Eigen::Map<const Mat>(ys.back().data(), d, d));
  };
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (!(sv[i] <= sv[i - 1] && sv[i] <= sv[i + 1])) continue;
    if (sv[i] > 0.05) continue;
    double a = p.t[i - 1], b = p.t[i + 1];
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
    double f1 = smin(psi_at(x1)), f2 = smin(psi_at(x2));
    for (int it = 0; it < 60; ++it) {
      if (f1 < f2) { b = x2; x2 = x1; f2 = f1; x1 = b - gr * (b - a); f1 = smin(psi_at(x1)); }
      else { a = x1; x1 = x2; f1 = f2; x2 = a + gr * (b - a); f2 = smin(psi_at(x2)); }
    }
    const double ts = f1 < f2 ? x1 : x2;
    const Mat Pt = psi_at(ts);
    Eigen::JacobiSVD<Mat> svd(Pt - I, Eigen::ComputeFullV);
    const Vec& s = svd.singularValues();
    if (s.minCoeff() > 1e-6) continue;
    std::vector<int> ker;
    for (Eigen::Index k = 0; k < s.size(); ++k)
      if (s[k] < 1e-5) ker.push_back(static_cast<int>(k));
    Mat V(d, ker.size());
    for (std::size_t k = 0; k < ker.size(); ++k) V.col(k) = svd.matrixV().col(ker[k]);
    twice += 2 * signature(V.transpose() * A->at(ts) * V);
  }
  if (twice % 2 != 0) throw Error(ErrorKind::Inconsistency, "odd crossing count (singular S(0)?)", twice);
  return twice / 2;
}

inline int conley_zehnder_rotation(const AsymptoticOperator& A, int steps = 2048) {
  return conley_zehnder_rotation(symplectic_path(A, steps), &A);
}

// Third route for any rank: CZ = r + N_neg - 2r(K+1) from the Galerkin
// matrix on modes |k| <= K.
inline int conley_zehnder_count(const AsymptoticOperator& A, int K = 64) {
  const detail::Galerkin g = detail::galerkin(A, K);
  Eigen::SelfAdjointEigenSolver<Mat> es(g.matrix, Eigen::EigenvaluesOnly);
  int neg = 0;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    if (std::abs(es.eigenvalues()[i]) < 1e-8) throw Error(ErrorKind::Precondition, "degenerate operator");
    if (es.eigenvalues()[i] < 0) ++neg;
  }
  return A.rank + neg - 2 * A.rank * (K + 1);
}

// Linearized Reeb flow along an orbit, expressed in the contact frame and
// rescaled to unit period.
inline AsymptoticOperator transverse_linearization(const ConvexBody& body, const ClosedOrbit& orbit, int M = 1024,
                                                   const FrameOptions& fopt = {}, const OdeOptions& ode = {}) {
  if (body.dim_n != 2) throw Error(ErrorKind::Capability, "transverse linearization needs n = 2");
  const double T = orbit.action;
  const auto pts = reeb_trajectory(body, orbit.base_point(), uniform_times(T, M), ode);
  AsymptoticOperator A;
  A.rank = 1;
  A.source = "reeb-transverse";
  A.S.resize(M);
  const Mat J2 = j0_matrix(2);
  for (int j = 0; j < M; ++j) {
    const Vec& z = pts[j];
    const GaugeValue g = body.gauge(z);
    const Vec X = apply_j0(g.gradient);
    const Mat DX = j0_matrix(4) * g.hessian;
    const XiFrame f = xi_frame_at(body, z, fopt);
    const XiFrame df = frame_derivative(body, z, X, fopt);
    Mat2 a;
    a.col(0) = frame_coordinates(f, DX * f.w1 - df.w1);
    a.col(1) = frame_coordinates(f, DX * f.w2 - df.w2);
    const Mat S = -J2 * a * T;
    A.symmetry_defect = std::max(A.symmetry_defect, (S - S.transpose()).norm());
    A.S[j] = symmetrize(S);
  }
  return A;
}

// Hessian of H along a 1-periodic orbit sampled at t_j = j/M.
inline AsymptoticOperator hamiltonian_linearization(const TimeHamiltonian& H, const std::vector<Vec>& orbit) {
  AsymptoticOperator A;
  A.rank = H.n();
  A.source = "hamiltonian-full";
  const int M = static_cast<int>(orbit.size());
  for (int j = 0; j < M; ++j) A.S.push_back(symmetrize(H.eval(static_cast<double>(j) / M, orbit[j]).hessian));
  return A;
}

// Index formula for Cauchy-Riemann operators with asymptotic indices.
struct FredholmData {
  int n = 1;
  int euler_characteristic = 0;
  int c1 = 0;
  std::vector<int> cz_positive;
  std::vector<int> cz_negative;
};

inline int fredholm_index(const FredholmData& d) {
  return d.n * d.euler_characteristic + 2 * d.c1 +
         std::accumulate(d.cz_positive.begin(), d.cz_positive.end(), 0) -
         std::accumulate(d.cz_negative.begin(), d.cz_negative.end(), 0);
}

// Same formula with exponential weights: positive punctures use CZ^{-delta},
// negative punctures CZ^{delta}.
struct WeightedPuncture {
  AsymptoticOperator op;
  double delta = 0.0;
  bool positive = true;
};

inline int weighted_fredholm_index(int n, int euler_characteristic, int c1,
                                   const std::vector<WeightedPuncture>& punctures) {
  FredholmData d{n, euler_characteristic, c1, {}, {}};
  for (const auto& p : punctures) {
    if (p.positive) d.cz_positive.push_back(conley_zehnder(p.op, -p.delta).cz);
    else d.cz_negative.push_back(conley_zehnder(p.op, p.delta).cz);
  }
  return fredholm_index(d);
}

// Curve index in a symplectization of dimension 2n: (n-3) chi + 2 c1 + sum CZ+ - sum CZ-.
inline int curve_index(const FredholmData& d) {
  return (d.n - 3) * d.euler_characteristic + 2 * d.c1 +
         std::accumulate(d.cz_positive.begin(), d.cz_positive.end(), 0) -
         std::accumulate(d.cz_negative.begin(), d.cz_negative.end(), 0);
}

}  // namespace systola
