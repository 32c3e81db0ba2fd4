#pragma once

#include <vector>

#include "error.hpp"
#include "linalg.hpp"

namespace systola {

// Mean-zero loop gamma(t) = sum_k exp(2 pi k t J0) c_k over 1 <= |k| <= K,
// each coefficient an independent real 2n-vector.
struct FourierLoop {
  int n = 0;
  int K = 0;
  std::vector<Vec> pos;  // pos[k-1] = c_k
  std::vector<Vec> neg;  // neg[k-1] = c_{-k}

  static FourierLoop zero(int n, int K) {
    FourierLoop f;
    f.n = n;
    f.K = K;
    f.pos.assign(K, Vec::Zero(2 * n));
    f.neg.assign(K, Vec::Zero(2 * n));
    return f;
  }

  int dim() const { return 2 * n; }

  Vec& coeff(int k) {
    if (k == 0 || std::abs(k) > K) throw Error(ErrorKind::InputDomain, "mode outside loop truncation");
    return k > 0 ? pos[k - 1] : neg[-k - 1];
  }
  const Vec& coeff(int k) const { return const_cast<FourierLoop*>(this)->coeff(k); }

  Vec eval(double t) const {
    Vec z = Vec::Zero(dim());
    for (int k = 1; k <= K; ++k) {
      z += rotate(pos[k - 1], kTwoPi * k * t);
      z += rotate(neg[k - 1], -kTwoPi * k * t);
    }
    return z;
  }

  Vec derivative(double t) const {
    Vec z = Vec::Zero(dim());
    for (int k = 1; k <= K; ++k) {
      z += kTwoPi * k * apply_j0(rotate(pos[k - 1], kTwoPi * k * t));
      z -= kTwoPi * k * apply_j0(rotate(neg[k - 1], -kTwoPi * k * t));
    }
    return z;
  }

  std::vector<Vec> samples(int M) const {
    std::vector<Vec> out(M);
    for (int j = 0; j < M; ++j) out[j] = eval(static_cast<double>(j) / M);
    return out;
  }

  // Discrete projection of uniform samples t_j = j/M; the mean is returned
  // separately because the loop itself is mean-zero.
  static FourierLoop from_samples(const std::vector<Vec>& s, int K, Vec* mean = nullptr) {
    const int M = static_cast<int>(s.size());
    if (M <= 2 * K) throw Error(ErrorKind::InputDomain, "too few samples for requested modes");
    const int d = static_cast<int>(s[0].size());
    FourierLoop f = zero(d / 2, K);
    Vec m = Vec::Zero(d);
    for (int j = 0; j < M; ++j) {
      const double t = static_cast<double>(j) / M;
      m += s[j];
      for (int k = 1; k <= K; ++k) {
        f.pos[k - 1] += rotate(s[j], -kTwoPi * k * t);
        f.neg[k - 1] += rotate(s[j], kTwoPi * k * t);
      }
    }
    for (int k = 0; k < K; ++k) {
      f.pos[k] /= M;
      f.neg[k] /= M;
    }
    if (mean) *mean = m / M;
    return f;
  }

  // Integral of gamma^* lambda0 = pi sum_k k |c_k|^2.
  double lambda_integral() const {
    double a = 0.0;
    for (int k = 1; k <= K; ++k) a += kPi * k * (pos[k - 1].squaredNorm() - neg[k - 1].squaredNorm());
    return a;
  }

  // Block order of the packed layout: 1..K, then -1..-K. The low modes
  // 1..N therefore always form the leading 2nN entries.
  static std::vector<int> packed_modes(int K) {
    std::vector<int> m;
    for (int k = 1; k <= K; ++k) m.push_back(k);
    for (int k = 1; k <= K; ++k) m.push_back(-k);
    return m;
  }

  Vec packed() const {
    Vec v(2 * K * dim());
    const auto modes = packed_modes(K);
    for (std::size_t b = 0; b < modes.size(); ++b) v.segment(b * dim(), dim()) = coeff(modes[b]);
    return v;
  }

  static FourierLoop unpack(const Vec& v, int n, int K) {
    FourierLoop f = zero(n, K);
    const auto modes = packed_modes(K);
    if (v.size() != static_cast<Eigen::Index>(modes.size()) * 2 * n)
      throw Error(ErrorKind::InputDomain, "packed vector has wrong length");
    for (std::size_t b = 0; b < modes.size(); ++b) f.coeff(modes[b]) = v.segment(b * 2 * n, 2 * n);
    return f;
  }

  FourierLoop resized(int K2) const {
    FourierLoop f = zero(n, K2);
    for (int k = 1; k <= std::min(K, K2); ++k) {
      f.pos[k - 1] = pos[k - 1];
      f.neg[k - 1] = neg[k - 1];
    }
    return f;
  }
};

}  // namespace systola
