#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "error.hpp"
#include "linalg.hpp"

namespace systola {

struct OdeOptions {
  double rtol = 1e-12;
  double atol = 1e-12;
  double h0 = 1e-3;
  double hmin = 1e-13;
  long max_steps = 2000000;
};

// Dormand-Prince 5(4) with step-size control. Returns the states at the
// requested output times (sorted, within [0, T]); `project` is applied to
// every accepted state.
template <class Rhs, class Project>
std::vector<Vec> dopri5(const Rhs& f, Vec y, const std::vector<double>& outputs, const OdeOptions& opt,
                        const Project& project) {
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                          a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                          b6 = 11.0 / 84;
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                          e6 = 22.0 / 525, e7 = -1.0 / 40;

  std::vector<Vec> out;
  out.reserve(outputs.size());
  double t = 0.0;
  double h = opt.h0;
  long steps = 0;
  Vec k1 = f(t, y);
  for (double target : outputs) {
    if (target < t - 1e-15) throw Error(ErrorKind::Precondition, "output times must be sorted");
    while (t < target) {
      if (++steps > opt.max_steps) throw Error(ErrorKind::Stiffness, "step budget exhausted", t);
      bool last = false;
      double hs = h;
      if (t + hs >= target) {
        hs = target - t;
        last = true;
      }
      const Vec k2 = f(t + c2 * hs, y + hs * a21 * k1);
      const Vec k3 = f(t + c3 * hs, y + hs * (a31 * k1 + a32 * k2));
      const Vec k4 = f(t + c4 * hs, y + hs * (a41 * k1 + a42 * k2 + a43 * k3));
      const Vec k5 = f(t + c5 * hs, y + hs * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
      const Vec k6 = f(t + hs, y + hs * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
      Vec ynew = y + hs * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
      const Vec k7 = f(t + hs, ynew);
      const Vec err = hs * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
      const Vec scale = (opt.atol + opt.rtol * y.cwiseAbs().cwiseMax(ynew.cwiseAbs()).array()).matrix();
      const double en = std::sqrt((err.cwiseQuotient(scale)).squaredNorm() / static_cast<double>(y.size()));
      if (!std::isfinite(en)) throw Error(ErrorKind::Stiffness, "non-finite integration state", t);
      const double fac = std::clamp(0.9 * std::pow(std::max(en, 1e-16), -0.2), 0.2, 5.0);
      if (en <= 1.0) {
        t = last ? target : t + hs;
        y = project(ynew);
        k1 = f(t, y);
        if (!last) h = hs * fac;
      } else {
        h = hs * fac;
        if (h < opt.hmin) throw Error(ErrorKind::Stiffness, "step size underflow", t);
      }
    }
    out.push_back(y);
  }
  return out;
}

template <class Rhs>
std::vector<Vec> dopri5(const Rhs& f, Vec y, const std::vector<double>& outputs, const OdeOptions& opt = {}) {
  return dopri5(f, std::move(y), outputs, opt, [](Vec v) { return v; });
}

inline std::vector<double> uniform_times(double T, int M, bool include_end = false) {
  std::vector<double> ts(include_end ? M + 1 : M);
  for (std::size_t j = 0; j < ts.size(); ++j) ts[j] = T * static_cast<double>(j) / M;
  return ts;
}

}  // namespace systola
