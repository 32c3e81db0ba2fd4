#pragma once

#include <Eigen/Dense>

#include <cmath>

namespace systola {

// Second-order forward-mode scalar: value, gradient and Hessian with respect
// to a fixed set of N input variables. Used for gauges whose closed-form
// Hessians would be error-prone to write out by hand.
template <int N>
struct Dual2 {
  using V = Eigen::Matrix<double, N, 1>;
  using M = Eigen::Matrix<double, N, N>;

  double v = 0.0;
  V g;
  M h;

  Dual2() = default;
  Dual2(double value, V grad, M hess) : v(value), g(std::move(grad)), h(std::move(hess)) {}

  static Dual2 constant(double value, int dim) {
    return {value, V::Zero(dim), M::Zero(dim, dim)};
  }
  static Dual2 variable(double value, int index, int dim) {
    Dual2 d = constant(value, dim);
    d.g[index] = 1.0;
    return d;
  }

  // Applies a scalar function given f, f', f'' at v.
  Dual2 chain(double f0, double f1, double f2) const {
    return {f0, f1 * g, f1 * h + f2 * (g * g.transpose())};
  }

  Dual2& operator+=(const Dual2& o) { v += o.v; g += o.g; h += o.h; return *this; }
  Dual2& operator-=(const Dual2& o) { v -= o.v; g -= o.g; h -= o.h; return *this; }
  Dual2& operator+=(double c) { v += c; return *this; }
  Dual2& operator*=(double c) { v *= c; g *= c; h *= c; return *this; }
};

template <int N> Dual2<N> operator+(Dual2<N> a, const Dual2<N>& b) { return a += b; }
template <int N> Dual2<N> operator-(Dual2<N> a, const Dual2<N>& b) { return a -= b; }
template <int N> Dual2<N> operator+(Dual2<N> a, double c) { return a += c; }
template <int N> Dual2<N> operator+(double c, Dual2<N> a) { return a += c; }
template <int N> Dual2<N> operator-(Dual2<N> a, double c) { return a += -c; }
template <int N> Dual2<N> operator-(double c, Dual2<N> a) { a *= -1.0; return a += c; }
template <int N> Dual2<N> operator-(Dual2<N> a) { a *= -1.0; return a; }
template <int N> Dual2<N> operator*(Dual2<N> a, double c) { return a *= c; }
template <int N> Dual2<N> operator*(double c, Dual2<N> a) { return a *= c; }
template <int N> Dual2<N> operator/(Dual2<N> a, double c) { return a *= 1.0 / c; }

template <int N>
Dual2<N> operator*(const Dual2<N>& a, const Dual2<N>& b) {
  return {a.v * b.v, a.v * b.g + b.v * a.g,
          a.v * b.h + b.v * a.h + a.g * b.g.transpose() + b.g * a.g.transpose()};
}

template <int N>
Dual2<N> reciprocal(const Dual2<N>& a) {
  const double r = 1.0 / a.v;
  return a.chain(r, -r * r, 2.0 * r * r * r);
}

template <int N> Dual2<N> operator/(const Dual2<N>& a, const Dual2<N>& b) { return a * reciprocal(b); }
template <int N> Dual2<N> operator/(double c, const Dual2<N>& b) { return reciprocal(b) * c; }

template <int N>
Dual2<N> sqrt(const Dual2<N>& a) {
  const double s = std::sqrt(a.v);
  return a.chain(s, 0.5 / s, -0.25 / (s * a.v));
}

template <int N>
Dual2<N> exp(const Dual2<N>& a) {
  const double e = std::exp(a.v);
  return a.chain(e, e, e);
}

template <int N>
Dual2<N> square(const Dual2<N>& a) { return a.chain(a.v * a.v, 2.0 * a.v, 2.0); }

inline double square(double x) { return x * x; }

inline double value_of(double x) { return x; }
template <int N> double value_of(const Dual2<N>& a) { return a.v; }

}  // namespace systola
