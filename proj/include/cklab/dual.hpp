// Nested univariate forward-mode duals. Nesting k levels and seeding one
// direction per level yields exact mixed partial derivatives of order k.
#pragma once

#include <cmath>
#include <span>

namespace cklab {

template <class T>
struct Dual {
  T a{};  // value
  T b{};  // derivative w.r.t. the direction seeded at this level

  Dual() = default;
  Dual(T value, T deriv) : a(std::move(value)), b(std::move(deriv)) {}
  explicit Dual(double v) : a(v), b(T{}) {}
};

template <class T> Dual<T> operator+(const Dual<T>& x, const Dual<T>& y) { return {x.a + y.a, x.b + y.b}; }
template <class T> Dual<T> operator-(const Dual<T>& x, const Dual<T>& y) { return {x.a - y.a, x.b - y.b}; }
template <class T> Dual<T> operator-(const Dual<T>& x) { return {-x.a, -x.b}; }
template <class T> Dual<T> operator*(const Dual<T>& x, const Dual<T>& y) {
  return {x.a * y.a, x.b * y.a + x.a * y.b};
}
template <class T> Dual<T> operator/(const Dual<T>& x, const Dual<T>& y) {
  return {x.a / y.a, (x.b * y.a - x.a * y.b) / (y.a * y.a)};
}

template <class T> Dual<T> operator+(const Dual<T>& x, double c) { return {x.a + c, x.b}; }
template <class T> Dual<T> operator+(double c, const Dual<T>& x) { return {x.a + c, x.b}; }
template <class T> Dual<T> operator-(const Dual<T>& x, double c) { return {x.a - c, x.b}; }
template <class T> Dual<T> operator-(double c, const Dual<T>& x) { return {c - x.a, -x.b}; }
template <class T> Dual<T> operator*(const Dual<T>& x, double c) { return {x.a * c, x.b * c}; }
template <class T> Dual<T> operator*(double c, const Dual<T>& x) { return {x.a * c, x.b * c}; }
template <class T> Dual<T> operator/(const Dual<T>& x, double c) { return {x.a / c, x.b / c}; }
template <class T> Dual<T> operator/(double c, const Dual<T>& x) {
  return Dual<T>(c) / x;
}

using std::atan;
using std::cos;
using std::exp;
using std::log;
using std::sin;
using std::sqrt;
using std::tan;

template <class T> Dual<T> sin(const Dual<T>& x) { return {sin(x.a), x.b * cos(x.a)}; }
template <class T> Dual<T> cos(const Dual<T>& x) { return {cos(x.a), -(x.b * sin(x.a))}; }
template <class T> Dual<T> tan(const Dual<T>& x) {
  T c = cos(x.a);
  return {tan(x.a), x.b / (c * c)};
}
template <class T> Dual<T> atan(const Dual<T>& x) { return {atan(x.a), x.b / (x.a * x.a + 1.0)}; }
template <class T> Dual<T> sqrt(const Dual<T>& x) {
  T r = sqrt(x.a);
  return {r, x.b / (r * 2.0)};
}
template <class T> Dual<T> log(const Dual<T>& x) { return {log(x.a), x.b / x.a}; }
template <class T> Dual<T> exp(const Dual<T>& x) {
  T e = exp(x.a);
  return {e, x.b * e};
}

// Constant (all derivative slots zero) at any nesting depth.
template <class T> struct DualTraits;
template <> struct DualTraits<double> {
  static double constant(double v) { return v; }
  static double value(double x) { return x; }
};
template <class U> struct DualTraits<Dual<U>> {
  static Dual<U> constant(double v) { return Dual<U>{DualTraits<U>::constant(v), DualTraits<U>::constant(0.0)}; }
  static double value(const Dual<U>& x) { return DualTraits<U>::value(x.a); }
};

// Variable of index `var`, seeded for differentiation along dirs[0], dirs[1], ...
// (one nesting level per entry; the nesting depth of T must equal dirs.size()).
template <class T> struct DualSeed;
template <> struct DualSeed<double> {
  static double make(double v, std::span<const int>, int) { return v; }
};
template <class U> struct DualSeed<Dual<U>> {
  static Dual<U> make(double v, std::span<const int> dirs, int var) {
    Dual<U> r;
    r.a = DualSeed<U>::make(v, dirs.subspan(1), var);
    r.b = DualTraits<U>::constant(dirs.front() == var ? 1.0 : 0.0);
    return r;
  }
};

// Reads off the fully mixed derivative: .b at every nesting level.
template <class T> struct DualExtract;
template <> struct DualExtract<double> {
  static double top(double x) { return x; }
};
template <class U> struct DualExtract<Dual<U>> {
  static double top(const Dual<U>& x) { return DualExtract<U>::top(x.b); }
};

using Dual1 = Dual<double>;
using Dual2 = Dual<Dual1>;
using Dual3 = Dual<Dual2>;
using Dual4 = Dual<Dual3>;

}  // namespace cklab
