#pragma once

#include <cmath>
#include <type_traits>

namespace adavsr {

/// Forward-mode dual number v + d*eps. Running a reverse-mode gradient in
/// Dual arithmetic, seeded with tangent u on the parameters, yields the
/// gradient in `.v` and the Hessian-vector product H*u in `.d`.
template <class T>
struct Dual {
  T v{};
  T d{};

  constexpr Dual() = default;
  constexpr Dual(T value) : v(value) {}  // NOLINT: implicit lift of constants
  constexpr Dual(T value, T tangent) : v(value), d(tangent) {}

  Dual& operator+=(const Dual& o) {
    v += o.v;
    d += o.d;
    return *this;
  }
  Dual& operator-=(const Dual& o) {
    v -= o.v;
    d -= o.d;
    return *this;
  }
  Dual& operator*=(const Dual& o) {
    d = d * o.v + v * o.d;
    v *= o.v;
    return *this;
  }
  Dual& operator*=(double s) {
    v *= static_cast<T>(s);
    d *= static_cast<T>(s);
    return *this;
  }
};

template <class T> Dual<T> operator+(Dual<T> a, const Dual<T>& b) { return a += b; }
template <class T> Dual<T> operator-(Dual<T> a, const Dual<T>& b) { return a -= b; }
template <class T> Dual<T> operator-(const Dual<T>& a) { return {-a.v, -a.d}; }
template <class T> Dual<T> operator*(const Dual<T>& a, const Dual<T>& b) { return {a.v * b.v, a.d * b.v + a.v * b.d}; }
template <class T> Dual<T> operator*(const Dual<T>& a, double s) {
  return {a.v * static_cast<T>(s), a.d * static_cast<T>(s)};
}
template <class T> Dual<T> operator*(double s, const Dual<T>& a) { return a * s; }
template <class T> Dual<T> operator/(const Dual<T>& a, const Dual<T>& b) {
  return {a.v / b.v, (a.d * b.v - a.v * b.d) / (b.v * b.v)};
}

template <class T> bool operator<(const Dual<T>& a, const Dual<T>& b) { return a.v < b.v; }
template <class T> bool operator>(const Dual<T>& a, const Dual<T>& b) { return a.v > b.v; }

template <class T> Dual<T> tanh(const Dual<T>& a) {
  const T t = std::tanh(a.v);
  return {t, a.d * (T(1) - t * t)};
}
template <class T> Dual<T> sqrt(const Dual<T>& a) {
  const T s = std::sqrt(a.v);
  return {s, a.d / (T(2) * s)};
}

/// Value part, for both plain and dual scalars.
inline double value_of(float x) { return x; }
inline double value_of(double x) { return x; }
template <class T> double value_of(const Dual<T>& x) { return static_cast<double>(x.v); }

template <class T> struct is_dual : std::false_type {};
template <class T> struct is_dual<Dual<T>> : std::true_type {};

}  // namespace adavsr
