#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <type_traits>

namespace lumiedit {

inline constexpr double kPi = std::numbers::pi;

// Forward-mode dual number with a fixed number of tangent slots. All light
// estimators are templated on the scalar so the same code path produces
// values (double) and pathwise derivatives (Dual<N>).
template <int N>
struct Dual {
  double v = 0.0;
  std::array<double, N> d{};

  Dual() = default;
  Dual(double value) : v(value) {}  // NOLINT: implicit lift of constants

  static Dual variable(double value, int slot) {
    Dual r(value);
    r.d[slot] = 1.0;
    return r;
  }

  Dual& operator+=(const Dual& o) {
    v += o.v;
    for (int i = 0; i < N; ++i) d[i] += o.d[i];
    return *this;
  }
  Dual& operator-=(const Dual& o) {
    v -= o.v;
    for (int i = 0; i < N; ++i) d[i] -= o.d[i];
    return *this;
  }
  Dual& operator*=(const Dual& o) {
    for (int i = 0; i < N; ++i) d[i] = d[i] * o.v + v * o.d[i];
    v *= o.v;
    return *this;
  }
  Dual& operator/=(const Dual& o) {
    const double inv = 1.0 / o.v;
    for (int i = 0; i < N; ++i) d[i] = (d[i] - v * inv * o.d[i]) * inv;
    v *= inv;
    return *this;
  }
  Dual operator-() const {
    Dual r;
    r.v = -v;
    for (int i = 0; i < N; ++i) r.d[i] = -d[i];
    return r;
  }
};

template <int N> Dual<N> operator+(Dual<N> a, const Dual<N>& b) { return a += b; }
template <int N> Dual<N> operator-(Dual<N> a, const Dual<N>& b) { return a -= b; }
template <int N> Dual<N> operator*(Dual<N> a, const Dual<N>& b) { return a *= b; }
template <int N> Dual<N> operator/(Dual<N> a, const Dual<N>& b) { return a /= b; }
template <int N> Dual<N> operator+(Dual<N> a, double b) { a.v += b; return a; }
template <int N> Dual<N> operator+(double a, Dual<N> b) { b.v += a; return b; }
template <int N> Dual<N> operator-(Dual<N> a, double b) { a.v -= b; return a; }
template <int N> Dual<N> operator-(double a, const Dual<N>& b) { Dual<N> r = -b; r.v += a; return r; }
template <int N> Dual<N> operator*(Dual<N> a, double b) {
  a.v *= b;
  for (auto& x : a.d) x *= b;
  return a;
}
template <int N> Dual<N> operator*(double a, Dual<N> b) { return b * a; }
template <int N> Dual<N> operator/(Dual<N> a, double b) { return a * (1.0 / b); }
template <int N> Dual<N> operator/(double a, const Dual<N>& b) { return Dual<N>(a) / b; }

template <int N> bool operator<(const Dual<N>& a, const Dual<N>& b) { return a.v < b.v; }
template <int N> bool operator>(const Dual<N>& a, const Dual<N>& b) { return a.v > b.v; }
template <int N> bool operator<(const Dual<N>& a, double b) { return a.v < b; }
template <int N> bool operator>(const Dual<N>& a, double b) { return a.v > b; }
template <int N> bool operator<=(const Dual<N>& a, double b) { return a.v <= b; }
template <int N> bool operator>=(const Dual<N>& a, double b) { return a.v >= b; }
template <int N> bool operator<(double a, const Dual<N>& b) { return a < b.v; }
template <int N> bool operator>(double a, const Dual<N>& b) { return a > b.v; }

namespace detail {
// Applies the chain rule: f(a) with f'(a) = slope.
template <int N>
Dual<N> chain(const Dual<N>& a, double value, double slope) {
  Dual<N> r(value);
  for (int i = 0; i < N; ++i) r.d[i] = slope * a.d[i];
  return r;
}
}  // namespace detail

template <int N> Dual<N> exp(const Dual<N>& a) { const double e = std::exp(a.v); return detail::chain(a, e, e); }
template <int N> Dual<N> expm1(const Dual<N>& a) { return detail::chain(a, std::expm1(a.v), std::exp(a.v)); }
template <int N> Dual<N> log(const Dual<N>& a) { return detail::chain(a, std::log(a.v), 1.0 / a.v); }
template <int N> Dual<N> log1p(const Dual<N>& a) { return detail::chain(a, std::log1p(a.v), 1.0 / (1.0 + a.v)); }
template <int N> Dual<N> sin(const Dual<N>& a) { return detail::chain(a, std::sin(a.v), std::cos(a.v)); }
template <int N> Dual<N> cos(const Dual<N>& a) { return detail::chain(a, std::cos(a.v), -std::sin(a.v)); }
template <int N> Dual<N> tan(const Dual<N>& a) {
  const double t = std::tan(a.v);
  return detail::chain(a, t, 1.0 + t * t);
}
template <int N> Dual<N> atan(const Dual<N>& a) { return detail::chain(a, std::atan(a.v), 1.0 / (1.0 + a.v * a.v)); }
// sqrt(0) has an unbounded slope; we report zero there (measure-zero set for samplers).
template <int N> Dual<N> sqrt(const Dual<N>& a) {
  const double s = std::sqrt(a.v);
  return detail::chain(a, s, s > 0.0 ? 0.5 / s : 0.0);
}
template <int N> Dual<N> abs(const Dual<N>& a) { return a.v < 0.0 ? -a : a; }
template <int N> Dual<N> acos(const Dual<N>& a) {
  const double c = std::clamp(a.v, -1.0, 1.0);
  const double s = std::sqrt(1.0 - c * c);
  return detail::chain(a, std::acos(c), s > 0.0 ? -1.0 / s : 0.0);
}

// Scalar helpers that work for double and Dual alike.
inline double value(double x) { return x; }
template <int N> double value(const Dual<N>& x) { return x.v; }

template <class T> struct is_dual : std::false_type {};
template <int N> struct is_dual<Dual<N>> : std::true_type {};

template <class T>
T max0(const T& x) {
  return value(x) > 0.0 ? x : T(0.0);
}
template <class T>
T clamp_value(const T& x, double lo, double hi) {
  if (value(x) < lo) return T(lo);
  if (value(x) > hi) return T(hi);
  return x;
}

template <class T>
struct Vec3 {
  T x{}, y{}, z{};

  constexpr Vec3() = default;
  constexpr Vec3(T a, T b, T c) : x(std::move(a)), y(std::move(b)), z(std::move(c)) {}
  template <class U, class = std::enable_if_t<!std::is_same_v<U, T> && std::is_same_v<U, double>>>
  explicit Vec3(const Vec3<U>& o) : x(o.x), y(o.y), z(o.z) {}

  T& operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }
  const T& operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }

  Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
  Vec3& operator-=(const Vec3& o) { x -= o.x; y -= o.y; z -= o.z; return *this; }
  Vec3& operator*=(const T& s) { x *= s; y *= s; z *= s; return *this; }
};

using Vec3d = Vec3<double>;

template <class T> Vec3<T> operator+(Vec3<T> a, const Vec3<T>& b) { return a += b; }
template <class T> Vec3<T> operator-(Vec3<T> a, const Vec3<T>& b) { return a -= b; }
template <class T> Vec3<T> operator-(const Vec3<T>& a) { return {-a.x, -a.y, -a.z}; }
template <class T> Vec3<T> operator*(Vec3<T> a, const T& s) { return a *= s; }
template <class T> Vec3<T> operator*(const T& s, Vec3<T> a) { return a *= s; }
template <class T> Vec3<T> operator/(const Vec3<T>& a, const T& s) { return {a.x / s, a.y / s, a.z / s}; }
// Mixed double-scalar products for Dual vectors.
template <int N> Vec3<Dual<N>> operator*(const Vec3<Dual<N>>& a, double s) { return {a.x * s, a.y * s, a.z * s}; }
template <int N> Vec3<Dual<N>> operator*(double s, const Vec3<Dual<N>>& a) { return a * s; }
template <int N> Vec3<Dual<N>> operator/(const Vec3<Dual<N>>& a, double s) { return a * (1.0 / s); }

// Componentwise product (used for RGB).
template <class T> Vec3<T> mul(const Vec3<T>& a, const Vec3<T>& b) { return {a.x * b.x, a.y * b.y, a.z * b.z}; }

template <class T> T dot(const Vec3<T>& a, const Vec3<T>& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
template <class T> Vec3<T> cross(const Vec3<T>& a, const Vec3<T>& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
template <class T> T length_squared(const Vec3<T>& a) { return dot(a, a); }
template <class T> T length(const Vec3<T>& a) {
  using std::sqrt;
  return sqrt(dot(a, a));
}
template <class T> Vec3<T> normalize(const Vec3<T>& a) { return a / length(a); }

template <class T> Vec3d value(const Vec3<T>& a) { return {value(a.x), value(a.y), value(a.z)}; }

// Lifts a constant double vector into the scalar type T.
template <class T> Vec3<T> lift(const Vec3d& a) { return {T(a.x), T(a.y), T(a.z)}; }

inline bool all_finite(const Vec3d& a) { return std::isfinite(a.x) && std::isfinite(a.y) && std::isfinite(a.z); }

// Orthonormal tangent pair around a unit direction. The helper axis is the
// coordinate axis where |d| is smallest; the frame is deterministic and
// smooth away from ties between components.
template <class T>
std::pair<Vec3<T>, Vec3<T>> tangent_frame(const Vec3<T>& d) {
  const double ax = std::abs(value(d.x)), ay = std::abs(value(d.y)), az = std::abs(value(d.z));
  Vec3<T> a{T(0.0), T(0.0), T(0.0)};
  if (ax <= ay && ax <= az) {
    a.x = T(1.0);
  } else if (ay <= az) {
    a.y = T(1.0);
  } else {
    a.z = T(1.0);
  }
  Vec3<T> t1 = normalize(a - d * dot(a, d));
  Vec3<T> t2 = cross(d, t1);
  return {t1, t2};
}

}  // namespace lumiedit
