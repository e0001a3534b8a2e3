#pragma once

#include <cmath>

#include "lumiedit/math.hpp"

namespace lumiedit {

// One spherical Gaussian radiance lobe: w * exp(lambda * (d.l - 1)).
template <class T>
struct SphericalGaussian {
  Vec3<T> w{T(0.0), T(0.0), T(0.0)};
  T lambda{1.0};
  Vec3<T> d{T(0.0), T(0.0), T(1.0)};
};

// Window radiance as three lobes: sun, sky and ground.
template <class T>
struct WindowRadiance {
  SphericalGaussian<T> sun, sky, ground;

  SphericalGaussian<T>& lobe(int k) { return k == 0 ? sun : (k == 1 ? sky : ground); }
  const SphericalGaussian<T>& lobe(int k) const { return k == 0 ? sun : (k == 1 ? sky : ground); }
};

enum class Lobe { kSun = 0, kSky = 1, kGround = 2 };

inline const char* lobe_name(int k) { return k == 0 ? "sun" : (k == 1 ? "sky" : "ground"); }

template <class T>
Vec3<T> sg_eval(const SphericalGaussian<T>& g, const Vec3<T>& l) {
  using std::exp;
  const T falloff = exp(g.lambda * (dot(g.d, l) - 1.0));
  return g.w * falloff;
}

template <class T>
Vec3<T> window_radiance_eval(const WindowRadiance<T>& r, const Vec3<T>& l) {
  return sg_eval(r.sun, l) + sg_eval(r.sky, l) + sg_eval(r.ground, l);
}

// (1 - exp(-2 lambda)) / lambda, continuous at lambda -> 0 where it tends to 2.
template <class T>
T sg_mass_factor(const T& lambda) {
  using std::expm1;
  if (value(lambda) < 1e-8) return T(2.0) - 2.0 * lambda;
  return -expm1(-2.0 * lambda) / lambda;
}

// Exact integral of the lobe over the unit sphere.
template <class T>
Vec3<T> sg_sphere_integral(const SphericalGaussian<T>& g) {
  return g.w * (2.0 * kPi * sg_mass_factor(g.lambda));
}

// Solid-angle density of directions drawn by sg_sample; integrates to one.
template <class T>
T sg_pdf(const SphericalGaussian<T>& g, const Vec3<T>& l) {
  using std::exp;
  return exp(g.lambda * (dot(g.d, l) - 1.0)) / (2.0 * kPi * sg_mass_factor(g.lambda));
}

// CDF of the polar angle measured from the lobe axis.
template <class T>
T sg_cdf_theta(const T& lambda, const T& theta) {
  using std::cos;
  using std::expm1;
  return expm1(lambda * (cos(theta) - 1.0)) / expm1(-2.0 * lambda);
}

// cos(theta) of the inverse CDF at (v+1)/2, v in [-1, 1].
template <class T>
T sg_sample_cos_theta(const T& lambda, double v) {
  using std::expm1;
  using std::log1p;
  const double s = 0.5 * (v + 1.0);
  if (s >= 1.0) return T(-1.0);
  const T c = 1.0 + log1p(s * expm1(-2.0 * lambda)) / lambda;
  return clamp_value(c, -1.0, 1.0);
}

template <class T>
T sg_sample_theta(const T& lambda, double v) {
  using std::acos;
  return acos(sg_sample_cos_theta(lambda, v));
}

// Differentiable inverse-CDF sample: phi = u*pi, theta from v, in the
// tangent frame around d. u, v in [-1, 1].
template <class T>
Vec3<T> sg_sample(const SphericalGaussian<T>& g, double u, double v) {
  using std::cos;
  using std::sin;
  using std::sqrt;
  const T cos_t = sg_sample_cos_theta(g.lambda, v);
  const T sin_t = sqrt(max0(T(1.0) - cos_t * cos_t));
  const double phi = u * kPi;
  const auto [t1, t2] = tangent_frame(g.d);
  return t1 * (sin_t * std::cos(phi)) + t2 * (sin_t * std::sin(phi)) + g.d * cos_t;
}

}  // namespace lumiedit
