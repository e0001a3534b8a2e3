#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "lumiedit/lights.hpp"
#include "lumiedit/parallel.hpp"
#include "lumiedit/raster.hpp"
#include "lumiedit/rng.hpp"
#include "lumiedit/scene.hpp"
#include "lumiedit/sg.hpp"

namespace lumiedit {

enum class Strategy { kArea, kAngular, kMis };
enum class MisHeuristic { kBalance, kPower };

inline const char* to_string(Strategy s) {
  switch (s) {
    case Strategy::kArea: return "area";
    case Strategy::kAngular: return "angular";
    case Strategy::kMis: return "mis";
  }
  return "?";
}

inline Strategy parse_strategy(const std::string& s) {
  if (s == "area") return Strategy::kArea;
  if (s == "angular") return Strategy::kAngular;
  if (s == "mis") return Strategy::kMis;
  throw Error(ErrorKind::kInvalidArgument, "strategy", "unknown strategy '" + s + "'");
}

struct DirectOptions {
  Strategy strategy = Strategy::kMis;  // lamps always use area sampling
  MisHeuristic heuristic = MisHeuristic::kBalance;
  int spp = 64;  // per strategy
  std::uint64_t seed = 0;
};

inline constexpr double kMinDistance = 1e-6;
inline constexpr double kMisCosEpsilon = 1e-4;

// Stable 64-bit FNV-1a, used to give every light its own sample streams.
inline std::uint64_t light_key(const std::string& id) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : id) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t light_seed(std::uint64_t seed, const std::string& id) { return mix64(seed ^ light_key(id)); }

struct Receiver {
  Vec3d p;
  Vec3d n;
};

// Surface sample used by the estimators. Box faces are picked uniformly and
// weighted by 6 A_f, which keeps the weight smooth in the box axes.
template <class T>
SurfaceSample<T> estimator_sample(const Light<T>& light, double u, double v, double selector) {
  if (const auto* b = std::get_if<BoxLamp<T>>(&light)) {
    const int face = std::min(5, static_cast<int>(selector * 6.0));
    auto s = sample_box_face(*b, face, u, v);
    s.inv_pdf = s.inv_pdf * 6.0;
    return s;
  }
  return sample_light_surface(light, u, v, selector);
}

// Radiance leaving the light toward a receiver; `l` points from the receiver
// to the light.
template <class T>
Vec3<T> emitted_radiance(const Light<T>& light, const Vec3<T>& l) {
  if (const auto* w = std::get_if<WindowLight<T>>(&light)) return window_radiance_eval(w->radiance, l);
  if (const auto* b = std::get_if<BoxLamp<T>>(&light)) return b->w;
  return std::get<SurfelLamp<T>>(light).w;
}

// Emitter-side cosine. Windows transmit on both sides; lamps emit along n.
template <class T>
T emitter_cosine(const Light<T>& light, const Vec3<T>& n_q, const Vec3<T>& l) {
  using std::abs;
  if (std::holds_alternative<WindowLight<T>>(light)) return abs(dot(n_q, l));
  return -dot(n_q, l);
}

template <class T>
T mis_weight(const T& own, const T& other, MisHeuristic h) {
  if (h == MisHeuristic::kPower) return own * own / (own * own + other * other);
  return own / (own + other);
}

template <class T>
struct DirectEstimate {
  Vec3<T> value{T(0.0), T(0.0), T(0.0)};
  int samples = 0;  // samples drawn after distance rejection, all strategies
};

template <class T>
Vec3<T> area_strategy(const Light<T>& light, const Receiver& r, const CounterRng& rng, const DirectOptions& opt,
                      bool with_mis, int& used) {
  using std::sqrt;
  const auto* window = std::get_if<WindowLight<T>>(&light);
  const Vec3<T> p = lift<T>(r.p), n_p = lift<T>(r.n);
  Vec3<T> sum{T(0.0), T(0.0), T(0.0)};
  int n = 0;
  for (int i = 0; i < opt.spp; ++i) {
    const auto s = estimator_sample(light, rng.symmetric(i, 0), rng.symmetric(i, 1), rng.uniform(i, 2));
    const Vec3<T> pq = s.q - p;
    const T d2 = dot(pq, pq);
    if (value(d2) < kMinDistance * kMinDistance) continue;
    ++n;
    const T dist = sqrt(d2);
    const Vec3<T> l = pq / dist;
    const T cos_p = dot(n_p, l);
    if (!(value(cos_p) > 0.0)) continue;
    const T cos_q = emitter_cosine(light, s.n, l);
    if (!(value(cos_q) > 0.0)) continue;
    T weight = cos_p * cos_q * s.inv_pdf / d2;
    if (with_mis && window) {
      const T p_area = d2 / (s.inv_pdf * (value(cos_q) > kMisCosEpsilon ? cos_q : T(kMisCosEpsilon)));
      const T p_sun = sg_pdf(window->radiance.sun, l);
      weight = weight * mis_weight(p_area, p_sun, opt.heuristic);
    }
    sum += emitted_radiance(light, l) * weight;
  }
  used += n;
  return n > 0 ? sum / T(static_cast<double>(n)) : sum;
}

// Ray-rectangle test; returns the hit distance or a negative value.
template <class T>
T window_hit(const WindowLight<T>& w, const Vec3<T>& p, const Vec3<T>& l) {
  const Vec3<T> nw = cross(w.x, w.y);
  const T denom = dot(l, nw);
  if (std::abs(value(denom)) < 1e-14) return T(-1.0);
  const T t = dot(w.c - p, nw) / denom;
  if (!(value(t) > kMinDistance)) return T(-1.0);
  const Vec3<T> h = p + l * t - w.c;
  const double a = value(dot(h, w.x) / dot(w.x, w.x));
  const double b = value(dot(h, w.y) / dot(w.y, w.y));
  if (std::abs(a) > 0.5 || std::abs(b) > 0.5) return T(-1.0);
  return t;
}

template <class T>
Vec3<T> angular_strategy(const WindowLight<T>& w, const Light<T>& light, const Receiver& r, const CounterRng& rng,
                         const DirectOptions& opt, bool with_mis, int& used) {
  using std::abs;
  const Vec3<T> p = lift<T>(r.p), n_p = lift<T>(r.n);
  const T area = window_area(w);
  const Vec3<T> nw = normalize(cross(w.x, w.y));
  Vec3<T> sum{T(0.0), T(0.0), T(0.0)};
  for (int i = 0; i < opt.spp; ++i) {
    const Vec3<T> l = sg_sample(w.radiance.sun, rng.symmetric(i, 0), rng.symmetric(i, 1));
    const T cos_p = dot(n_p, l);
    if (!(value(cos_p) > 0.0)) continue;
    const T t = window_hit(w, p, l);
    if (!(value(t) > 0.0)) continue;
    const T p_sun = sg_pdf(w.radiance.sun, l);
    if (!(value(p_sun) > 0.0)) continue;
    T weight = cos_p / p_sun;
    if (with_mis) {
      const T cos_q = abs(dot(nw, l));
      const T p_area = t * t / (area * (value(cos_q) > kMisCosEpsilon ? cos_q : T(kMisCosEpsilon)));
      weight = weight * mis_weight(p_sun, p_area, opt.heuristic);
    }
    sum += emitted_radiance(light, l) * weight;
  }
  used += opt.spp;
  return sum / T(static_cast<double>(opt.spp));
}

// Irradiance at one receiver from one light, without occlusion. `seed` is
// the per-light seed; `pixel` keys the counter RNG.
template <class T>
DirectEstimate<T> direct_at(const Light<T>& light, const Receiver& r, std::uint64_t seed, std::uint64_t pixel,
                            const DirectOptions& opt) {
  DirectEstimate<T> out;
  if (!light_enabled(light)) return out;
  const auto* window = std::get_if<WindowLight<T>>(&light);
  const Strategy strategy = window ? opt.strategy : Strategy::kArea;
  const CounterRng area_rng(seed, pixel, Stream::kArea);
  const CounterRng ang_rng(seed, pixel, Stream::kAngular);
  switch (strategy) {
    case Strategy::kArea:
      out.value = area_strategy(light, r, area_rng, opt, false, out.samples);
      break;
    case Strategy::kAngular:
      out.value = angular_strategy(*window, light, r, ang_rng, opt, false, out.samples);
      break;
    case Strategy::kMis:
      out.value = area_strategy(light, r, area_rng, opt, true, out.samples) +
                  angular_strategy(*window, light, r, ang_rng, opt, true, out.samples);
      break;
  }
  return out;
}

inline void check_direct_preconditions(const Light<double>& light, const DirectOptions& opt) {
  if (opt.spp < 1) throw Error(ErrorKind::kInvalidArgument, "spp", "spp must be >= 1");
  if (!light_enabled(light)) throw Error(ErrorKind::kDisabledLight, light_id(light), "light is disabled");
  if (const auto* w = std::get_if<WindowLight<double>>(&light)) {
    if (opt.strategy != Strategy::kArea && !(w->radiance.sun.lambda > 0.0)) {
      throw Error(ErrorKind::kOutOfRange, light_id(light) + ".radiance.sun.lambda", "angular sampling needs lambda > 0");
    }
  } else if (opt.strategy == Strategy::kAngular) {
    throw Error(ErrorKind::kInvalidArgument, light_id(light), "angular sampling applies to windows only");
  }
}

// Per-pixel estimates in any scalar type, row-major.
template <class T>
std::vector<Vec3<T>> render_direct_values(const Scene& scene, const Light<T>& light, const DirectOptions& opt,
                                          int threads = 0, std::vector<int>* samples = nullptr) {
  const int W = scene.camera.width, H = scene.camera.height;
  std::vector<Vec3<T>> out(static_cast<std::size_t>(W) * H, Vec3<T>{T(0.0), T(0.0), T(0.0)});
  if (samples) samples->assign(out.size(), 0);
  const std::uint64_t seed = light_seed(opt.seed, light_id(light));
  parallel_for(H, threads, [&](int row) {
    for (int col = 0; col < W; ++col) {
      const std::size_t i = static_cast<std::size_t>(row) * W + col;
      const Receiver rec{scene.position(row, col), scene.normal_at(row, col)};
      auto est = direct_at(light, rec, seed, i, opt);
      out[i] = est.value;
      if (samples) (*samples)[i] = est.samples;
    }
  });
  return out;
}

inline Raster to_raster(const std::vector<Vec3d>& v, int width, int height) {
  Raster r(width, height, 3);
  for (int row = 0; row < height; ++row)
    for (int col = 0; col < width; ++col) r.set_rgb(row, col, v[static_cast<std::size_t>(row) * width + col]);
  return r;
}

inline Raster render_direct(const Scene& scene, const Light<double>& light, const DirectOptions& opt,
                            int threads = 0) {
  check_direct_preconditions(light, opt);
  return to_raster(render_direct_values(scene, light, opt, threads), scene.camera.width, scene.camera.height);
}

inline Raster direct_area(const Scene& scene, const Light<double>& light, int spp, std::uint64_t seed,
                          int threads = 0) {
  return render_direct(scene, light, {Strategy::kArea, MisHeuristic::kBalance, spp, seed}, threads);
}

inline Raster direct_angular(const Scene& scene, const Light<double>& window, int spp, std::uint64_t seed,
                             int threads = 0) {
  return render_direct(scene, window, {Strategy::kAngular, MisHeuristic::kBalance, spp, seed}, threads);
}

inline Raster direct_mis(const Scene& scene, const Light<double>& window, int spp, std::uint64_t seed,
                         int threads = 0, MisHeuristic h = MisHeuristic::kBalance) {
  return render_direct(scene, window, {Strategy::kMis, h, spp, seed}, threads);
}

}  // namespace lumiedit
