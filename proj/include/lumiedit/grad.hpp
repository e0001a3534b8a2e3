#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <type_traits>
#include <vector>

#include "lumiedit/direct.hpp"
#include "lumiedit/lights.hpp"
#include "lumiedit/math.hpp"
#include "lumiedit/scene.hpp"

namespace lumiedit {

enum class ParamKind { kPosition, kAxis, kIntensity, kBandwidth, kDirection, kDistance };

struct ParamInfo {
  std::string name;
  ParamKind kind;
  int lobe = -1;  // 0 sun, 1 sky, 2 ground for window radiance parameters
};

namespace detail {

template <class V, class F>
void visit_vec(const std::string& base, ParamKind kind, int lobe, V& v, F& f) {
  static const char* const xyz[3] = {"x", "y", "z"};
  static const char* const rgb[3] = {"r", "g", "b"};
  const auto* const* names = kind == ParamKind::kIntensity ? rgb : xyz;
  for (int i = 0; i < 3; ++i) f(base + "." + names[i], kind, lobe, v[i]);
}

}  // namespace detail

// Visits every continuous parameter of a light in a fixed order, as
// f(name, kind, lobe, scalar&). Works on const and mutable lights of any
// scalar type.
template <class LightRef, class F>
void visit_params(LightRef& light, F&& f) {
  std::visit(
      [&](auto& x) {
        using X = std::remove_cv_t<std::remove_reference_t<decltype(x)>>;
        if constexpr (std::is_same_v<X, WindowLight<typename X::scalar_type>>) {
          detail::visit_vec("c", ParamKind::kPosition, -1, x.c, f);
          detail::visit_vec("x", ParamKind::kAxis, -1, x.x, f);
          detail::visit_vec("y", ParamKind::kAxis, -1, x.y, f);
          for (int k = 0; k < 3; ++k) {
            auto& g = x.radiance.lobe(k);
            const std::string base = lobe_name(k);
            detail::visit_vec(base + ".w", ParamKind::kIntensity, k, g.w, f);
            f(base + ".lambda", ParamKind::kBandwidth, k, g.lambda);
            detail::visit_vec(base + ".d", ParamKind::kDirection, k, g.d, f);
          }
        } else if constexpr (std::is_same_v<X, BoxLamp<typename X::scalar_type>>) {
          detail::visit_vec("c", ParamKind::kPosition, -1, x.c, f);
          detail::visit_vec("x", ParamKind::kAxis, -1, x.x, f);
          detail::visit_vec("y", ParamKind::kAxis, -1, x.y, f);
          detail::visit_vec("z", ParamKind::kAxis, -1, x.z, f);
          detail::visit_vec("w", ParamKind::kIntensity, -1, x.w, f);
        } else {
          f(std::string("dist"), ParamKind::kDistance, -1, x.center_dist);
          detail::visit_vec("w", ParamKind::kIntensity, -1, x.w, f);
        }
      },
      light);
}

inline std::vector<ParamInfo> param_layout(const Light<double>& light) {
  std::vector<ParamInfo> out;
  visit_params(light, [&](const std::string& n, ParamKind k, int lobe, const double&) { out.push_back({n, k, lobe}); });
  return out;
}

inline std::vector<double> get_params(const Light<double>& light) {
  std::vector<double> out;
  visit_params(light, [&](const std::string&, ParamKind, int, const double& v) { out.push_back(v); });
  return out;
}

inline void set_params(Light<double>& light, const std::vector<double>& values) {
  std::size_t i = 0;
  visit_params(light, [&](const std::string&, ParamKind, int, double& v) { v = values.at(i++); });
  if (i != values.size()) throw Error(ErrorKind::kInvalidArgument, "params", "parameter count mismatch");
}

template <class U>
SphericalGaussian<U> convert_lobe(const SphericalGaussian<double>& g) {
  return {lift<U>(g.w), U(g.lambda), lift<U>(g.d)};
}

// Structural copy of a light into another scalar type.
template <class U>
Light<U> convert_light(const Light<double>& light) {
  if (const auto* w = std::get_if<WindowLight<double>>(&light)) {
    WindowLight<U> o;
    o.id = w->id;
    o.c = lift<U>(w->c);
    o.x = lift<U>(w->x);
    o.y = lift<U>(w->y);
    o.radiance = {convert_lobe<U>(w->radiance.sun), convert_lobe<U>(w->radiance.sky),
                  convert_lobe<U>(w->radiance.ground)};
    o.visible = w->visible;
    o.enabled = w->enabled;
    o.mask_id = w->mask_id;
    return o;
  }
  if (const auto* b = std::get_if<BoxLamp<double>>(&light)) {
    BoxLamp<U> o;
    o.id = b->id;
    o.c = lift<U>(b->c);
    o.x = lift<U>(b->x);
    o.y = lift<U>(b->y);
    o.z = lift<U>(b->z);
    o.w = lift<U>(b->w);
    o.enabled = b->enabled;
    return o;
  }
  const auto& s = std::get<SurfelLamp<double>>(light);
  SurfelLamp<U> o;
  o.id = s.id;
  o.mask_id = s.mask_id;
  o.center_dir = s.center_dir;
  o.center_dist = U(s.center_dist);
  o.w = lift<U>(s.w);
  o.enabled = s.enabled;
  o.geometry = s.geometry;
  return o;
}

// Lifts a light to Dual<N>; parameter i becomes a variable in slot[i] when
// slot[i] >= 0 and stays constant otherwise.
template <int N>
Light<Dual<N>> seed_light(const Light<double>& light, const std::vector<int>& slot) {
  Light<Dual<N>> out = convert_light<Dual<N>>(light);
  std::size_t i = 0;
  visit_params(out, [&](const std::string&, ParamKind, int, Dual<N>& v) {
    const int s = i < slot.size() ? slot[i] : -1;
    if (s >= 0) v = Dual<N>::variable(v.v, s);
    ++i;
  });
  return out;
}

inline constexpr int kGradSlots = 8;

struct GradResult {
  std::vector<ParamInfo> params;
  std::vector<double> grad;
  double loss = 0.0;
};

// Pathwise gradient of loss(E) with respect to the chosen parameters of one
// light, where E is the per-pixel direct shading rendered with frozen
// samples. `loss` must be callable for double and for Dual<N>; `active`
// selects parameters (all when empty).
template <int N = kGradSlots, class LossFn>
GradResult grad(const Scene& scene, const Light<double>& light, const DirectOptions& opt, LossFn&& loss,
                const std::vector<bool>& active = {}, int threads = 0) {
  check_direct_preconditions(light, opt);
  GradResult out;
  out.params = param_layout(light);
  const std::size_t n = out.params.size();
  out.grad.assign(n, 0.0);
  std::vector<std::size_t> todo;
  for (std::size_t i = 0; i < n; ++i)
    if (active.empty() || active[i]) todo.push_back(i);
  out.loss = value(loss(render_direct_values(scene, light, opt, threads)));
  for (std::size_t start = 0; start < todo.size(); start += N) {
    std::vector<int> slot(n, -1);
    const std::size_t end = std::min(todo.size(), start + N);
    for (std::size_t k = start; k < end; ++k) slot[todo[k]] = static_cast<int>(k - start);
    const Light<Dual<N>> lifted = seed_light<N>(light, slot);
    const Dual<N> L = loss(render_direct_values(scene, lifted, opt, threads));
    for (std::size_t k = start; k < end; ++k) {
      const double g = L.d[k - start];
      if (!std::isfinite(g)) {
        throw Error(ErrorKind::kNonFinite, light_id(light) + "." + out.params[todo[k]].name, "gradient is not finite");
      }
      out.grad[todo[k]] = g;
    }
  }
  return out;
}

// Loss of the light with its parameters replaced by `values`.
template <class LossFn>
double loss_at(const Scene& scene, const Light<double>& light, const std::vector<double>& values,
               const DirectOptions& opt, LossFn&& loss, int threads = 0) {
  Light<double> l = light;
  set_params(l, values);
  return loss(render_direct_values(scene, l, opt, threads));
}

// Central finite difference along `direction` in parameter space.
template <class LossFn>
double directional_fd(const Scene& scene, const Light<double>& light, const std::vector<double>& direction,
                      const DirectOptions& opt, LossFn&& loss, double step = 1e-4, int threads = 0) {
  const std::vector<double> base = get_params(light);
  std::vector<double> plus = base, minus = base;
  for (std::size_t i = 0; i < base.size(); ++i) {
    plus[i] += step * direction[i];
    minus[i] -= step * direction[i];
  }
  return (loss_at(scene, light, plus, opt, loss, threads) - loss_at(scene, light, minus, opt, loss, threads)) /
         (2.0 * step);
}

template <class LossFn>
std::vector<double> finite_difference_grad(const Scene& scene, const Light<double>& light, const DirectOptions& opt,
                                           LossFn&& loss, double step = 1e-4, int threads = 0) {
  const std::size_t n = get_params(light).size();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> e(n, 0.0);
    e[i] = 1.0;
    out[i] = directional_fd(scene, light, e, opt, loss, step, threads);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Optimization charts: intensities and bandwidths move in log space, the rest
// linearly. project_light restores the constraints after a step.
// ---------------------------------------------------------------------------

inline constexpr double kLogFloor = 1e-8;

inline bool log_chart(ParamKind k) { return k == ParamKind::kIntensity || k == ParamKind::kBandwidth; }

inline std::vector<double> to_chart(const std::vector<ParamInfo>& layout, const std::vector<double>& v) {
  std::vector<double> z(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) z[i] = log_chart(layout[i].kind) ? std::log(std::max(v[i], kLogFloor)) : v[i];
  return z;
}

inline std::vector<double> from_chart(const std::vector<ParamInfo>& layout, const std::vector<double>& z) {
  std::vector<double> v(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) v[i] = log_chart(layout[i].kind) ? std::exp(z[i]) : z[i];
  return v;
}

// d value / d chart coordinate.
inline double chart_slope(const ParamInfo& p, double v) { return log_chart(p.kind) ? v : 1.0; }

inline Vec3d orthogonalize(const Vec3d& a, const Vec3d& ref) {
  const Vec3d u = normalize(ref);
  const Vec3d r = a - u * dot(a, u);
  const double len = length(r);
  return len > 0.0 ? r * (length(a) / len) : a;
}

inline void project_light(Light<double>& light) {
  if (auto* w = std::get_if<WindowLight<double>>(&light)) {
    w->y = orthogonalize(w->y, w->x);
    for (int k = 0; k < 3; ++k) {
      auto& g = w->radiance.lobe(k);
      const Lobe lobe = static_cast<Lobe>(k);
      g.lambda = std::clamp(g.lambda, std::max(bandwidth_min(lobe), kLogFloor), bandwidth_max(lobe));
      const double n = length(g.d);
      if (n > 0.0) g.d = g.d / n;
      for (int c = 0; c < 3; ++c) g.w[c] = std::max(g.w[c], 0.0);
    }
  } else if (auto* b = std::get_if<BoxLamp<double>>(&light)) {
    b->y = orthogonalize(b->y, b->x);
    b->z = orthogonalize(orthogonalize(b->z, b->x), b->y);
    for (int c = 0; c < 3; ++c) b->w[c] = std::max(b->w[c], 0.0);
  } else {
    auto& s = std::get<SurfelLamp<double>>(light);
    s.center_dist = std::max(s.center_dist, 1e-3);
    for (int c = 0; c < 3; ++c) s.w[c] = std::max(s.w[c], 0.0);
  }
}

}  // namespace lumiedit
