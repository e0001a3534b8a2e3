#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "lumiedit/adam.hpp"
#include "lumiedit/direct.hpp"
#include "lumiedit/grad.hpp"
#include "lumiedit/scene.hpp"

namespace lumiedit {

struct FitConfig {
  OptimConfig optim;
  DirectOptions direct{Strategy::kMis, MisHeuristic::kBalance, 32, 0};
  double direction_lr_scale = 0.5;
  double init_sun_lambda = 100.0;
  double init_ambient_lambda = 1.0;
  int threads = 0;

  FitConfig() { optim.lr = 0.05; }
};

struct FitResult {
  WindowRadiance<double> radiance;
  std::vector<double> history;  // L1 loss per iteration
  double best_loss = 0.0;
  int best_iteration = 0;
  int iterations = 0;
};

// Frozen per-pixel L1 loss against a fixed target.
struct L1Target {
  const Raster* target;

  template <class T>
  T operator()(const std::vector<Vec3<T>>& E) const {
    using std::abs;
    T acc(0.0);
    for (std::size_t p = 0; p < E.size(); ++p)
      for (int ch = 0; ch < 3; ++ch) acc += abs(E[p][ch] - static_cast<double>(target->data()[p * 3 + ch]));
    return acc / static_cast<double>(E.size() * 3);
  }
};

namespace detail {

// Window parameter indices fitted by fit_window: the sun's intensity and
// bandwidth, and everything of the sky and ground lobes.
inline std::vector<bool> window_fit_mask(const std::vector<ParamInfo>& layout) {
  std::vector<bool> active(layout.size(), false);
  for (std::size_t i = 0; i < layout.size(); ++i) {
    const auto& p = layout[i];
    if (p.lobe < 0) continue;
    active[i] = !(p.lobe == 0 && p.kind == ParamKind::kDirection);
  }
  return active;
}

}  // namespace detail

// Fits window radiance to a target direct-shading raster (no occlusion) with
// the window geometry and the sun direction held fixed.
inline FitResult fit_window(const Scene& scene, const Raster& target, const WindowLight<double>& geometry,
                            const Vec3d& sun_hint, const FitConfig& cfg,
                            const std::function<void(int, double)>& progress = {}) {
  cfg.optim.validate();
  if (target.channels() != 3 || target.width() != scene.camera.width || target.height() != scene.camera.height) {
    throw Error(ErrorKind::kDimensionMismatch, "target", "target must be an RGB raster matching the camera");
  }
  for (float v : target.data())
    if (!(v >= 0.0f) || !std::isfinite(v)) throw Error(ErrorKind::kOutOfRange, "target", "target must be finite and >= 0");
  if (!(length(sun_hint) > 0.0)) throw Error(ErrorKind::kInvalidArgument, "sun_hint", "sun hint must be non-zero");

  WindowLight<double> w = geometry;
  w.enabled = true;
  w.radiance.sun = {{1.0, 1.0, 1.0}, cfg.init_sun_lambda, normalize(sun_hint)};
  w.radiance.sky = {{1.0, 1.0, 1.0}, cfg.init_ambient_lambda, kUp};
  w.radiance.ground = {{1.0, 1.0, 1.0}, cfg.init_ambient_lambda, -kUp};
  Light<double> light = w;

  // Scale the unit-intensity render to the target's mean per channel.
  DirectOptions opt = cfg.direct;
  opt.seed = cfg.optim.iteration_seed(0);
  const auto unit = render_direct_values(scene, light, opt, cfg.threads);
  Vec3d sum_unit{0, 0, 0}, sum_target{0, 0, 0};
  for (std::size_t p = 0; p < unit.size(); ++p) {
    sum_unit += unit[p];
    sum_target += target.rgb(static_cast<int>(p) / target.width(), static_cast<int>(p) % target.width());
  }
  auto& wl = std::get<WindowLight<double>>(light);
  for (int k = 0; k < 3; ++k)
    for (int ch = 0; ch < 3; ++ch) wl.radiance.lobe(k).w[ch] = sum_unit[ch] > 0.0 ? sum_target[ch] / sum_unit[ch] : 0.0;

  const auto layout = param_layout(light);
  const auto active = detail::window_fit_mask(layout);
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < layout.size(); ++i)
    if (active[i]) idx.push_back(i);
  constexpr int kSlots = 18;
  if (idx.size() != static_cast<std::size_t>(kSlots)) {
    throw Error(ErrorKind::kInvalidArgument, "fit", "unexpected window parameter layout");
  }

  std::vector<double> values = get_params(light);
  std::vector<double> z(idx.size());
  {
    const auto full = to_chart(layout, values);
    for (std::size_t k = 0; k < idx.size(); ++k) z[k] = full[idx[k]];
  }
  Adam adam(idx.size(), cfg.optim);
  for (std::size_t k = 0; k < idx.size(); ++k)
    if (layout[idx[k]].kind == ParamKind::kDirection) adam.set_lr(k, cfg.optim.lr * cfg.direction_lr_scale);

  ProgressMonitor monitor(cfg.optim);
  FitResult out;
  std::vector<double> best_values = values;
  const L1Target loss{&target};
  for (int it = 0; it <= cfg.optim.max_iters; ++it) {
    opt.seed = cfg.optim.iteration_seed(it);
    const GradResult g = grad<kSlots>(scene, light, opt, loss, active, cfg.threads);
    out.history.push_back(g.loss);
    if (progress) progress(it, g.loss);
    if (monitor.record(g.loss)) {
      best_values = values;
      out.best_iteration = it;
    }
    out.iterations = it;
    if (it == cfg.optim.max_iters || monitor.plateaued()) break;
    std::vector<double> gz(idx.size());
    for (std::size_t k = 0; k < idx.size(); ++k) gz[k] = g.grad[idx[k]] * chart_slope(layout[idx[k]], values[idx[k]]);
    adam.step(z, gz);
    std::vector<double> full = to_chart(layout, values);
    for (std::size_t k = 0; k < idx.size(); ++k) full[idx[k]] = z[k];
    values = from_chart(layout, full);
    set_params(light, values);
    project_light(light);
    std::get<WindowLight<double>>(light).radiance.sun.d = normalize(sun_hint);
    values = get_params(light);
    const auto projected = to_chart(layout, values);
    for (std::size_t k = 0; k < idx.size(); ++k) z[k] = projected[idx[k]];
  }
  set_params(light, best_values);
  out.radiance = std::get<WindowLight<double>>(light).radiance;
  out.best_loss = monitor.best();
  return out;
}

}  // namespace lumiedit
