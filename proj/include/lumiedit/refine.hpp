#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <vector>

#include "lumiedit/adam.hpp"
#include "lumiedit/compose.hpp"
#include "lumiedit/grad.hpp"

namespace lumiedit {

struct RefineConfig {
  OptimConfig optim;
  RenderConfig render;  // components and surrogate settings; render.seed() keys shadows and the gather
  bool unfreeze_sun = false;
  bool optimize_geometry = true;
  double geometry_lr_scale = 0.1;
  double direction_lr_scale = 0.5;
  int shadow_refresh = 0;  // recompute shadows every n iterations; 0 keeps the initial ones

  RefineConfig() {
    optim.lr = 0.02;
    optim.max_iters = 200;
  }
};

struct RefineResult {
  std::vector<Light<double>> lights;  // best parameters, scene order
  std::vector<double> history;        // loss per evaluated iteration
  double initial_loss = 0.0;
  double best_loss = 0.0;
  int best_iteration = 0;
};

namespace detail {

struct RefineVar {
  std::size_t light;  // index into scene lights
  std::size_t param;  // index into the light's parameter layout
  ParamInfo info;
};

inline bool is_geometry(ParamKind k) {
  return k == ParamKind::kPosition || k == ParamKind::kAxis || k == ParamKind::kDistance;
}

}  // namespace detail

// Evaluates the re-rendering loss mean((min(E A, 1) - I)^2) and, on request,
// its gradient with respect to the selected light parameters. Shadows and
// the gather kernel are constants of this function.
class RenderLoss {
 public:
  RenderLoss(const Scene& scene, const Raster& image, const std::vector<Raster>& shadows,
             const GatherKernel* kernel, const DirectOptions& opt, int threads)
      : scene_(scene), image_(image), shadows_(shadows), kernel_(kernel), opt_(opt), threads_(threads) {}

  struct Result {
    double loss = 0.0;
    std::size_t unsaturated = 0;  // pixel-channels with E A < 1
    std::vector<std::vector<double>> grad;  // per enabled light, per parameter
  };

  // `lights` are the enabled lights matching `shadows`; `active[j][i]`
  // selects parameters to differentiate.
  Result evaluate(const std::vector<Light<double>>& lights, const std::vector<std::vector<bool>>* active) const {
    const std::size_t P = static_cast<std::size_t>(scene_.camera.width) * scene_.camera.height;
    const std::size_t n = P * 3;
    std::vector<double> E_d(n, 0.0);
    for (std::size_t j = 0; j < lights.size(); ++j) {
      const auto Ej = render_direct_values(scene_, lights[j], opt_, threads_);
      for (std::size_t p = 0; p < P; ++p)
        for (int ch = 0; ch < 3; ++ch) E_d[p * 3 + ch] += Ej[p][ch] * shadows_[j].data()[p];
    }
    std::vector<double> E = E_d;
    if (kernel_) {
      const auto ind = apply_gather(*kernel_, scene_.albedo, E_d);
      for (std::size_t i = 0; i < n; ++i) E[i] += ind[i];
    }
    Result r;
    std::vector<double> adj(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const double a = scene_.albedo.data()[i];
      const double ea = E[i] * a;
      const double R = std::min(ea, 1.0);
      const double d = R - image_.data()[i];
      r.loss += d * d;
      if (ea < 1.0) {
        ++r.unsaturated;
        adj[i] = 2.0 * d * a / static_cast<double>(n);
      }
    }
    r.loss /= static_cast<double>(n);
    if (!active) return r;

    std::vector<double> adj_d = adj;
    if (kernel_) {
      const auto back = apply_gather_transpose(*kernel_, scene_.albedo, adj);
      for (std::size_t i = 0; i < n; ++i) adj_d[i] += back[i];
    }
    r.grad.resize(lights.size());
    for (std::size_t j = 0; j < lights.size(); ++j) {
      std::vector<double> adj_j(n);
      for (std::size_t p = 0; p < P; ++p)
        for (int ch = 0; ch < 3; ++ch) adj_j[p * 3 + ch] = adj_d[p * 3 + ch] * shadows_[j].data()[p];
      const auto contract = [&adj_j](const auto& Ej) {
        using T = std::decay_t<decltype(Ej[0].x)>;
        T acc(0.0);
        for (std::size_t p = 0; p < Ej.size(); ++p)
          for (int ch = 0; ch < 3; ++ch)
            if (adj_j[p * 3 + ch] != 0.0) acc += Ej[p][ch] * adj_j[p * 3 + ch];
        return acc;
      };
      const auto& act = (*active)[j];
      if (std::none_of(act.begin(), act.end(), [](bool b) { return b; })) {
        r.grad[j].assign(act.size(), 0.0);
        continue;
      }
      r.grad[j] = grad<16>(scene_, lights[j], opt_, contract, act, threads_).grad;
    }
    return r;
  }

 private:
  const Scene& scene_;
  const Raster& image_;
  const std::vector<Raster>& shadows_;
  const GatherKernel* kernel_;
  DirectOptions opt_;
  int threads_;
};

// Refines enabled lights by descending the clamped re-rendering loss against
// an input image, keeping the best parameters seen.
inline RefineResult refine_lights(const Scene& scene, const Raster& image, const RefineConfig& cfg,
                                  const std::function<void(int, double)>& progress = {}) {
  cfg.optim.validate();
  if (image.channels() != 3 || image.width() != scene.camera.width || image.height() != scene.camera.height) {
    throw Error(ErrorKind::kDimensionMismatch, "image", "input image must be RGB and match the camera");
  }
  for (float v : image.data())
    if (!(v >= 0.0f && v <= 1.0f)) throw Error(ErrorKind::kOutOfRange, "image", "input image must lie in [0, 1]");
  // An all-white target is reproduced by any light bright enough to clip, so
  // it carries no information about the parameters.
  if (std::all_of(image.data().begin(), image.data().end(), [](float v) { return v >= 1.0f; })) {
    throw Error(ErrorKind::kSaturated, "image", "input image is saturated at every pixel");
  }

  std::vector<std::size_t> enabled;
  for (std::size_t i = 0; i < scene.lights.size(); ++i)
    if (light_enabled(scene.lights[i])) enabled.push_back(i);
  if (enabled.empty()) throw Error(ErrorKind::kInvalidArgument, "lights", "no enabled lights to refine");

  const RenderConfig& rc = cfg.render;
  std::optional<DepthMesh> mesh;
  if (rc.shadows || rc.indirect) mesh = build_depth_mesh(scene.camera, scene.depth, rc.mesh);
  std::optional<GatherKernel> kernel;
  if (rc.indirect) {
    GatherOptions go;
    go.samples = rc.gather_samples;
    go.seed = rc.seed();
    kernel = build_gather_kernel(scene, &*mesh, go, rc.threads);
  }

  std::vector<Light<double>> lights;
  for (auto i : enabled) lights.push_back(scene.lights[i]);
  const int W = scene.camera.width, H = scene.camera.height;
  std::vector<Raster> shadows(lights.size(), Raster(W, H, 1, 1.0f));
  const auto refresh_shadows = [&] {
    if (!rc.shadows) return;
    ShadowOptions so;
    so.spp = rc.shadow_spp;
    so.seed = rc.seed();
    for (std::size_t j = 0; j < lights.size(); ++j) {
      Raster S = shadow_raster(scene, *mesh, lights[j], so, rc.threads);
      shadows[j] = rc.inpaint ? inpaint_shadow(S, mesh->boundary, scene.depth, scene.normal) : S;
    }
  };
  refresh_shadows();

  // Free variables and their charts.
  std::vector<std::vector<ParamInfo>> layouts;
  std::vector<std::vector<bool>> active;
  std::vector<detail::RefineVar> vars;
  for (std::size_t j = 0; j < lights.size(); ++j) {
    layouts.push_back(param_layout(lights[j]));
    active.emplace_back(layouts[j].size(), false);
    for (std::size_t i = 0; i < layouts[j].size(); ++i) {
      const auto& p = layouts[j][i];
      bool on = true;
      if (detail::is_geometry(p.kind) && !cfg.optimize_geometry) on = false;
      if (p.lobe == 0 && p.kind == ParamKind::kDirection && !cfg.unfreeze_sun) on = false;
      active[j][i] = on;
      if (on) vars.push_back({j, i, p});
    }
  }
  const auto gather_z = [&] {
    std::vector<double> z;
    for (const auto& v : vars) {
      const double x = get_params(lights[v.light])[v.param];
      z.push_back(log_chart(v.info.kind) ? std::log(std::max(x, kLogFloor)) : x);
    }
    return z;
  };
  const auto scatter_z = [&](const std::vector<double>& z) {
    std::vector<std::vector<double>> values;
    for (const auto& l : lights) values.push_back(get_params(l));
    for (std::size_t k = 0; k < vars.size(); ++k)
      values[vars[k].light][vars[k].param] = log_chart(vars[k].info.kind) ? std::exp(z[k]) : z[k];
    for (std::size_t j = 0; j < lights.size(); ++j) {
      set_params(lights[j], values[j]);
      project_light(lights[j]);
    }
  };

  Adam adam(vars.size(), cfg.optim);
  for (std::size_t k = 0; k < vars.size(); ++k) {
    if (detail::is_geometry(vars[k].info.kind)) adam.set_lr(k, cfg.optim.lr * cfg.geometry_lr_scale);
    if (vars[k].info.kind == ParamKind::kDirection) adam.set_lr(k, cfg.optim.lr * cfg.direction_lr_scale);
  }

  RefineResult out;
  ProgressMonitor monitor(cfg.optim);
  std::vector<Light<double>> best = lights;
  std::vector<double> z = gather_z();
  for (int it = 0; it <= cfg.optim.max_iters; ++it) {
    if (cfg.shadow_refresh > 0 && it > 0 && it % cfg.shadow_refresh == 0) refresh_shadows();
    DirectOptions opt = rc.direct;
    opt.spp = cfg.optim.spp;
    opt.seed = cfg.optim.iteration_seed(it);
    const RenderLoss loss(scene, image, shadows, kernel ? &*kernel : nullptr, opt, rc.threads);
    const bool last = it == cfg.optim.max_iters;
    const auto r = loss.evaluate(lights, last ? nullptr : &active);
    if (it == 0) {
      if (r.unsaturated == 0) {
        throw Error(ErrorKind::kSaturated, "image",
                    "min(E A, 1) is saturated at every pixel; the loss has zero gradient");
      }
      out.initial_loss = r.loss;
    }
    out.history.push_back(r.loss);
    if (progress) progress(it, r.loss);
    if (monitor.record(r.loss)) {
      best = lights;
      out.best_iteration = it;
    }
    if (last || monitor.plateaued()) break;
    std::vector<double> gz(vars.size());
    for (std::size_t k = 0; k < vars.size(); ++k) {
      const double x = get_params(lights[vars[k].light])[vars[k].param];
      gz[k] = r.grad[vars[k].light][vars[k].param] * chart_slope(vars[k].info, x);
    }
    adam.step(z, gz);
    scatter_z(z);
    z = gather_z();
  }
  out.best_loss = monitor.best();
  out.lights = scene.lights;
  for (std::size_t j = 0; j < enabled.size(); ++j) out.lights[enabled[j]] = best[j];
  return out;
}

}  // namespace lumiedit
