#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lumiedit/depth_mesh.hpp"
#include "lumiedit/direct.hpp"
#include "lumiedit/indirect.hpp"
#include "lumiedit/scene.hpp"
#include "lumiedit/shadow.hpp"

namespace lumiedit {

struct RenderConfig {
  DirectOptions direct;  // spp, seed, window strategy
  bool shadows = true;
  bool inpaint = true;
  bool indirect = true;
  int shadow_spp = 16;
  int gather_samples = 32;
  MeshOptions mesh;
  int threads = 0;

  std::uint64_t seed() const { return direct.seed; }
};

// Parses "direct,shadow,indirect"; direct is always rendered.
inline void set_components(RenderConfig& cfg, const std::string& list) {
  cfg.shadows = cfg.indirect = false;
  std::size_t start = 0;
  while (start <= list.size()) {
    const std::size_t end = std::min(list.find(',', start), list.size());
    const std::string item = list.substr(start, end - start);
    if (item == "shadow") {
      cfg.shadows = true;
    } else if (item == "indirect") {
      cfg.indirect = true;
    } else if (item != "direct" && !item.empty()) {
      throw Error(ErrorKind::kInvalidArgument, "components", "unknown component '" + item + "'");
    }
    start = end + 1;
  }
}

inline std::string components_string(const RenderConfig& cfg) {
  std::string s = "direct";
  if (cfg.shadows) s += ",shadow";
  if (cfg.indirect) s += ",indirect";
  return s;
}

struct ShadingSet {
  std::vector<std::string> ids;  // enabled lights, scene order
  std::vector<Raster> E_j;       // unshadowed direct shading per light
  std::vector<Raster> S_j;       // shadow per light (1 when shadows are off)
  std::vector<int> N_j;          // samples per pixel per light
  Raster M_S;
  Raster E_d, E_ind, E;
  std::uint64_t seed = 0;
  int spp = 0;
  nlohmann::json timings = nlohmann::json::object();
};

// E_d = sum_j E_j S_j, accumulated in light order in double precision.
inline Raster sum_shadowed(const std::vector<Raster>& E_j, const std::vector<Raster>& S_j, int width, int height) {
  Raster out(width, height, 3);
  std::vector<double> acc(out.size(), 0.0);
  for (std::size_t j = 0; j < E_j.size(); ++j)
    for (std::size_t p = 0; p < out.pixel_count(); ++p) {
      const double s = S_j[j].data()[p];
      for (int ch = 0; ch < 3; ++ch) acc[p * 3 + ch] += static_cast<double>(E_j[j].data()[p * 3 + ch]) * s;
    }
  for (std::size_t i = 0; i < acc.size(); ++i) out.data()[i] = static_cast<float>(acc[i]);
  return out;
}

inline Raster add_rasters(const Raster& a, const Raster& b) {
  require_same_shape(a, b, "raster");
  Raster out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] = a.data()[i] + b.data()[i];
  return out;
}

// Diffuse re-render min(E A, 1), clamped below at 0.
inline Raster ldr_image(const Raster& E, const Raster& albedo) {
  require_same_shape(E, albedo, "E");
  Raster out = E;
  for (std::size_t i = 0; i < out.size(); ++i)
    out.data()[i] = std::clamp(E.data()[i] * albedo.data()[i], 0.0f, 1.0f);
  return out;
}

struct Composite {
  Raster E;
  Raster ldr;
};

inline Composite compose_and_rerender(const Scene& scene, const ShadingSet& set) {
  return {set.E, ldr_image(set.E, scene.albedo)};
}

inline ShadingSet render_scene(const Scene& scene, const RenderConfig& cfg) {
  using clock = std::chrono::steady_clock;
  const auto ms = [](clock::time_point a, clock::time_point b) {
    return std::chrono::duration<double, std::milli>(b - a).count();
  };
  const int W = scene.camera.width, H = scene.camera.height;
  ShadingSet set;
  set.seed = cfg.seed();
  set.spp = cfg.direct.spp;
  set.M_S = Raster(W, H, 1, 0.0f);

  std::optional<DepthMesh> mesh;
  auto t0 = clock::now();
  if (cfg.shadows || cfg.indirect) {
    mesh = build_depth_mesh(scene.camera, scene.depth, cfg.mesh);
    set.M_S = mesh->boundary;
  }
  auto t1 = clock::now();
  set.timings["mesh_ms"] = ms(t0, t1);

  double direct_ms = 0.0, shadow_ms = 0.0;
  for (const auto& light : scene.lights) {
    if (!light_enabled(light)) continue;
    const auto a = clock::now();
    set.ids.push_back(light_id(light));
    set.E_j.push_back(render_direct(scene, light, cfg.direct, cfg.threads));
    const bool two = std::holds_alternative<WindowLight<double>>(light) && cfg.direct.strategy == Strategy::kMis;
    set.N_j.push_back(cfg.direct.spp * (two ? 2 : 1));
    const auto b = clock::now();
    if (cfg.shadows) {
      ShadowOptions so;
      so.spp = cfg.shadow_spp;
      so.seed = cfg.seed();
      Raster S = shadow_raster(scene, *mesh, light, so, cfg.threads);
      if (cfg.inpaint) S = inpaint_shadow(S, mesh->boundary, scene.depth, scene.normal);
      set.S_j.push_back(std::move(S));
    } else {
      set.S_j.emplace_back(W, H, 1, 1.0f);
    }
    direct_ms += ms(a, b);
    shadow_ms += ms(b, clock::now());
  }
  set.timings["direct_ms"] = direct_ms;
  set.timings["shadow_ms"] = shadow_ms;

  set.E_d = sum_shadowed(set.E_j, set.S_j, W, H);
  const auto t2 = clock::now();
  if (cfg.indirect) {
    GatherOptions go;
    go.samples = cfg.gather_samples;
    go.seed = cfg.seed();
    set.E_ind = indirect_one_bounce(scene, &*mesh, set.E_d, go, cfg.threads);
  } else {
    set.E_ind = Raster(W, H, 3, 0.0f);
  }
  set.timings["indirect_ms"] = ms(t2, clock::now());
  set.E = add_rasters(set.E_d, set.E_ind);
  return set;
}

inline nlohmann::json render_manifest(const ShadingSet& set, const RenderConfig& cfg) {
  nlohmann::json lights = nlohmann::json::array();
  for (std::size_t j = 0; j < set.ids.size(); ++j) lights.push_back({{"id", set.ids[j]}, {"N_j", set.N_j[j]}});
  return {{"seed", set.seed},
          {"spp", set.spp},
          {"strategy", to_string(cfg.direct.strategy)},
          {"components", components_string(cfg)},
          {"shadow_spp", cfg.shadows ? cfg.shadow_spp : 0},
          {"gather_samples", cfg.indirect ? cfg.gather_samples : 0},
          {"indirect_model", "one_bounce_gather_surrogate"},
          {"shadow_model", cfg.inpaint ? "depth_mesh_with_inpainting" : "depth_mesh"},
          {"lights", lights},
          {"timings", set.timings}};
}

}  // namespace lumiedit
