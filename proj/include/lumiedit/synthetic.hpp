#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "lumiedit/scene.hpp"

// Procedural planar scenes for samples and tests.
namespace lumiedit::synthetic {

// Planar surface, unbounded when `half_u`/`half_v` are infinite. `n` faces
// the camera.
struct Surface {
  Vec3d c, n;
  Vec3d u{1, 0, 0}, v{0, 0, 1};
  double half_u = std::numeric_limits<double>::infinity();
  double half_v = std::numeric_limits<double>::infinity();
  Vec3d albedo{0.5, 0.5, 0.5};
};

// Ray casts the camera through a list of surfaces; every pixel must hit one.
inline Scene raycast_scene(int width, int height, double fov, const std::vector<Surface>& surfaces) {
  Scene s;
  s.camera = {fov, width, height};
  s.depth = Raster(width, height, 1);
  s.normal = Raster(width, height, 3);
  s.albedo = Raster(width, height, 3);
  s.roughness = Raster(width, height, 1, 1.0f);
  for (int r = 0; r < height; ++r)
    for (int c = 0; c < width; ++c) {
      const Vec3d ray = s.camera.ray(r, c);
      double best = std::numeric_limits<double>::infinity();
      const Surface* hit = nullptr;
      for (const auto& f : surfaces) {
        const double denom = dot(ray, f.n);
        if (!(denom < 0.0)) continue;
        const double t = dot(f.c, f.n) / denom;
        if (!(t > 0.0) || t >= best) continue;
        const Vec3d h = ray * t - f.c;
        if (std::abs(dot(h, f.u)) > f.half_u || std::abs(dot(h, f.v)) > f.half_v) continue;
        best = t;
        hit = &f;
      }
      if (!hit) throw Error(ErrorKind::kInvalidArgument, "surfaces", "pixel ray escapes the scene");
      s.depth.at(r, c) = static_cast<float>(best);
      for (int ch = 0; ch < 3; ++ch) {
        s.normal.at(r, c, ch) = static_cast<float>(hit->n[ch]);
        s.albedo.at(r, c, ch) = static_cast<float>(hit->albedo[ch]);
      }
    }
  return s;
}

// Closed box room around the camera: x in [-2, 2], y in [-1.5, 1.5],
// back wall at z = -6. Open behind the camera, which only sees -z.
inline std::vector<Surface> room_surfaces() {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  return {
      {{0, -1.5, 0}, {0, 1, 0}, {1, 0, 0}, {0, 0, 1}, kInf, kInf, {0.6, 0.55, 0.5}},
      {{0, 1.5, 0}, {0, -1, 0}, {1, 0, 0}, {0, 0, 1}, kInf, kInf, {0.8, 0.8, 0.8}},
      {{-2, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}, kInf, kInf, {0.5, 0.6, 0.5}},
      {{2, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, 0, 1}, kInf, kInf, {0.5, 0.5, 0.6}},
      {{0, 0, -6}, {0, 0, 1}, {1, 0, 0}, {0, 1, 0}, kInf, kInf, {0.7, 0.7, 0.7}},
  };
}

inline Scene room_scene(int width, int height) { return raycast_scene(width, height, kPi / 2.0, room_surfaces()); }

// Window in the left wall with a sun lobe entering from upper left.
inline WindowLight<double> left_window(double sun_lambda = 30.0) {
  WindowLight<double> w;
  w.id = "window";
  w.c = {-2.0, 0.4, -3.0};
  w.x = {0.0, 0.0, 1.6};
  w.y = {0.0, 1.0, 0.0};
  w.radiance.sun = {{8.0, 7.0, 5.5}, sun_lambda, normalize(Vec3d{-1.0, 0.9, 0.25})};
  w.radiance.sky = {{0.6, 0.7, 0.9}, 2.0, normalize(Vec3d{-0.3, 1.0, 0.1})};
  w.radiance.ground = {{0.15, 0.12, 0.1}, 1.5, normalize(Vec3d{-0.2, -1.0, 0.15})};
  return w;
}

// Ceiling box lamp over the middle of the room, emitting downwards.
inline BoxLamp<double> ceiling_lamp(const std::string& id = "lamp", Vec3d c = {0.3, 1.3, -3.2}) {
  BoxLamp<double> b;
  b.id = id;
  b.c = c;
  b.x = {0.4, 0.0, 0.0};
  b.y = {0.0, 0.1, 0.0};
  b.z = {0.0, 0.0, 0.4};
  b.w = {3.0, 2.6, 2.2};
  return b;
}

}  // namespace lumiedit::synthetic
