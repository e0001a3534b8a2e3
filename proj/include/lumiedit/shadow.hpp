#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "lumiedit/depth_mesh.hpp"
#include "lumiedit/direct.hpp"
#include "lumiedit/parallel.hpp"
#include "lumiedit/rng.hpp"
#include "lumiedit/scene.hpp"

namespace lumiedit {

struct ShadowOptions {
  int spp = 16;
  std::uint64_t seed = 0;
  double offset_scale = 1e-3;  // ray origin offset = offset_scale * mean depth
};

struct ShadowBuffer {
  Raster S;    // unoccluded fraction, [0, 1]
  Raster M_S;  // occlusion-boundary mask, binary
};

// Pixels whose geometry belongs to the light itself; their triangles never
// shadow that light.
inline std::vector<std::uint8_t> light_self_vertices(const Scene& scene, const Light<double>& light) {
  std::vector<std::uint8_t> out(static_cast<std::size_t>(scene.camera.width) * scene.camera.height, 0);
  const std::string mask_id = light_mask_id(light);
  if (mask_id.empty()) return out;
  const Raster* mask = scene.mask(mask_id);
  if (!mask) return out;
  const Raster grown = dilate(*mask, 1);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = grown.data()[i] > 0.5f;
  return out;
}

inline Raster shadow_raster(const Scene& scene, const DepthMesh& mesh, const Light<double>& light,
                            const ShadowOptions& opt, int threads = 0) {
  if (opt.spp < 1) throw Error(ErrorKind::kInvalidArgument, "shadow_spp", "spp must be >= 1");
  if (!light_enabled(light)) throw Error(ErrorKind::kDisabledLight, light_id(light), "light is disabled");
  const int W = scene.camera.width, H = scene.camera.height;
  Raster S(W, H, 1, 1.0f);
  const double offset = opt.offset_scale * scene.depth.mean();
  const auto self = light_self_vertices(scene, light);
  const std::uint64_t seed = light_seed(opt.seed, light_id(light));
  parallel_for(H, threads, [&](int row) {
    for (int col = 0; col < W; ++col) {
      const auto pixel = static_cast<std::uint32_t>(row * W + col);
      const Vec3d n = scene.normal_at(row, col);
      const Vec3d o = mesh.vertices[pixel] + n * offset;
      const CounterRng rng(seed, pixel, Stream::kShadow);
      const auto skip = [&](const Triangle& t) {
        for (auto v : t.v)
          if (v == pixel || self[v]) return true;
        return false;
      };
      int visible = 0;
      for (int i = 0; i < opt.spp; ++i) {
        const auto s = sample_light_surface(light, rng.symmetric(i, 0), rng.symmetric(i, 1), rng.uniform(i, 2));
        const Vec3d to = s.q - o;
        const double dist = length(to);
        if (dist < kMinDistance) {
          ++visible;
          continue;
        }
        visible += !mesh.bvh.occluded(o, to / dist, dist * (1.0 - 1e-3), skip);
      }
      S.at(row, col) = static_cast<float>(static_cast<double>(visible) / opt.spp);
    }
  });
  return S;
}

struct InpaintOptions {
  double depth_sigma = 0.05;  // log-depth scale of the edge-stopping weight
  double tolerance = 1e-7;
  int max_sweeps = 20000;
  double relaxation = 1.7;
};

// Fills the masked region by edge-aware harmonic interpolation from the
// unmasked pixels. Unmasked pixels are returned unchanged.
inline Raster inpaint_shadow(const Raster& S_init, const Raster& M_S, const Raster& depth, const Raster& normal,
                             const InpaintOptions& opt = {}) {
  if (!S_init.same_size(M_S) || !S_init.same_size(depth) || !S_init.same_size(normal)) {
    throw Error(ErrorKind::kDimensionMismatch, "M_S", "shadow, mask and geometry sizes differ");
  }
  const int W = S_init.width(), H = S_init.height();
  std::vector<std::uint32_t> unknown;
  for (int r = 0; r < H; ++r)
    for (int c = 0; c < W; ++c)
      if (mask_on(M_S, r, c)) unknown.push_back(static_cast<std::uint32_t>(r * W + c));
  Raster S = S_init;
  if (unknown.empty()) return S;
  if (unknown.size() == S.pixel_count()) {
    throw Error(ErrorKind::kDegenerate, "M_S", "boundary mask covers the whole image; nothing to inpaint from");
  }
  struct Link {
    std::uint32_t j;
    double w;
  };
  std::vector<std::array<Link, 4>> links(unknown.size());
  std::vector<int> nlinks(unknown.size(), 0);
  for (std::size_t k = 0; k < unknown.size(); ++k) {
    const int r = static_cast<int>(unknown[k]) / W, c = static_cast<int>(unknown[k]) % W;
    const double li = std::log(static_cast<double>(depth.at(r, c)));
    const Vec3d ni = normal.rgb(r, c);
    const int dr[4] = {-1, 1, 0, 0}, dc[4] = {0, 0, -1, 1};
    for (int e = 0; e < 4; ++e) {
      const int rr = r + dr[e], cc = c + dc[e];
      if (rr < 0 || rr >= H || cc < 0 || cc >= W) continue;
      const double dl = std::abs(std::log(static_cast<double>(depth.at(rr, cc))) - li);
      const double facing = 0.5 + 0.5 * std::clamp(dot(ni, normal.rgb(rr, cc)), -1.0, 1.0);
      links[k][nlinks[k]++] = {static_cast<std::uint32_t>(rr * W + cc), 1e-3 + std::exp(-dl / opt.depth_sigma) * facing};
    }
  }
  std::vector<double> x(S.pixel_count());
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = S.data()[i];
  for (int sweep = 0; sweep < opt.max_sweeps; ++sweep) {
    double change = 0.0;
    for (std::size_t k = 0; k < unknown.size(); ++k) {
      double num = 0.0, den = 0.0;
      for (int e = 0; e < nlinks[k]; ++e) {
        num += links[k][e].w * x[links[k][e].j];
        den += links[k][e].w;
      }
      const double target = num / den;
      const double next = x[unknown[k]] + opt.relaxation * (target - x[unknown[k]]);
      change = std::max(change, std::abs(next - x[unknown[k]]));
      x[unknown[k]] = next;
    }
    if (change < opt.tolerance) break;
  }
  for (auto i : unknown) S.data()[i] = static_cast<float>(std::clamp(x[i], 0.0, 1.0));
  return S;
}

}  // namespace lumiedit
