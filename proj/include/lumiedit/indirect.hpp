#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "lumiedit/depth_mesh.hpp"
#include "lumiedit/parallel.hpp"
#include "lumiedit/rng.hpp"
#include "lumiedit/scene.hpp"

namespace lumiedit {

// One-bounce screen-space gather. This stands in for a learned indirect
// predictor: E_ind(p) sums diffusely reflected direct light A(q) E_d(q) / pi
// from randomly chosen visible pixels q.
struct GatherOptions {
  int samples = 32;
  std::uint64_t seed = 0;
  bool visibility = true;
  double offset_scale = 1e-3;
};

// E_ind = K E_d with K fixed by geometry and seed, so the same kernel serves
// the forward pass and its transpose.
struct GatherKernel {
  int width = 0, height = 0, samples = 0;
  std::vector<std::uint32_t> source;  // pixel * samples + k -> q
  std::vector<double> weight;         // geometric weight, 0 for rejected samples

  std::size_t pixels() const { return static_cast<std::size_t>(width) * height; }
};

inline GatherKernel build_gather_kernel(const Scene& scene, const DepthMesh* mesh, const GatherOptions& opt,
                                        int threads = 0) {
  if (opt.samples < 1) throw Error(ErrorKind::kInvalidArgument, "gather", "gather samples must be >= 1");
  GatherKernel K;
  K.width = scene.camera.width;
  K.height = scene.camera.height;
  K.samples = opt.samples;
  const std::size_t P = K.pixels();
  K.source.assign(P * opt.samples, 0);
  K.weight.assign(P * opt.samples, 0.0);
  std::vector<Vec3d> pos(P), nrm(P);
  std::vector<double> area(P);
  for (int r = 0; r < K.height; ++r)
    for (int c = 0; c < K.width; ++c) {
      const std::size_t i = static_cast<std::size_t>(r) * K.width + c;
      pos[i] = scene.position(r, c);
      nrm[i] = scene.normal_at(r, c);
      area[i] = pixel_footprint_area(scene.camera, r, c, scene.depth.at(r, c), nrm[i], FootprintModel::kPerspective).area;
    }
  const double offset = opt.offset_scale * scene.depth.mean();
  const double scale = static_cast<double>(P) / opt.samples / kPi;
  parallel_for(K.height, threads, [&](int row) {
    for (int col = 0; col < K.width; ++col) {
      const auto p = static_cast<std::uint32_t>(row * K.width + col);
      const CounterRng rng(opt.seed, p, Stream::kGather);
      for (int k = 0; k < opt.samples; ++k) {
        const std::size_t slot = static_cast<std::size_t>(p) * opt.samples + k;
        const auto q = static_cast<std::uint32_t>(std::min<double>(P - 1, std::floor(rng.uniform(k, 0) * P)));
        K.source[slot] = q;
        if (q == p) continue;
        const Vec3d d = pos[q] - pos[p];
        const double r2 = dot(d, d);
        if (!(r2 > 0.0)) continue;
        const Vec3d l = d / std::sqrt(r2);
        const double cos_p = dot(nrm[p], l), cos_q = -dot(nrm[q], l);
        if (cos_p <= 0.0 || cos_q <= 0.0) continue;
        if (opt.visibility && mesh) {
          const Vec3d o = pos[p] + nrm[p] * offset;
          const Vec3d t = pos[q] + nrm[q] * offset - o;
          const double dist = length(t);
          const bool blocked = mesh->bvh.occluded(o, t / dist, dist * (1.0 - 1e-3), [&](const Triangle& tri) {
            for (auto v : tri.v)
              if (v == p || v == q) return true;
            return false;
          });
          if (blocked) continue;
        }
        // r^2 is floored at the patch area to bound the near-field singularity.
        K.weight[slot] = scale * cos_p * cos_q / std::max(r2, area[q]) * area[q];
      }
    }
  });
  return K;
}

// E_ind(p) = sum_k w_k A(q_k) E_d(q_k).
inline Raster apply_gather(const GatherKernel& K, const Raster& albedo, const Raster& E_d) {
  Raster out(K.width, K.height, 3);
  for (std::size_t p = 0; p < K.pixels(); ++p) {
    double acc[3] = {0.0, 0.0, 0.0};
    for (int k = 0; k < K.samples; ++k) {
      const std::size_t slot = p * K.samples + k;
      const double w = K.weight[slot];
      if (w == 0.0) continue;
      const std::size_t q = K.source[slot];
      for (int ch = 0; ch < 3; ++ch) acc[ch] += w * albedo.data()[q * 3 + ch] * E_d.data()[q * 3 + ch];
    }
    for (int ch = 0; ch < 3; ++ch) out.data()[p * 3 + ch] = static_cast<float>(acc[ch]);
  }
  return out;
}

// Double-precision forward pass on interleaved RGB vectors.
inline std::vector<double> apply_gather(const GatherKernel& K, const Raster& albedo, const std::vector<double>& E_d) {
  std::vector<double> out(K.pixels() * 3, 0.0);
  for (std::size_t p = 0; p < K.pixels(); ++p)
    for (int k = 0; k < K.samples; ++k) {
      const std::size_t slot = p * K.samples + k;
      const double w = K.weight[slot];
      if (w == 0.0) continue;
      const std::size_t q = K.source[slot];
      for (int ch = 0; ch < 3; ++ch) out[p * 3 + ch] += w * albedo.data()[q * 3 + ch] * E_d[q * 3 + ch];
    }
  return out;
}

// Adjoint of apply_gather with respect to E_d.
inline std::vector<double> apply_gather_transpose(const GatherKernel& K, const Raster& albedo,
                                                  const std::vector<double>& adj_ind) {
  std::vector<double> out(K.pixels() * 3, 0.0);
  for (std::size_t p = 0; p < K.pixels(); ++p)
    for (int k = 0; k < K.samples; ++k) {
      const std::size_t slot = p * K.samples + k;
      const double w = K.weight[slot];
      if (w == 0.0) continue;
      const std::size_t q = K.source[slot];
      for (int ch = 0; ch < 3; ++ch) out[q * 3 + ch] += w * albedo.data()[q * 3 + ch] * adj_ind[p * 3 + ch];
    }
  return out;
}

inline Raster indirect_one_bounce(const Scene& scene, const DepthMesh* mesh, const Raster& E_d,
                                  const GatherOptions& opt, int threads = 0) {
  require_same_shape(E_d, scene.albedo, "E_d");
  return apply_gather(build_gather_kernel(scene, mesh, opt, threads), scene.albedo, E_d);
}

}  // namespace lumiedit
