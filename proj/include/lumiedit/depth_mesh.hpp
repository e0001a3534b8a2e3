#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "lumiedit/bvh.hpp"
#include "lumiedit/camera.hpp"
#include "lumiedit/lights.hpp"
#include "lumiedit/raster.hpp"

namespace lumiedit {

struct MeshOptions {
  double tau_rel = 0.05;  // max |log D_a - log D_b| inside a kept triangle
  int dilation = 3;       // boundary mask dilation radius in pixels
};

// Triangulated depth map: one vertex per pixel center, two triangles per
// quad of neighbouring pixel centers. Vertex index = row * width + col.
struct DepthMesh {
  int width = 0, height = 0;
  std::vector<Vec3d> vertices;
  std::vector<Triangle> kept;
  std::vector<Triangle> discarded;
  Raster boundary;  // M_S: pixels incident to a discarded triangle, dilated
  Bvh bvh;
};

inline DepthMesh build_depth_mesh(const CameraIntrinsics& cam, const Raster& depth, const MeshOptions& opt = {}) {
  if (depth.channels() != 1 || depth.width() != cam.width || depth.height() != cam.height) {
    throw Error(ErrorKind::kDimensionMismatch, "depth", "depth raster does not match the camera");
  }
  DepthMesh m;
  m.width = cam.width;
  m.height = cam.height;
  const int W = cam.width, H = cam.height;
  m.vertices.resize(static_cast<std::size_t>(W) * H);
  std::vector<double> logd(m.vertices.size());
  for (int r = 0; r < H; ++r)
    for (int c = 0; c < W; ++c) {
      const std::size_t i = static_cast<std::size_t>(r) * W + c;
      m.vertices[i] = cam.unproject(r, c, depth.at(r, c));
      logd[i] = std::log(static_cast<double>(depth.at(r, c)));
    }
  Raster touched(W, H, 1, 0.0f);
  const auto add = [&](std::uint32_t a, std::uint32_t b, std::uint32_t c) {
    const double spread = std::max({std::abs(logd[a] - logd[b]), std::abs(logd[b] - logd[c]),
                                    std::abs(logd[a] - logd[c])});
    if (spread > opt.tau_rel) {
      m.discarded.push_back({{a, b, c}});
      for (auto v : {a, b, c}) touched.data()[v] = 1.0f;
    } else {
      m.kept.push_back({{a, b, c}});
    }
  };
  for (int r = 0; r + 1 < H; ++r)
    for (int c = 0; c + 1 < W; ++c) {
      const auto i00 = static_cast<std::uint32_t>(r * W + c);
      const auto i01 = i00 + 1;
      const auto i10 = i00 + static_cast<std::uint32_t>(W);
      const auto i11 = i10 + 1;
      add(i00, i10, i11);
      add(i00, i11, i01);
    }
  m.boundary = opt.dilation > 0 ? dilate(touched, opt.dilation) : touched;
  m.bvh = Bvh(m.vertices, m.kept);
  return m;
}

}  // namespace lumiedit
