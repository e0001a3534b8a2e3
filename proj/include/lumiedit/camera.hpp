#pragma once

#include <algorithm>
#include <cmath>

#include "lumiedit/error.hpp"
#include "lumiedit/math.hpp"

namespace lumiedit {

// Pinhole camera at the origin looking down -z, y up. Pixel (row 0, col 0)
// is top-left; pixel centers sit at half-integer offsets. The field of view
// spans the short image axis.
struct CameraIntrinsics {
  double fov_short_axis = kPi / 2.0;  // radians
  int width = 1;
  int height = 1;

  void validate() const {
    if (!(fov_short_axis > 0.0 && fov_short_axis < kPi)) {
      throw Error(ErrorKind::kOutOfRange, "camera.fov_deg", "field of view must lie in (0, 180) degrees");
    }
    if (width < 1 || height < 1) {
      throw Error(ErrorKind::kOutOfRange, "camera", "width and height must be >= 1");
    }
  }

  int short_axis() const { return std::min(width, height); }

  // Side of one pixel on the z = -1 image plane.
  double pixel_pitch() const { return 2.0 * std::tan(0.5 * fov_short_axis) / short_axis(); }

  // Image-plane ray [X, Y, -1] through the pixel center.
  Vec3d ray(double row, double col) const {
    const double s = pixel_pitch();
    return {(col + 0.5 - 0.5 * width) * s, -(row + 0.5 - 0.5 * height) * s, -1.0};
  }

  // Camera-space point at z-depth `depth` through the pixel center.
  Vec3d unproject(double row, double col, double depth) const { return ray(row, col) * depth; }

  struct Projection {
    double row, col, depth;
  };

  // Inverse of unproject; rows/cols are continuous pixel-center coordinates.
  Projection project(const Vec3d& p) const {
    const double depth = -p.z;
    const double s = pixel_pitch();
    const double X = p.x / depth, Y = p.y / depth;
    return {-Y / s + 0.5 * height - 0.5, X / s + 0.5 * width - 0.5, depth};
  }

  bool in_bounds(int row, int col) const { return row >= 0 && row < height && col >= 0 && col < width; }
};

enum class FootprintModel {
  kParaxial,      // (2 D tan(f/2) / S)^2 / max(N.z, eps)
  kPerspective,   // exact for off-axis pixels: (s D)^2 / (N . [-X, -Y, 1])
  kDepthFree,     // (tan(f/2) / H)^2 / max(N.z, eps), no depth scaling
};

struct Footprint {
  double area = 0.0;
  bool clamped = false;  // normal was grazing and the cosine was clamped
};

inline constexpr double kGrazingEpsilon = 1e-3;

inline Footprint pixel_footprint_area(const CameraIntrinsics& cam, int row, int col, double depth,
                                      const Vec3d& normal, FootprintModel model = FootprintModel::kParaxial) {
  if (!cam.in_bounds(row, col)) throw Error(ErrorKind::kOutOfRange, "pixel", "pixel out of bounds");
  double cosine = normal.z;
  double side = cam.pixel_pitch() * depth;
  if (model == FootprintModel::kPerspective) {
    const Vec3d r = cam.ray(row, col);
    cosine = dot(normal, Vec3d{-r.x, -r.y, 1.0});
  } else if (model == FootprintModel::kDepthFree) {
    side = std::tan(0.5 * cam.fov_short_axis) / cam.height;
  }
  Footprint fp;
  if (cosine <= kGrazingEpsilon) {
    fp.clamped = true;
    cosine = kGrazingEpsilon;
  }
  fp.area = side * side / cosine;
  return fp;
}

}  // namespace lumiedit
