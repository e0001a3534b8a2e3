#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "lumiedit/error.hpp"
#include "lumiedit/math.hpp"

namespace lumiedit {

// Row-major H x W x C float image. Pixel (row 0, col 0) is the top-left.
class Raster {
 public:
  Raster() = default;
  Raster(int width, int height, int channels, float fill = 0.0f)
      : width_(width), height_(height), channels_(channels),
        data_(static_cast<std::size_t>(width) * height * channels, fill) {
    if (width < 1 || height < 1 || (channels != 1 && channels != 3)) {
      throw Error(ErrorKind::kInvalidArgument, "raster", "invalid raster shape");
    }
  }

  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return channels_; }
  std::size_t pixel_count() const { return static_cast<std::size_t>(width_) * height_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  float& at(int row, int col, int ch = 0) { return data_[index(row, col, ch)]; }
  float at(int row, int col, int ch = 0) const { return data_[index(row, col, ch)]; }

  std::size_t index(int row, int col, int ch = 0) const {
    return (static_cast<std::size_t>(row) * width_ + col) * channels_ + ch;
  }

  Vec3d rgb(int row, int col) const {
    if (channels_ == 1) {
      const double v = at(row, col);
      return {v, v, v};
    }
    return {at(row, col, 0), at(row, col, 1), at(row, col, 2)};
  }
  void set_rgb(int row, int col, const Vec3d& c) {
    if (channels_ == 1) {
      at(row, col) = static_cast<float>(c.x);
      return;
    }
    at(row, col, 0) = static_cast<float>(c.x);
    at(row, col, 1) = static_cast<float>(c.y);
    at(row, col, 2) = static_cast<float>(c.z);
  }

  std::vector<float>& data() { return data_; }
  const std::vector<float>& data() const { return data_; }

  bool same_shape(const Raster& o) const {
    return width_ == o.width_ && height_ == o.height_ && channels_ == o.channels_;
  }
  bool same_size(const Raster& o) const { return width_ == o.width_ && height_ == o.height_; }

  bool all_finite() const {
    for (float v : data_) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  }

  double mean() const {
    double s = 0.0;
    for (float v : data_) s += v;
    return data_.empty() ? 0.0 : s / static_cast<double>(data_.size());
  }

  friend bool operator==(const Raster& a, const Raster& b) {
    return a.same_shape(b) && a.data_ == b.data_;
  }

 private:
  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::vector<float> data_;
};

inline void require_same_shape(const Raster& a, const Raster& b, const std::string& field) {
  if (!a.same_shape(b)) {
    throw Error(ErrorKind::kDimensionMismatch, field,
                std::to_string(a.width()) + "x" + std::to_string(a.height()) + "x" +
                    std::to_string(a.channels()) + " vs " + std::to_string(b.width()) + "x" +
                    std::to_string(b.height()) + "x" + std::to_string(b.channels()));
  }
}

}  // namespace lumiedit
