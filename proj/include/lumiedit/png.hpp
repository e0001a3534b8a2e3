#pragma once

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "lumiedit/error.hpp"
#include "lumiedit/raster.hpp"

namespace lumiedit {

// 8-bit RGB PNG of a linear raster: clamp to [0,1], encode with gamma 1/2.2.
// Display-only; nothing downstream reads these values back.
inline std::string encode_png(const Raster& linear, double gamma = 2.2) {
  const int w = linear.width(), h = linear.height();
  std::vector<std::uint8_t> rgb(static_cast<std::size_t>(w) * h * 3);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const Vec3d v = linear.rgb(r, c);
      for (int k = 0; k < 3; ++k) {
        const double x = std::clamp(v[k], 0.0, 1.0);
        rgb[(static_cast<std::size_t>(r) * w + c) * 3 + k] =
            static_cast<std::uint8_t>(std::lround(255.0 * std::pow(x, 1.0 / gamma)));
      }
    }
  }

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw Error(ErrorKind::kInvalidArgument, "png", "libpng init failed");
  png_infop info = png_create_info_struct(png);
  std::string out;
  if (!info || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorKind::kInvalidArgument, "png", "libpng encode failed");
  }
  png_set_write_fn(
      png, &out,
      [](png_structp p, png_bytep data, png_size_t len) {
        static_cast<std::string*>(png_get_io_ptr(p))->append(reinterpret_cast<const char*>(data), len);
      },
      [](png_structp) {});
  png_set_IHDR(png, info, w, h, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int r = 0; r < h; ++r) {
    png_write_row(png, rgb.data() + static_cast<std::size_t>(r) * w * 3);
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

}  // namespace lumiedit
