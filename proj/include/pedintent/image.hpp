#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "pedintent/common.hpp"
#include "pedintent/geometry.hpp"

namespace pedintent {

// 8-bit RGB raster, row-major, channel innermost.
struct Image {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> pixels;  // height * width * 3

  Image() = default;
  Image(int h, int w, std::uint8_t fill = 0)
      : height(h), width(w), pixels(static_cast<std::size_t>(h) * w * 3, fill) {
    if (h < 1 || w < 1) throw ValidationError("Image: dims must be >= 1");
  }

  std::uint8_t& at(int y, int x, int c) {
    return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + c];
  }
  std::uint8_t at(int y, int x, int c) const {
    return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + c];
  }
};

// One video frame: strictly increasing index within a sequence plus pixels.
struct Frame {
  int index = 0;
  Image image;
};

namespace detail {

inline double sample_bilinear(const Image& img, double y, double x, int c) {
  y = std::clamp(y, 0.0, static_cast<double>(img.height - 1));
  x = std::clamp(x, 0.0, static_cast<double>(img.width - 1));
  const int y0 = static_cast<int>(std::floor(y));
  const int x0 = static_cast<int>(std::floor(x));
  const int y1 = std::min(y0 + 1, img.height - 1);
  const int x1 = std::min(x0 + 1, img.width - 1);
  const double fy = y - y0;
  const double fx = x - x0;
  const double top = (1.0 - fx) * img.at(y0, x0, c) + fx * img.at(y0, x1, c);
  const double bottom = (1.0 - fx) * img.at(y1, x0, c) + fx * img.at(y1, x1, c);
  return (1.0 - fy) * top + fy * bottom;
}

}  // namespace detail

// Clamps the box to the frame and resamples the region to out_h x out_w with
// bilinear interpolation (half-pixel sample centers, so an axis-aligned
// integer box of the output size copies bytes exactly). A box entirely
// outside the frame is an error.
inline Image crop_and_resize(const Image& frame, const BBox& box, int out_h = 100,
                             int out_w = 100) {
  if (out_h < 1 || out_w < 1) throw ValidationError("crop_and_resize: bad output size");
  const double x0 = std::max(box.x_min, 0.0);
  const double y0 = std::max(box.y_min, 0.0);
  const double x1 = std::min(box.x_max, static_cast<double>(frame.width));
  const double y1 = std::min(box.y_max, static_cast<double>(frame.height));
  if (!(x1 > x0 && y1 > y0)) {
    throw ValidationError("crop_and_resize: box entirely outside frame");
  }
  const double sx = (x1 - x0) / out_w;
  const double sy = (y1 - y0) / out_h;

  Image out(out_h, out_w);
  for (int i = 0; i < out_h; ++i) {
    const double y = y0 + (i + 0.5) * sy - 0.5;
    for (int j = 0; j < out_w; ++j) {
      const double x = x0 + (j + 0.5) * sx - 0.5;
      for (int c = 0; c < 3; ++c) {
        const double v = detail::sample_bilinear(frame, y, x, c);
        out.at(i, j, c) =
            static_cast<std::uint8_t>(std::clamp(std::floor(v + 0.5), 0.0, 255.0));
      }
    }
  }
  return out;
}

// Whole-image bilinear resize (used to feed reduced-size model inputs).
inline Image resize(const Image& img, int out_h, int out_w) {
  return crop_and_resize(img, BBox(0, 0, img.width, img.height), out_h, out_w);
}

}  // namespace pedintent
