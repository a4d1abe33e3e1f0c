#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace nerfpoison {

// H x W x 3 linear color values in [0,1], row-major, channel-interleaved.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<double> data;

  Image() = default;
  Image(int w, int h, double fill = 0.0)
      : width(w), height(h), data(static_cast<size_t>(w) * h * 3, fill) {
    if (w < 1 || h < 1) throw std::invalid_argument("Image: dimensions must be >= 1");
  }

  double& at(int x, int y, int c) { return data[(static_cast<size_t>(y) * width + x) * 3 + c]; }
  double at(int x, int y, int c) const {
    return data[(static_cast<size_t>(y) * width + x) * 3 + c];
  }

  size_t pixel_count() const { return static_cast<size_t>(width) * height; }
};

// H x W x 2 per-pixel displacements (du, dv) in pixel units.
struct FlowField {
  int width = 0;
  int height = 0;
  std::vector<double> data;

  FlowField() = default;
  FlowField(int w, int h, double fill = 0.0)
      : width(w), height(h), data(static_cast<size_t>(w) * h * 2, fill) {
    if (w < 1 || h < 1) throw std::invalid_argument("FlowField: dimensions must be >= 1");
  }

  double& du(int x, int y) { return data[(static_cast<size_t>(y) * width + x) * 2]; }
  double du(int x, int y) const { return data[(static_cast<size_t>(y) * width + x) * 2]; }
  double& dv(int x, int y) { return data[(static_cast<size_t>(y) * width + x) * 2 + 1]; }
  double dv(int x, int y) const { return data[(static_cast<size_t>(y) * width + x) * 2 + 1]; }

  double max_abs() const {
    double m = 0.0;
    for (double v : data) m = std::max(m, std::abs(v));
    return m;
  }
};

}  // namespace nerfpoison
