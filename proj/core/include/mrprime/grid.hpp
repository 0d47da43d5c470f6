#pragma once

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace mrprime {

/// Real-valued H x W raster, row-major.
struct Image {
  int height = 0;
  int width = 0;
  std::vector<double> px;

  Image() = default;
  Image(int h, int w, double fill = 0.0)
      : height(h), width(w), px(checked_size(h, w), fill) {}

  double& at(int y, int x) { return px[static_cast<std::size_t>(y) * width + x]; }
  double at(int y, int x) const { return px[static_cast<std::size_t>(y) * width + x]; }
  std::int64_t numel() const { return static_cast<std::int64_t>(height) * width; }

  static std::size_t checked_size(int h, int w) {
    if (h < 1 || w < 1) throw std::invalid_argument("Image dims must be >= 1");
    return static_cast<std::size_t>(h) * static_cast<std::size_t>(w);
  }
};

/// Complex H x W grid, row-major.
struct ComplexGrid {
  int height = 0;
  int width = 0;
  std::vector<std::complex<double>> v;

  ComplexGrid() = default;
  ComplexGrid(int h, int w, std::complex<double> fill = {0.0, 0.0})
      : height(h), width(w), v(Image::checked_size(h, w), fill) {}

  std::complex<double>& at(int y, int x) {
    return v[static_cast<std::size_t>(y) * width + x];
  }
  const std::complex<double>& at(int y, int x) const {
    return v[static_cast<std::size_t>(y) * width + x];
  }
  std::int64_t numel() const { return static_cast<std::int64_t>(height) * width; }
};

} // namespace mrprime
