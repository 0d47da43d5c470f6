#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mrprime/grid.hpp"
#include "mrprime/phantom.hpp"

namespace mrprime {

/// Minimal PNG container: 8-bit grayscale or RGB, zlib-compressed.
void write_png_gray8(const std::string& path, int H, int W, const std::vector<std::uint8_t>& px);
void write_png_rgb8(const std::string& path, int H, int W, const std::vector<std::uint8_t>& rgb);

struct PngData {
  int height = 0;
  int width = 0;
  int channels = 0; // 1 = gray, 3 = rgb
  std::vector<std::uint8_t> px;
};
PngData read_png(const std::string& path);

/// Min-max normalize to 8-bit (constant images map to all zeros).
std::vector<std::uint8_t> normalize_to_gray8(const Image& img);

/// Grayscale export; with boxes, draws 1-px red outlines and writes RGB.
void export_png(const Image& img, const std::string& path, const std::vector<BBox>& boxes = {});

/// Side-by-side panel of equally sized tiles with 2-px white separators;
/// red box outlines are drawn on every tile.
void export_panel_png(const std::vector<Image>& tiles, const std::string& path,
                      const std::vector<BBox>& boxes = {});

} // namespace mrprime
