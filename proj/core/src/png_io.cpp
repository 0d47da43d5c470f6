#include "mrprime/png_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include <zlib.h>

namespace mrprime {

namespace {

std::uint32_t crc32_of(const std::uint8_t* data, std::size_t n, std::uint32_t seed = 0) {
  return static_cast<std::uint32_t>(
      ::crc32(seed, reinterpret_cast<const Bytef*>(data), static_cast<uInt>(n)));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>((v >> 24) & 0xff));
  out.push_back(static_cast<std::uint8_t>((v >> 16) & 0xff));
  out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xff));
  out.push_back(static_cast<std::uint8_t>(v & 0xff));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  return (static_cast<std::uint32_t>(p[0]) << 24) | (static_cast<std::uint32_t>(p[1]) << 16) |
         (static_cast<std::uint32_t>(p[2]) << 8) | static_cast<std::uint32_t>(p[3]);
}

void append_chunk(std::vector<std::uint8_t>& out, const char type[4],
                  const std::vector<std::uint8_t>& payload) {
  put_u32(out, static_cast<std::uint32_t>(payload.size()));
  std::vector<std::uint8_t> body(payload.size() + 4);
  std::memcpy(body.data(), type, 4);
  std::memcpy(body.data() + 4, payload.data(), payload.size());
  out.insert(out.end(), body.begin(), body.end());
  put_u32(out, crc32_of(body.data(), body.size()));
}

void write_png(const std::string& path, int H, int W, int channels,
               const std::vector<std::uint8_t>& px) {
  if (H < 1 || W < 1) throw std::invalid_argument("png: dims must be >= 1");
  const std::size_t row = static_cast<std::size_t>(W) * static_cast<std::size_t>(channels);
  if (px.size() != row * static_cast<std::size_t>(H))
    throw std::invalid_argument("png: pixel buffer size mismatch");

  // Raw scanlines with filter byte 0 (None).
  std::vector<std::uint8_t> raw((row + 1) * static_cast<std::size_t>(H));
  for (int y = 0; y < H; ++y) {
    raw[static_cast<std::size_t>(y) * (row + 1)] = 0;
    std::memcpy(raw.data() + static_cast<std::size_t>(y) * (row + 1) + 1,
                px.data() + static_cast<std::size_t>(y) * row, row);
  }
  uLongf comp_len = compressBound(static_cast<uLong>(raw.size()));
  std::vector<std::uint8_t> comp(comp_len);
  if (compress2(comp.data(), &comp_len, raw.data(), static_cast<uLong>(raw.size()), 9) != Z_OK)
    throw std::runtime_error("png: deflate failed");
  comp.resize(comp_len);

  std::vector<std::uint8_t> out = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  std::vector<std::uint8_t> ihdr;
  put_u32(ihdr, static_cast<std::uint32_t>(W));
  put_u32(ihdr, static_cast<std::uint32_t>(H));
  ihdr.push_back(8); // bit depth
  ihdr.push_back(channels == 1 ? 0 : 2); // color type: gray or truecolor
  ihdr.push_back(0); // compression
  ihdr.push_back(0); // filter method
  ihdr.push_back(0); // no interlace
  append_chunk(out, "IHDR", ihdr);
  append_chunk(out, "IDAT", comp);
  append_chunk(out, "IEND", {});

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("png: cannot open for writing: " + path);
  f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
  if (!f) throw std::runtime_error("png: write failed: " + path);
}

int paeth(int a, int b, int c) {
  const int p = a + b - c;
  const int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
  if (pa <= pb && pa <= pc) return a;
  if (pb <= pc) return b;
  return c;
}

} // namespace

void write_png_gray8(const std::string& path, int H, int W,
                     const std::vector<std::uint8_t>& px) {
  write_png(path, H, W, 1, px);
}

void write_png_rgb8(const std::string& path, int H, int W, const std::vector<std::uint8_t>& rgb) {
  write_png(path, H, W, 3, rgb);
}

PngData read_png(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("png: cannot open: " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                                  std::istreambuf_iterator<char>());
  static const std::uint8_t sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  if (bytes.size() < 8 || std::memcmp(bytes.data(), sig, 8) != 0)
    throw std::runtime_error("png: bad signature: " + path);

  PngData img;
  int bit_depth = 0, color_type = -1;
  std::vector<std::uint8_t> idat;
  std::size_t pos = 8;
  while (pos + 8 <= bytes.size()) {
    const std::uint32_t len = get_u32(bytes.data() + pos);
    if (pos + 12 + len > bytes.size()) throw std::runtime_error("png: truncated chunk");
    const char* type = reinterpret_cast<const char*>(bytes.data() + pos + 4);
    const std::uint8_t* payload = bytes.data() + pos + 8;
    if (std::memcmp(type, "IHDR", 4) == 0) {
      img.width = static_cast<int>(get_u32(payload));
      img.height = static_cast<int>(get_u32(payload + 4));
      bit_depth = payload[8];
      color_type = payload[9];
      if (bit_depth != 8 || (color_type != 0 && color_type != 2) || payload[12] != 0)
        throw std::runtime_error("png: unsupported format (need 8-bit gray/rgb, no interlace)");
      img.channels = color_type == 0 ? 1 : 3;
    } else if (std::memcmp(type, "IDAT", 4) == 0) {
      idat.insert(idat.end(), payload, payload + len);
    } else if (std::memcmp(type, "IEND", 4) == 0) {
      break;
    }
    pos += 12 + len;
  }
  if (img.width < 1 || img.height < 1 || idat.empty())
    throw std::runtime_error("png: missing IHDR/IDAT: " + path);

  const std::size_t row = static_cast<std::size_t>(img.width) * img.channels;
  std::vector<std::uint8_t> raw((row + 1) * static_cast<std::size_t>(img.height));
  uLongf raw_len = static_cast<uLongf>(raw.size());
  if (uncompress(raw.data(), &raw_len, idat.data(), static_cast<uLong>(idat.size())) != Z_OK ||
      raw_len != raw.size())
    throw std::runtime_error("png: inflate failed: " + path);

  // Undo per-row filters (bpp = channels for 8-bit).
  const int bpp = img.channels;
  img.px.assign(row * static_cast<std::size_t>(img.height), 0);
  for (int y = 0; y < img.height; ++y) {
    const std::uint8_t filter = raw[static_cast<std::size_t>(y) * (row + 1)];
    const std::uint8_t* src = raw.data() + static_cast<std::size_t>(y) * (row + 1) + 1;
    std::uint8_t* dst = img.px.data() + static_cast<std::size_t>(y) * row;
    const std::uint8_t* up = y > 0 ? img.px.data() + static_cast<std::size_t>(y - 1) * row : nullptr;
    for (std::size_t x = 0; x < row; ++x) {
      const int a = x >= static_cast<std::size_t>(bpp) ? dst[x - bpp] : 0;
      const int b = up ? up[x] : 0;
      const int c = (up && x >= static_cast<std::size_t>(bpp)) ? up[x - bpp] : 0;
      int v = src[x];
      switch (filter) {
        case 0: break;
        case 1: v += a; break;
        case 2: v += b; break;
        case 3: v += (a + b) / 2; break;
        case 4: v += paeth(a, b, c); break;
        default: throw std::runtime_error("png: unknown filter type");
      }
      dst[x] = static_cast<std::uint8_t>(v & 0xff);
    }
  }
  return img;
}

std::vector<std::uint8_t> normalize_to_gray8(const Image& img) {
  double lo = img.px[0], hi = img.px[0];
  for (double v : img.px) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  std::vector<std::uint8_t> out(img.px.size(), 0);
  if (hi > lo) {
    const double s = 255.0 / (hi - lo);
    for (std::size_t i = 0; i < out.size(); ++i)
      out[i] = static_cast<std::uint8_t>(std::lround((img.px[i] - lo) * s));
  }
  return out;
}

namespace {

void draw_box_rgb(std::vector<std::uint8_t>& rgb, int H, int W, const BBox& b, int x_off = 0) {
  auto set_red = [&](int y, int x) {
    if (y < 0 || y >= H || x < 0 || x >= W) return;
    const std::size_t i = (static_cast<std::size_t>(y) * W + x) * 3;
    rgb[i] = 255;
    rgb[i + 1] = 0;
    rgb[i + 2] = 0;
  };
  for (int x = b.x0; x < b.x1; ++x) {
    set_red(b.y0, x + x_off);
    set_red(b.y1 - 1, x + x_off);
  }
  for (int y = b.y0; y < b.y1; ++y) {
    set_red(y, b.x0 + x_off);
    set_red(y, b.x1 - 1 + x_off);
  }
}

} // namespace

void export_png(const Image& img, const std::string& path, const std::vector<BBox>& boxes) {
  const std::vector<std::uint8_t> gray = normalize_to_gray8(img);
  if (boxes.empty()) {
    write_png_gray8(path, img.height, img.width, gray);
    return;
  }
  std::vector<std::uint8_t> rgb(gray.size() * 3);
  for (std::size_t i = 0; i < gray.size(); ++i) {
    rgb[3 * i] = gray[i];
    rgb[3 * i + 1] = gray[i];
    rgb[3 * i + 2] = gray[i];
  }
  for (const BBox& b : boxes) draw_box_rgb(rgb, img.height, img.width, b);
  write_png_rgb8(path, img.height, img.width, rgb);
}

void export_panel_png(const std::vector<Image>& tiles, const std::string& path,
                      const std::vector<BBox>& boxes) {
  if (tiles.empty()) throw std::invalid_argument("panel: no tiles");
  const int H = tiles[0].height, W = tiles[0].width;
  for (const Image& t : tiles)
    if (t.height != H || t.width != W)
      throw std::invalid_argument("panel: tiles must share dimensions");
  constexpr int kSep = 2;
  const int n = static_cast<int>(tiles.size());
  const int PW = n * W + (n - 1) * kSep;
  std::vector<std::uint8_t> rgb(static_cast<std::size_t>(H) * PW * 3, 255);
  for (int t = 0; t < n; ++t) {
    const std::vector<std::uint8_t> gray = normalize_to_gray8(tiles[static_cast<std::size_t>(t)]);
    const int x_off = t * (W + kSep);
    for (int y = 0; y < H; ++y)
      for (int x = 0; x < W; ++x) {
        const std::uint8_t g = gray[static_cast<std::size_t>(y) * W + x];
        const std::size_t i = (static_cast<std::size_t>(y) * PW + x + x_off) * 3;
        rgb[i] = g;
        rgb[i + 1] = g;
        rgb[i + 2] = g;
      }
    for (const BBox& b : boxes) draw_box_rgb(rgb, H, PW, b, x_off);
  }
  write_png_rgb8(path, H, PW, rgb);
}

} // namespace mrprime
