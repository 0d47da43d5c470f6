#include "mrprime/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "mrprime/rng.hpp"

namespace mrprime {

char family_to_char(Family f) { return f == Family::A ? 'A' : 'B'; }

Family family_from_char(char c) {
  if (c == 'A') return Family::A;
  if (c == 'B') return Family::B;
  throw std::invalid_argument(std::string("unknown family: ") + c);
}

namespace {

double smoothstep01(double s) {
  s = std::clamp(s, 0.0, 1.0);
  return s * s * (3.0 - 2.0 * s);
}

void clamp_unit(Image& img) {
  for (double& v : img.px) v = std::clamp(v, 0.0, 1.0);
}

// Quantize through float32 so the on-disk raw-float image is lossless.
void round_through_float(Image& img) {
  for (double& v : img.px) v = static_cast<double>(static_cast<float>(v));
}

struct SoftEllipse {
  double cx, cy, a, b, theta, amp, edge; // edge: ramp width as a fraction of the radius
};

void render_ellipse(Image& img, const SoftEllipse& e) {
  const double ct = std::cos(e.theta), st = std::sin(e.theta);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      const double dx = x - e.cx, dy = y - e.cy;
      const double u = (dx * ct + dy * st) / e.a;
      const double v = (-dx * st + dy * ct) / e.b;
      const double rho = std::sqrt(u * u + v * v);
      if (rho < 1.0) img.at(y, x) += e.amp * smoothstep01((1.0 - rho) / e.edge);
    }
}

Image render_family_a(int H, int W, Rng& rng) {
  Image img(H, W, 0.0);
  const int k = static_cast<int>(rng.uniform_int(4, 8));
  SoftEllipse outline;
  outline.cx = W * (0.5 + rng.uniform(-0.04, 0.04));
  outline.cy = H * (0.5 + rng.uniform(-0.04, 0.04));
  outline.a = W * rng.uniform(0.32, 0.42);
  outline.b = H * rng.uniform(0.32, 0.42);
  outline.theta = rng.uniform(0.0, std::numbers::pi);
  outline.amp = rng.uniform(0.40, 0.60);
  outline.edge = rng.uniform(0.12, 0.25);
  render_ellipse(img, outline);
  for (int i = 1; i < k; ++i) {
    SoftEllipse e;
    e.cx = outline.cx + outline.a * rng.uniform(-0.55, 0.55);
    e.cy = outline.cy + outline.b * rng.uniform(-0.55, 0.55);
    e.a = W * rng.uniform(0.05, 0.24);
    e.b = H * rng.uniform(0.05, 0.24);
    e.theta = rng.uniform(0.0, std::numbers::pi);
    e.amp = rng.uniform(-0.30, 0.45);
    e.edge = rng.uniform(0.15, 0.40);
    render_ellipse(img, e);
  }
  return img;
}

Image render_family_b(int H, int W, Rng& rng) {
  Image img(H, W, 0.0);
  const int k = static_cast<int>(rng.uniform_int(3, 6));
  const double dim = std::min(H, W);
  for (int i = 0; i < k; ++i) {
    const bool rect = rng.uniform() < 0.5;
    const double amp = i == 0 ? rng.uniform(0.35, 0.55) : rng.uniform(-0.35, 0.50);
    const double edge = rng.uniform(0.6, 1.4); // pixels: sharp edges
    if (rect) {
      const double w = W * rng.uniform(0.12, i == 0 ? 0.55 : 0.35);
      const double h = H * rng.uniform(0.12, i == 0 ? 0.55 : 0.35);
      const double x0 = rng.uniform(0.05 * W, W - w - 0.05 * W);
      const double y0 = rng.uniform(0.05 * H, H - h - 0.05 * H);
      for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
          const double sx = smoothstep01(std::min(x - x0, x0 + w - x) / edge);
          const double sy = smoothstep01(std::min(y - y0, y0 + h - y) / edge);
          img.at(y, x) += amp * sx * sy;
        }
    } else {
      const double cx = W * rng.uniform(0.25, 0.75);
      const double cy = H * rng.uniform(0.25, 0.75);
      const double router = dim * rng.uniform(0.10, 0.32);
      const double rinner = router * rng.uniform(0.35, 0.72);
      for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
          const double d = std::hypot(x - cx, y - cy);
          const double s = std::min(router - d, d - rinner) / edge;
          if (s > 0.0) img.at(y, x) += amp * smoothstep01(s);
        }
    }
  }
  return img;
}

struct LesionDraw {
  bool present = false;
  double radius = 0.0;
  int cx = 0, cy = 0;
  BBox box;
};

// Consumes the lesion decision from the stream; pixel edits happen separately
// so the pre-lesion rendering is recoverable for tests.
LesionDraw draw_lesion(int H, int W, Rng& rng) {
  LesionDraw l;
  l.present = rng.uniform() < 0.5;
  if (!l.present) return l;
  l.radius = rng.uniform(3.0, 7.0);
  const int e = std::max(static_cast<int>(std::ceil(l.radius)) + 1, 4);
  l.cx = static_cast<int>(rng.uniform_int(e, W - e));
  l.cy = static_cast<int>(rng.uniform_int(e, H - e));
  l.box = {l.cx - e, l.cy - e, l.cx + e, l.cy + e, "lesion"};
  return l;
}

void apply_lesion(Image& img, const LesionDraw& l) {
  if (!l.present) return;
  // Sign away from the nearer intensity bound so the center never clamps and
  // stays the strict peak-offset pixel.
  const double sign = img.at(l.cy, l.cx) >= 0.5 ? -1.0 : 1.0;
  const int e = static_cast<int>(std::ceil(l.radius));
  for (int y = l.cy - e; y <= l.cy + e; ++y)
    for (int x = l.cx - e; x <= l.cx + e; ++x) {
      const double d = std::hypot(x - l.cx, y - l.cy);
      const double s = 1.0 - d / l.radius;
      if (s > 0.0) img.at(y, x) += sign * 0.3 * smoothstep01(s);
    }
  clamp_unit(img);
}

Image render_base(Family family, int H, int W, Rng& rng) {
  Image img = family == Family::A ? render_family_a(H, W, rng) : render_family_b(H, W, rng);
  clamp_unit(img);
  return img;
}

} // namespace

PhantomSample gen_phantom(Family family, int H, int W, std::uint64_t seed) {
  if (H < 32 || W < 32) throw std::invalid_argument("gen_phantom: dimensions must be >= 32");
  Rng rng(seed);
  PhantomSample s;
  s.family = family;
  s.seed = seed;
  s.image = render_base(family, H, W, rng);
  const LesionDraw lesion = draw_lesion(H, W, rng);
  apply_lesion(s.image, lesion);
  if (lesion.present) s.pathology_boxes.push_back(lesion.box);
  round_through_float(s.image);
  return s;
}

namespace {

// Pre-lesion rendering of the identical sample; used by construction tests.
Image gen_phantom_base_impl(Family family, int H, int W, std::uint64_t seed) {
  Rng rng(seed);
  Image img = render_base(family, H, W, rng);
  round_through_float(img);
  return img;
}

} // namespace

std::vector<const ManifestEntry*> DatasetManifest::split_entries(const std::string& split) const {
  std::vector<const ManifestEntry*> out;
  for (const ManifestEntry& e : entries)
    if (e.split == split) out.push_back(&e);
  return out;
}

std::vector<const ManifestEntry*> DatasetManifest::split_family(const std::string& split,
                                                                Family f) const {
  std::vector<const ManifestEntry*> out;
  for (const ManifestEntry& e : entries)
    if (e.split == split && e.family == f) out.push_back(&e);
  return out;
}

const ManifestEntry& DatasetManifest::find(const std::string& sample_id) const {
  for (const ManifestEntry& e : entries)
    if (e.sample_id == sample_id) return e;
  throw std::runtime_error("manifest: unknown sample id: " + sample_id);
}

DatasetSpec dataset_spec_from_json(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  DatasetSpec s;
  s.height = j.value("height", s.height);
  s.width = j.value("width", s.width);
  s.seed = j.value("seed", s.seed);
  if (j.contains("splits")) {
    const auto& sp = j.at("splits");
    s.train_a = sp.value("train_a", s.train_a);
    s.val_a = sp.value("val_a", s.val_a);
    s.test_a = sp.value("test_a", s.test_a);
    s.test_b = sp.value("test_b", s.test_b);
  }
  return s;
}

std::string dataset_spec_to_json(const DatasetSpec& s) {
  nlohmann::json j;
  j["height"] = s.height;
  j["width"] = s.width;
  j["seed"] = s.seed;
  j["splits"] = {{"train_a", s.train_a},
                 {"val_a", s.val_a},
                 {"test_a", s.test_a},
                 {"test_b", s.test_b}};
  return j.dump(2);
}

void write_image_bin(const std::string& path, const Image& img) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("image: cannot open for writing: " + path);
  std::vector<float> buf(img.px.size());
  for (std::size_t i = 0; i < buf.size(); ++i) buf[i] = static_cast<float>(img.px[i]);
  out.write(reinterpret_cast<const char*>(buf.data()),
            static_cast<std::streamsize>(buf.size() * sizeof(float)));
  if (!out) throw std::runtime_error("image: write failed: " + path);
}

Image read_image_bin(const std::string& path, int H, int W) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw std::runtime_error("image: cannot open: " + path);
  const auto size = static_cast<std::size_t>(in.tellg());
  const std::size_t want = static_cast<std::size_t>(H) * W * sizeof(float);
  if (size != want)
    throw std::runtime_error("image: corrupt file (size " + std::to_string(size) +
                             ", expected " + std::to_string(want) + "): " + path);
  in.seekg(0);
  std::vector<float> buf(static_cast<std::size_t>(H) * W);
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(want));
  if (static_cast<std::size_t>(in.gcount()) != want)
    throw std::runtime_error("image: short read: " + path);
  Image img(H, W);
  for (std::size_t i = 0; i < buf.size(); ++i) img.px[i] = static_cast<double>(buf[i]);
  return img;
}

namespace {

nlohmann::json boxes_to_json(const std::vector<BBox>& boxes) {
  nlohmann::json arr = nlohmann::json::array();
  for (const BBox& b : boxes) arr.push_back({b.x0, b.y0, b.x1, b.y1, b.label});
  return arr;
}

std::vector<BBox> boxes_from_json(const nlohmann::json& arr) {
  std::vector<BBox> boxes;
  for (const auto& jb : arr) {
    BBox b;
    b.x0 = jb.at(0).get<int>();
    b.y0 = jb.at(1).get<int>();
    b.x1 = jb.at(2).get<int>();
    b.y1 = jb.at(3).get<int>();
    b.label = jb.at(4).get<std::string>();
    boxes.push_back(std::move(b));
  }
  return boxes;
}

} // namespace

DatasetManifest make_dataset(const DatasetSpec& spec, const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(fs::path(out_dir) / "images");
  DatasetManifest m;
  m.root = out_dir;
  m.height = spec.height;
  m.width = spec.width;
  m.base_seed = spec.seed;

  struct Block {
    const char* split;
    Family family;
    int count;
  };
  const Block blocks[] = {{"train", Family::A, spec.train_a},
                          {"val", Family::A, spec.val_a},
                          {"test", Family::A, spec.test_a},
                          {"test", Family::B, spec.test_b}};
  std::uint64_t index = 0;
  char idbuf[64];
  for (const Block& blk : blocks) {
    for (int i = 0; i < blk.count; ++i, ++index) {
      std::snprintf(idbuf, sizeof(idbuf), "%s-%c-%04d", blk.split, family_to_char(blk.family), i);
      ManifestEntry e;
      e.sample_id = idbuf;
      e.family = blk.family;
      e.split = blk.split;
      e.seed = spec.seed + index; // per-sample derived seed
      e.file = std::string("images/") + idbuf + ".bin";
      const PhantomSample s = gen_phantom(blk.family, spec.height, spec.width, e.seed);
      e.boxes = s.pathology_boxes;
      write_image_bin((fs::path(out_dir) / e.file).string(), s.image);
      m.entries.push_back(std::move(e));
    }
  }

  nlohmann::json j;
  j["height"] = m.height;
  j["width"] = m.width;
  j["base_seed"] = m.base_seed;
  nlohmann::json samples = nlohmann::json::array();
  for (const ManifestEntry& e : m.entries)
    samples.push_back({{"id", e.sample_id},
                       {"family", std::string(1, family_to_char(e.family))},
                       {"split", e.split},
                       {"file", e.file},
                       {"seed", e.seed},
                       {"boxes", boxes_to_json(e.boxes)}});
  j["samples"] = std::move(samples);
  std::ofstream out(fs::path(out_dir) / "manifest.json");
  if (!out) throw std::runtime_error("make_dataset: cannot write manifest under " + out_dir);
  out << j.dump(2) << '\n';
  return m;
}

DatasetManifest load_manifest(const std::string& manifest_path) {
  namespace fs = std::filesystem;
  std::ifstream in(manifest_path);
  if (!in) throw std::runtime_error("manifest: cannot open: " + manifest_path);
  nlohmann::json j;
  in >> j;
  DatasetManifest m;
  m.root = fs::path(manifest_path).parent_path().string();
  if (m.root.empty()) m.root = ".";
  m.height = j.at("height").get<int>();
  m.width = j.at("width").get<int>();
  m.base_seed = j.at("base_seed").get<std::uint64_t>();
  for (const auto& js : j.at("samples")) {
    ManifestEntry e;
    e.sample_id = js.at("id").get<std::string>();
    e.family = family_from_char(js.at("family").get<std::string>().at(0));
    e.split = js.at("split").get<std::string>();
    e.file = js.at("file").get<std::string>();
    e.seed = js.at("seed").get<std::uint64_t>();
    e.boxes = boxes_from_json(js.at("boxes"));
    m.entries.push_back(std::move(e));
  }
  return m;
}

PhantomSample load_sample(const DatasetManifest& manifest, const ManifestEntry& entry) {
  namespace fs = std::filesystem;
  PhantomSample s;
  s.image = read_image_bin((fs::path(manifest.root) / entry.file).string(), manifest.height,
                           manifest.width);
  s.family = entry.family;
  s.pathology_boxes = entry.boxes;
  s.sample_id = entry.sample_id;
  s.seed = entry.seed;
  return s;
}

PhantomSample load_sample(const DatasetManifest& manifest, const std::string& sample_id) {
  return load_sample(manifest, manifest.find(sample_id));
}

Image gen_phantom_base(Family family, int H, int W, std::uint64_t seed) {
  if (H < 32 || W < 32) throw std::invalid_argument("gen_phantom: dimensions must be >= 32");
  return gen_phantom_base_impl(family, H, W, seed);
}

} // namespace mrprime
