#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mrprime/grid.hpp"

namespace mrprime {

/// Half-open pixel box [x0, x1) x [y0, y1).
struct BBox {
  int x0 = 0, y0 = 0, x1 = 0, y1 = 0;
  std::string label;

  int width() const { return x1 - x0; }
  int height() const { return y1 - y0; }
};

enum class Family { A, B };

char family_to_char(Family f);
Family family_from_char(char c);

struct PhantomSample {
  Image image; // values in [0, 1]
  Family family = Family::A;
  std::vector<BBox> pathology_boxes;
  std::string sample_id;
  std::uint64_t seed = 0;
};

/// Family A: 4-8 nested soft ellipses (smooth anatomy). Family B: 3-6
/// rectangles and ring annuli with sharp edges. Either family gets, with
/// probability 0.5, one small high-contrast lesion (3-7 px radius, +-0.3
/// offset) recorded as a "lesion" bounding box. Deterministic in all inputs.
PhantomSample gen_phantom(Family family, int H, int W, std::uint64_t seed);

/// The same sample's rendering before lesion insertion (construction-test hook:
/// the peak of |gen_phantom - gen_phantom_base| must fall inside the lesion box).
Image gen_phantom_base(Family family, int H, int W, std::uint64_t seed);

struct ManifestEntry {
  std::string sample_id;
  Family family = Family::A;
  std::string split; // "train" | "val" | "test"
  std::string file;  // path relative to the manifest directory
  std::uint64_t seed = 0;
  std::vector<BBox> boxes;
};

struct DatasetManifest {
  std::string root; // directory holding manifest.json
  int height = 0;
  int width = 0;
  std::uint64_t base_seed = 0;
  std::vector<ManifestEntry> entries;

  std::vector<const ManifestEntry*> split_entries(const std::string& split) const;
  std::vector<const ManifestEntry*> split_family(const std::string& split, Family f) const;
  const ManifestEntry& find(const std::string& sample_id) const;
};

struct DatasetSpec {
  int height = 64;
  int width = 64;
  std::uint64_t seed = 1234;
  int train_a = 500;
  int val_a = 100;
  int test_a = 50;
  int test_b = 50;
};

DatasetSpec dataset_spec_from_json(const std::string& text);
std::string dataset_spec_to_json(const DatasetSpec& spec);

/// Writes images/<id>.bin (raw little-endian float32, row-major) for every
/// sample plus manifest.json under out_dir. Fully determined by spec.
DatasetManifest make_dataset(const DatasetSpec& spec, const std::string& out_dir);

DatasetManifest load_manifest(const std::string& manifest_path);

PhantomSample load_sample(const DatasetManifest& manifest, const std::string& sample_id);
PhantomSample load_sample(const DatasetManifest& manifest, const ManifestEntry& entry);

/// Raw float32 image I/O shared by datasets and reconstruction dumps.
void write_image_bin(const std::string& path, const Image& img);
Image read_image_bin(const std::string& path, int H, int W);

} // namespace mrprime
