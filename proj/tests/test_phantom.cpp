#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "mrprime/phantom.hpp"

using namespace mrprime;

namespace {

std::string fresh_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "mrprime-tests" / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir.string();
}

} // namespace

TEST_CASE("phantom generation is deterministic and seed-sensitive") {
  for (Family f : {Family::A, Family::B}) {
    PhantomSample a = gen_phantom(f, 64, 64, 42);
    PhantomSample b = gen_phantom(f, 64, 64, 42);
    CHECK(a.image.px == b.image.px);
    CHECK(a.pathology_boxes.size() == b.pathology_boxes.size());

    PhantomSample c = gen_phantom(f, 64, 64, 43);
    CHECK(a.image.px != c.image.px);
  }
}

TEST_CASE("phantom values live in [0, 1]") {
  for (Family f : {Family::A, Family::B}) {
    for (std::uint64_t seed = 0; seed < 25; ++seed) {
      PhantomSample s = gen_phantom(f, 48, 48, seed);
      const auto [lo, hi] = std::minmax_element(s.image.px.begin(), s.image.px.end());
      CHECK(*lo >= 0.0);
      CHECK(*hi <= 1.0);
      CHECK(*hi > 0.0); // never a blank canvas
    }
  }
}

TEST_CASE("families render differently") {
  PhantomSample a = gen_phantom(Family::A, 64, 64, 5);
  PhantomSample b = gen_phantom(Family::B, 64, 64, 5);
  CHECK(a.image.px != b.image.px);
  CHECK(a.family == Family::A);
  CHECK(b.family == Family::B);
}

TEST_CASE("lesions appear in about half the samples with valid boxes") {
  for (Family f : {Family::A, Family::B}) {
    int with_lesion = 0;
    const int n = 200;
    for (std::uint64_t seed = 0; seed < n; ++seed) {
      PhantomSample s = gen_phantom(f, 64, 64, seed);
      CHECK(s.pathology_boxes.size() <= 1);
      if (s.pathology_boxes.empty()) continue;
      ++with_lesion;
      const BBox& box = s.pathology_boxes.front();
      CHECK(box.label == "lesion");
      CHECK(box.x0 >= 0);
      CHECK(box.y0 >= 0);
      CHECK(box.x1 <= 64);
      CHECK(box.y1 <= 64);
      CHECK(box.width() > 0);
      CHECK(box.height() > 0);
      CHECK(box.width() <= 16);  // radius 3-7 px
      CHECK(box.height() <= 16);
    }
    // Bernoulli(0.5) over 200 draws: 3.5 sigma ~ 25.
    CHECK(with_lesion > 75);
    CHECK(with_lesion < 125);
  }
}

TEST_CASE("lesion is the only difference from the base rendering") {
  for (Family f : {Family::A, Family::B}) {
    int checked = 0;
    for (std::uint64_t seed = 0; seed < 60 && checked < 10; ++seed) {
      PhantomSample s = gen_phantom(f, 64, 64, seed);
      Image base = gen_phantom_base(f, 64, 64, seed);
      if (s.pathology_boxes.empty()) {
        CHECK(s.image.px == base.px); // no lesion: identical render
        continue;
      }
      ++checked;
      const BBox& box = s.pathology_boxes.front();
      double peak = -1.0;
      int peak_x = -1, peak_y = -1;
      bool outside_changed = false;
      for (int y = 0; y < 64; ++y)
        for (int x = 0; x < 64; ++x) {
          const double d = std::abs(s.image.at(y, x) - base.at(y, x));
          if (d > peak) {
            peak = d;
            peak_x = x;
            peak_y = y;
          }
          const bool inside = x >= box.x0 && x < box.x1 && y >= box.y0 && y < box.y1;
          if (!inside && d > 1e-12) outside_changed = true;
        }
      CHECK(peak > 0.0);
      CHECK(peak_x >= box.x0);
      CHECK(peak_x < box.x1);
      CHECK(peak_y >= box.y0);
      CHECK(peak_y < box.y1);
      CHECK_FALSE(outside_changed); // lesion edit is local to its box
    }
    CHECK(checked == 10);
  }
}

TEST_CASE("family char round trip") {
  CHECK(family_to_char(Family::A) == 'A');
  CHECK(family_to_char(Family::B) == 'B');
  CHECK(family_from_char('A') == Family::A);
  CHECK(family_from_char('B') == Family::B);
  CHECK_THROWS_AS(family_from_char('C'), std::invalid_argument);
}

TEST_CASE("image bin round trip is float32-exact") {
  Image img(5, 7);
  for (std::size_t i = 0; i < img.px.size(); ++i)
    img.px[i] = std::sin(static_cast<double>(i) * 0.37) * 0.5 + 0.5;
  const std::string path = fresh_dir("imgbin") + "/img.bin";
  write_image_bin(path, img);
  Image back = read_image_bin(path, 5, 7);
  for (std::size_t i = 0; i < img.px.size(); ++i)
    CHECK(back.px[i] == static_cast<double>(static_cast<float>(img.px[i])));
  CHECK_THROWS_AS(read_image_bin(path, 5, 8), std::runtime_error); // size mismatch
  CHECK_THROWS_AS(read_image_bin(fresh_dir("imgbin2") + "/none.bin", 2, 2), std::runtime_error);
}

TEST_CASE("dataset spec JSON round trip") {
  DatasetSpec spec;
  spec.height = 32;
  spec.width = 48;
  spec.seed = 77;
  spec.train_a = 6;
  spec.val_a = 3;
  spec.test_a = 2;
  spec.test_b = 4;
  DatasetSpec back = dataset_spec_from_json(dataset_spec_to_json(spec));
  CHECK(back.height == 32);
  CHECK(back.width == 48);
  CHECK(back.seed == 77);
  CHECK(back.train_a == 6);
  CHECK(back.val_a == 3);
  CHECK(back.test_a == 2);
  CHECK(back.test_b == 4);
}

TEST_CASE("make_dataset writes a loadable, reproducible tree") {
  DatasetSpec spec;
  spec.height = 32;
  spec.width = 32;
  spec.seed = 2024;
  spec.train_a = 5;
  spec.val_a = 3;
  spec.test_a = 2;
  spec.test_b = 2;

  const std::string dir = fresh_dir("dataset");
  DatasetManifest manifest = make_dataset(spec, dir);
  CHECK(manifest.height == 32);
  CHECK(manifest.width == 32);
  CHECK(manifest.base_seed == 2024);
  CHECK(manifest.entries.size() == 12);
  CHECK(manifest.split_entries("train").size() == 5);
  CHECK(manifest.split_entries("val").size() == 3);
  CHECK(manifest.split_entries("test").size() == 4);
  CHECK(manifest.split_family("test", Family::A).size() == 2);
  CHECK(manifest.split_family("test", Family::B).size() == 2);
  CHECK(manifest.split_family("train", Family::B).empty());

  // IDs are unique and findable.
  std::set<std::string> ids;
  for (const auto& e : manifest.entries) ids.insert(e.sample_id);
  CHECK(ids.size() == manifest.entries.size());
  const std::string some_id = manifest.split_entries("test").front()->sample_id;
  CHECK(manifest.find(some_id).sample_id == some_id);
  CHECK_THROWS_AS(manifest.find("no-such-sample"), std::runtime_error);

  // Reload from disk: identical metadata.
  DatasetManifest loaded = load_manifest(dir + "/manifest.json");
  REQUIRE(loaded.entries.size() == manifest.entries.size());
  for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
    CHECK(loaded.entries[i].sample_id == manifest.entries[i].sample_id);
    CHECK(loaded.entries[i].split == manifest.entries[i].split);
    CHECK(loaded.entries[i].family == manifest.entries[i].family);
    CHECK(loaded.entries[i].seed == manifest.entries[i].seed);
    CHECK(loaded.entries[i].file == manifest.entries[i].file);
    REQUIRE(loaded.entries[i].boxes.size() == manifest.entries[i].boxes.size());
    for (std::size_t bi = 0; bi < manifest.entries[i].boxes.size(); ++bi) {
      CHECK(loaded.entries[i].boxes[bi].x0 == manifest.entries[i].boxes[bi].x0);
      CHECK(loaded.entries[i].boxes[bi].y1 == manifest.entries[i].boxes[bi].y1);
      CHECK(loaded.entries[i].boxes[bi].label == manifest.entries[i].boxes[bi].label);
    }
  }

  // Samples load and match a float32-rounded regeneration from their seed.
  for (const auto* e : loaded.split_entries("test")) {
    PhantomSample s = load_sample(loaded, *e);
    CHECK(s.sample_id == e->sample_id);
    CHECK(s.family == e->family);
    CHECK(s.image.height == 32);
    CHECK(s.image.width == 32);
    PhantomSample regen = gen_phantom(e->family, 32, 32, e->seed);
    for (std::size_t i = 0; i < s.image.px.size(); ++i)
      CHECK(s.image.px[i] == static_cast<double>(static_cast<float>(regen.image.px[i])));
  }

  // Regenerating the dataset into another directory is bit-identical.
  const std::string dir2 = fresh_dir("dataset2");
  DatasetManifest manifest2 = make_dataset(spec, dir2);
  for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
    CHECK(manifest2.entries[i].sample_id == manifest.entries[i].sample_id);
    PhantomSample s1 = load_sample(manifest, manifest.entries[i]);
    PhantomSample s2 = load_sample(manifest2, manifest2.entries[i]);
    CHECK(s1.image.px == s2.image.px);
  }
}
