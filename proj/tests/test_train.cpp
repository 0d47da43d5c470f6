#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "mrprime/kspace.hpp"
#include "mrprime/phantom.hpp"
#include "mrprime/train.hpp"

using namespace mrprime;

namespace {

std::string fresh_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "mrprime-tests" / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir.string();
}

// Small shared dataset for the training tests (built once).
const std::string& tiny_dataset() {
  static const std::string manifest_path = [] {
    DatasetSpec spec;
    spec.height = 32;
    spec.width = 32;
    spec.seed = 555;
    spec.train_a = 4;
    spec.val_a = 2;
    spec.test_a = 1;
    spec.test_b = 1;
    const std::string dir = fresh_dir("train-data");
    make_dataset(spec, dir);
    return dir + "/manifest.json";
  }();
  return manifest_path;
}

TrainConfig tiny_config(ModelKind kind, std::uint64_t seed) {
  TrainConfig cfg;
  cfg.kind = kind;
  cfg.manifest = tiny_dataset();
  cfg.epochs = 3;
  cfg.batch_size = 2;
  cfg.lr = 0.003;
  cfg.seed = seed;
  cfg.depth = 1;
  cfg.base_channels = 2;
  return cfg;
}

Mask full_mask(int w) {
  Mask m;
  m.width = w;
  m.sampled.assign(static_cast<std::size_t>(w), true);
  return m;
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

// Split a CSV line and blank out the trailing seconds field (wall time is the
// one legitimately nondeterministic column).
std::string drop_seconds(const std::string& line) {
  const auto pos = line.rfind(',');
  return line.substr(0, pos);
}

} // namespace

TEST_CASE("model kind string round trip") {
  CHECK(to_string(ModelKind::Fixed) == "fixed");
  CHECK(to_string(ModelKind::Baseline) == "baseline");
  CHECK(to_string(ModelKind::Mask) == "mask");
  CHECK(model_kind_from_string("fixed") == ModelKind::Fixed);
  CHECK(model_kind_from_string("baseline") == ModelKind::Baseline);
  CHECK(model_kind_from_string("mask") == ModelKind::Mask);
  CHECK_THROWS_AS(model_kind_from_string("unet"), std::invalid_argument);
}

TEST_CASE("train config JSON round trip and drop-epoch resolution") {
  TrainConfig cfg;
  cfg.kind = ModelKind::Mask;
  cfg.manifest = "data/manifest.json";
  cfg.epochs = 12;
  cfg.batch_size = 4;
  cfg.lr = 0.02;
  cfg.lr_drop_epoch = 5;
  cfg.lr_drop_factor = 0.2;
  cfg.seed = 99;
  cfg.val_every = 2;
  cfg.sigma = 0.01;
  cfg.train_mask_r = 8;
  cfg.train_mask_cf = 0.04;
  cfg.depth = 2;
  cfg.base_channels = 6;

  TrainConfig back = train_config_from_json(train_config_to_json(cfg));
  CHECK(back.kind == ModelKind::Mask);
  CHECK(back.manifest == cfg.manifest);
  CHECK(back.epochs == 12);
  CHECK(back.batch_size == 4);
  CHECK(back.lr == 0.02);
  CHECK(back.lr_drop_epoch == 5);
  CHECK(back.lr_drop_factor == 0.2);
  CHECK(back.seed == 99);
  CHECK(back.val_every == 2);
  CHECK(back.sigma == 0.01);
  CHECK(back.train_mask_r == 8);
  CHECK(back.train_mask_cf == 0.04);
  CHECK(back.depth == 2);
  CHECK(back.base_channels == 6);

  CHECK(back.resolved_drop_epoch() == 5);
  TrainConfig dflt;
  dflt.epochs = 30;
  CHECK(dflt.resolved_drop_epoch() == 6); // 20% of 30
  dflt.epochs = 3;
  CHECK(dflt.resolved_drop_epoch() == 1); // never below 1
}

TEST_CASE("make_training_pair: full mask and sigma 0 reproduces the target") {
  PhantomSample s = gen_phantom(Family::A, 32, 32, 7);
  TrainingPair pair = make_training_pair(s, full_mask(32), 0.0, 0, false);
  REQUIRE(pair.input.shape() == std::vector<int>{1, 2, 32, 32});
  REQUIRE(pair.target.shape() == std::vector<int>{1, 2, 32, 32});
  CHECK_FALSE(pair.mask_channel.defined());
  for (std::int64_t i = 0; i < pair.input.numel(); ++i)
    CHECK(pair.input.data()[i] == pair.target.data()[i]); // bitwise
}

TEST_CASE("make_training_pair: unsampled columns are zero, mask channel matches") {
  PhantomSample s = gen_phantom(Family::B, 32, 32, 8);
  Mask mask = gen_mask(MaskSpec{32, 4, 0.08, MaskPattern::EquispacedRandomOffset, 5});
  TrainingPair pair = make_training_pair(s, mask, 0.0, 0, true);

  REQUIRE(pair.mask_channel.shape() == std::vector<int>{1, 1, 32, 32});
  for (int r = 0; r < 32; ++r)
    for (int c = 0; c < 32; ++c)
      CHECK(pair.mask_channel.data()[static_cast<std::size_t>(r) * 32 + c] ==
            (mask.sampled[static_cast<std::size_t>(c)] ? 1.0 : 0.0));

  bool target_nonzero_somewhere = false;
  for (int ch = 0; ch < 2; ++ch)
    for (int r = 0; r < 32; ++r)
      for (int c = 0; c < 32; ++c) {
        const std::size_t i =
            (static_cast<std::size_t>(ch) * 32 + static_cast<std::size_t>(r)) * 32 + c;
        if (!mask.sampled[static_cast<std::size_t>(c)]) {
          CHECK(pair.input.data()[i] == 0.0);
          CHECK_FALSE(std::signbit(pair.input.data()[i]));
          if (pair.target.data()[i] != 0.0) target_nonzero_somewhere = true;
        } else {
          CHECK(pair.input.data()[i] == pair.target.data()[i]); // sigma = 0
        }
      }
  CHECK(target_nonzero_somewhere);
}

TEST_CASE("make_training_pair: noise only perturbs sampled columns") {
  PhantomSample s = gen_phantom(Family::A, 32, 32, 9);
  Mask mask = gen_mask(MaskSpec{32, 4, 0.08, MaskPattern::EquispacedFixed, 0});
  TrainingPair noisy = make_training_pair(s, mask, 0.05, 42, false);
  TrainingPair clean = make_training_pair(s, mask, 0.0, 42, false);
  bool sampled_changed = false;
  for (int ch = 0; ch < 2; ++ch)
    for (int r = 0; r < 32; ++r)
      for (int c = 0; c < 32; ++c) {
        const std::size_t i =
            (static_cast<std::size_t>(ch) * 32 + static_cast<std::size_t>(r)) * 32 + c;
        if (mask.sampled[static_cast<std::size_t>(c)]) {
          sampled_changed |= noisy.input.data()[i] != clean.input.data()[i];
        } else {
          CHECK(noisy.input.data()[i] == 0.0);
        }
      }
  CHECK(sampled_changed);
  // Same seed, same draw.
  TrainingPair again = make_training_pair(s, mask, 0.05, 42, false);
  CHECK(again.input.data() == noisy.input.data());
}

TEST_CASE("training_mask: fixed kind freezes one equispaced mask") {
  TrainConfig cfg = tiny_config(ModelKind::Fixed, 11);
  Mask m11 = training_mask(cfg, 64, 1, 0);
  Mask m53 = training_mask(cfg, 64, 5, 3);
  CHECK(m11.spec.pattern == MaskPattern::EquispacedFixed);
  CHECK(m11.sampled == m53.sampled);

  // The frozen template also ignores the run seed.
  TrainConfig other = tiny_config(ModelKind::Fixed, 999);
  CHECK(training_mask(other, 64, 2, 1).sampled == m11.sampled);
}

TEST_CASE("training_mask: baseline and mask kinds redraw offsets per epoch and sample") {
  TrainConfig cfg = tiny_config(ModelKind::Baseline, 11);
  Mask a = training_mask(cfg, 64, 1, 0);
  CHECK(a.spec.pattern == MaskPattern::EquispacedRandomOffset);
  CHECK(training_mask(cfg, 64, 1, 0).sampled == a.sampled); // deterministic

  // Offsets vary across epochs and dataset indices (some repeats are fine;
  // demand at least two distinct masks over a small sweep of each axis).
  bool epoch_varies = false, index_varies = false;
  for (int e = 2; e <= 12; ++e) epoch_varies |= training_mask(cfg, 64, e, 0).sampled != a.sampled;
  for (int i = 1; i <= 10; ++i) index_varies |= training_mask(cfg, 64, 1, i).sampled != a.sampled;
  CHECK(epoch_varies);
  CHECK(index_varies);

  // The mask-conditioned kind sees the same mask stream as the baseline.
  TrainConfig mk = tiny_config(ModelKind::Mask, 11);
  CHECK(training_mask(mk, 64, 3, 2).sampled == training_mask(cfg, 64, 3, 2).sampled);

  // R and cf follow the config.
  TrainConfig r8 = cfg;
  r8.train_mask_r = 8;
  r8.train_mask_cf = 0.04;
  Mask m8 = training_mask(r8, 64, 1, 0);
  CHECK(m8.spec.acceleration == 8);
  CHECK(m8.num_sampled() < a.num_sampled());
}

TEST_CASE("validation_mask: frozen per index, shared across kinds, varies by run seed") {
  TrainConfig base = tiny_config(ModelKind::Baseline, 21);
  Mask v0 = validation_mask(base, 64, 0);
  CHECK(v0.spec.pattern == MaskPattern::EquispacedRandomOffset);
  CHECK(validation_mask(base, 64, 0).sampled == v0.sampled);

  TrainConfig fixed = tiny_config(ModelKind::Fixed, 21);
  TrainConfig mask_kind = tiny_config(ModelKind::Mask, 21);
  CHECK(validation_mask(fixed, 64, 0).sampled == v0.sampled);
  CHECK(validation_mask(mask_kind, 64, 0).sampled == v0.sampled);

  bool varies = false;
  for (std::uint64_t s = 22; s < 40 && !varies; ++s) {
    TrainConfig other = tiny_config(ModelKind::Baseline, s);
    varies = validation_mask(other, 64, 0).sampled != v0.sampled;
  }
  CHECK(varies);
}

TEST_CASE("reconstruct with an untrained model is bitwise zero-fill") {
  PhantomSample s = gen_phantom(Family::A, 32, 32, 31);
  Mask mask = gen_mask(MaskSpec{32, 4, 0.08, MaskPattern::RandomUniform, 2});
  ComplexGrid k_us = apply_forward_model(s.image, mask, 0.0, 0);

  for (int in_ch : {2, 3}) {
    UnetModel model(UnetConfig{in_ch, 2, 4}, 404); // fresh: residual head is zero
    Image recon = reconstruct(model, k_us, mask);
    Image zf = zero_fill_recon(k_us);
    REQUIRE(recon.px.size() == zf.px.size());
    for (std::size_t i = 0; i < zf.px.size(); ++i) CHECK(recon.px[i] == zf.px[i]);
  }
}

TEST_CASE("reconstruct consults the mask channel on 3-channel models") {
  PhantomSample s = gen_phantom(Family::A, 32, 32, 32);
  Mask mask = gen_mask(MaskSpec{32, 4, 0.08, MaskPattern::RandomUniform, 3});
  Mask other = gen_mask(MaskSpec{32, 4, 0.08, MaskPattern::RandomUniform, 4});
  REQUIRE(mask.sampled != other.sampled);
  ComplexGrid k_us = apply_forward_model(s.image, mask, 0.0, 0);

  UnetModel model(UnetConfig{3, 1, 2}, 7);
  for (auto& p : model.params())
    for (auto& v : p.tensor.data()) v += 0.01; // wake the residual path

  Image with_true_mask = reconstruct(model, k_us, mask);
  Image with_other_mask = reconstruct(model, k_us, other);
  CHECK(with_true_mask.px != with_other_mask.px);

  // A 2-channel model is mask-blind by construction: the mask argument only
  // describes the data, so swapping it changes nothing.
  UnetModel blind(UnetConfig{2, 1, 2}, 7);
  for (auto& p : blind.params())
    for (auto& v : p.tensor.data()) v += 0.01;
  CHECK(reconstruct(blind, k_us, mask).px == reconstruct(blind, k_us, other).px);
}

TEST_CASE("train_model: log shape, lr schedule, best checkpoint bookkeeping") {
  TrainConfig cfg = tiny_config(ModelKind::Baseline, 77);
  cfg.epochs = 4;
  cfg.lr_drop_epoch = 3;
  const std::string out = fresh_dir("train-basic");
  TrainResult res = train_model(cfg, out);

  REQUIRE(res.log.size() == 4);
  for (int e = 0; e < 4; ++e) {
    CHECK(res.log[static_cast<std::size_t>(e)].epoch == e + 1);
    CHECK(std::isfinite(res.log[static_cast<std::size_t>(e)].train_loss));
    CHECK(res.log[static_cast<std::size_t>(e)].has_val);
  }
  CHECK(res.log[0].lr == 0.003);
  CHECK(res.log[1].lr == 0.003);
  CHECK(res.log[2].lr == doctest::Approx(0.0003).epsilon(1e-15)); // drop at epoch 3
  CHECK(res.log[3].lr == doctest::Approx(0.0003).epsilon(1e-15));

  double min_val = 1e300;
  int argmin = 0;
  for (const auto& row : res.log)
    if (row.has_val && row.val_loss < min_val) {
      min_val = row.val_loss;
      argmin = row.epoch;
    }
  CHECK(res.best_epoch == argmin);
  CHECK(res.best_val_loss == min_val);

  LoadedCheckpoint best = load_checkpoint(res.checkpoint_path);
  CHECK(best.info.kind == "baseline");
  CHECK(best.info.epoch == res.best_epoch);
  CHECK(best.info.val_loss == res.best_val_loss);
  CHECK(best.info.train_mask_pattern == "equispaced");
  CHECK(best.info.train_mask_r == 4);
  CHECK(best.info.train_mask_cf == 0.08);
  CHECK(best.model.config().in_channels == 2);
  CHECK(best.has_opt_state);

  // CSV: header plus one row per epoch, val populated each epoch.
  const auto lines = read_lines(res.log_path);
  REQUIRE(lines.size() == 5);
  CHECK(lines[0] == "epoch,train_loss,val_loss,lr,seconds");
  CHECK(lines[1].substr(0, 2) == "1,");
}

TEST_CASE("train_model: val_every skips validation on off epochs") {
  TrainConfig cfg = tiny_config(ModelKind::Fixed, 78);
  cfg.epochs = 5;
  cfg.val_every = 2;
  const std::string out = fresh_dir("train-valevery");
  TrainResult res = train_model(cfg, out);
  REQUIRE(res.log.size() == 5);
  CHECK_FALSE(res.log[0].has_val); // epoch 1
  CHECK(res.log[1].has_val);       // epoch 2
  CHECK_FALSE(res.log[2].has_val);
  CHECK(res.log[3].has_val);
  CHECK(res.log[4].has_val); // final epoch always validates

  // Blank val_loss cell in the CSV on skipped epochs.
  const auto lines = read_lines(res.log_path);
  std::stringstream row1(lines[1]);
  std::string field;
  std::getline(row1, field, ','); // epoch
  std::getline(row1, field, ','); // train_loss
  std::getline(row1, field, ','); // val_loss
  CHECK(field.empty());
}

TEST_CASE("train_model: mask kind trains a 3-channel net") {
  TrainConfig cfg = tiny_config(ModelKind::Mask, 79);
  cfg.epochs = 2;
  const std::string out = fresh_dir("train-maskkind");
  TrainResult res = train_model(cfg, out);
  LoadedCheckpoint best = load_checkpoint(res.checkpoint_path);
  CHECK(best.info.kind == "mask");
  CHECK(best.model.config().in_channels == 3);
  CHECK(best.info.train_mask_pattern == "equispaced");
}

TEST_CASE("train_model is deterministic and thread-count invariant") {
  TrainConfig cfg = tiny_config(ModelKind::Baseline, 80);
  cfg.epochs = 3;
  cfg.batch_size = 3; // odd batch: exercises the tail batch path

  cfg.threads = 1;
  TrainResult a = train_model(cfg, fresh_dir("train-det-a"));
  TrainResult b = train_model(cfg, fresh_dir("train-det-b"));
  cfg.threads = 3;
  TrainResult c = train_model(cfg, fresh_dir("train-det-c"));

  REQUIRE(a.log.size() == b.log.size());
  REQUIRE(a.log.size() == c.log.size());
  for (std::size_t i = 0; i < a.log.size(); ++i) {
    CHECK(a.log[i].train_loss == b.log[i].train_loss); // bitwise
    CHECK(a.log[i].val_loss == b.log[i].val_loss);
    CHECK(a.log[i].train_loss == c.log[i].train_loss); // thread invariance
    CHECK(a.log[i].val_loss == c.log[i].val_loss);
  }

  // CSVs agree byte-for-byte once wall time is stripped.
  const auto la = read_lines(a.log_path);
  const auto lc = read_lines(c.log_path);
  REQUIRE(la.size() == lc.size());
  for (std::size_t i = 0; i < la.size(); ++i) CHECK(drop_seconds(la[i]) == drop_seconds(lc[i]));

  // Checkpointed weights agree bitwise too.
  LoadedCheckpoint ca = load_checkpoint(a.checkpoint_path);
  LoadedCheckpoint cc = load_checkpoint(c.checkpoint_path);
  REQUIRE(ca.model.params().size() == cc.model.params().size());
  for (std::size_t i = 0; i < ca.model.params().size(); ++i)
    CHECK(ca.model.params()[i].tensor.data() == cc.model.params()[i].tensor.data());

  // A different seed trains differently.
  TrainConfig other = cfg;
  other.seed = 81;
  TrainResult d = train_model(other, fresh_dir("train-det-d"));
  CHECK(d.log.back().train_loss != a.log.back().train_loss);
}

TEST_CASE("train_model overfits a single sample") {
  DatasetSpec spec;
  spec.height = 32;
  spec.width = 32;
  spec.seed = 777;
  spec.train_a = 1;
  spec.val_a = 1;
  spec.test_a = 1;
  spec.test_b = 1;
  const std::string dir = fresh_dir("train-overfit-data");
  make_dataset(spec, dir);

  TrainConfig cfg;
  cfg.kind = ModelKind::Fixed; // frozen mask: the task is a fixed mapping
  cfg.manifest = dir + "/manifest.json";
  cfg.epochs = 200;
  cfg.batch_size = 1;
  cfg.lr = 0.01;
  cfg.lr_drop_epoch = 201; // never drop
  cfg.val_every = 50;
  cfg.seed = 3;
  cfg.depth = 1;
  cfg.base_channels = 4;

  TrainResult res = train_model(cfg, fresh_dir("train-overfit"));
  const double first = res.log.front().train_loss;
  const double last = res.log.back().train_loss;
  CAPTURE(first);
  CAPTURE(last);
  CHECK(last < 0.1 * first);
}

TEST_CASE("train_model validates its config and dataset") {
  TrainConfig cfg = tiny_config(ModelKind::Fixed, 1);
  cfg.epochs = 0;
  CHECK_THROWS_AS(train_model(cfg, fresh_dir("train-err")), std::invalid_argument);
  cfg = tiny_config(ModelKind::Fixed, 1);
  cfg.manifest = "";
  CHECK_THROWS_AS(train_model(cfg, fresh_dir("train-err")), std::invalid_argument);
  cfg = tiny_config(ModelKind::Fixed, 1);
  cfg.manifest = "/nonexistent/manifest.json";
  CHECK_THROWS_AS(train_model(cfg, fresh_dir("train-err")), std::runtime_error);
}
