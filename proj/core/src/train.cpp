#include "mrprime/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <utility>

#include <nlohmann/json.hpp>

#include "mrprime/ops.hpp"
#include "mrprime/parallel.hpp"
#include "mrprime/rmsprop.hpp"
#include "mrprime/rng.hpp"

namespace mrprime {

namespace {

std::string fmt_double(double v, const char* spec = "%.17g") {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

} // namespace

std::string to_string(ModelKind k) {
  switch (k) {
    case ModelKind::Fixed: return "fixed";
    case ModelKind::Baseline: return "baseline";
    case ModelKind::Mask: return "mask";
  }
  throw std::invalid_argument("to_string: bad ModelKind");
}

ModelKind model_kind_from_string(const std::string& s) {
  if (s == "fixed") return ModelKind::Fixed;
  if (s == "baseline") return ModelKind::Baseline;
  if (s == "mask") return ModelKind::Mask;
  throw std::invalid_argument("model_kind_from_string: unknown kind '" + s + "'");
}

int TrainConfig::resolved_drop_epoch() const {
  if (lr_drop_epoch > 0) return lr_drop_epoch;
  return std::max(1, static_cast<int>(std::lround(0.2 * epochs)));
}

TrainConfig train_config_from_json(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  TrainConfig cfg;
  cfg.kind = model_kind_from_string(j.value("kind", to_string(cfg.kind)));
  cfg.manifest = j.value("manifest", cfg.manifest);
  cfg.epochs = j.value("epochs", cfg.epochs);
  cfg.batch_size = j.value("batch_size", cfg.batch_size);
  cfg.lr = j.value("lr", cfg.lr);
  cfg.lr_drop_epoch = j.value("lr_drop_epoch", cfg.lr_drop_epoch);
  cfg.lr_drop_factor = j.value("lr_drop_factor", cfg.lr_drop_factor);
  cfg.seed = j.value("seed", cfg.seed);
  cfg.val_every = j.value("val_every", cfg.val_every);
  cfg.sigma = j.value("sigma", cfg.sigma);
  cfg.train_mask_r = j.value("train_mask_r", cfg.train_mask_r);
  cfg.train_mask_cf = j.value("train_mask_cf", cfg.train_mask_cf);
  cfg.depth = j.value("depth", cfg.depth);
  cfg.base_channels = j.value("base_channels", cfg.base_channels);
  cfg.threads = j.value("threads", cfg.threads);
  return cfg;
}

std::string train_config_to_json(const TrainConfig& cfg) {
  nlohmann::json j;
  j["kind"] = to_string(cfg.kind);
  j["manifest"] = cfg.manifest;
  j["epochs"] = cfg.epochs;
  j["batch_size"] = cfg.batch_size;
  j["lr"] = cfg.lr;
  j["lr_drop_epoch"] = cfg.lr_drop_epoch;
  j["lr_drop_factor"] = cfg.lr_drop_factor;
  j["seed"] = cfg.seed;
  j["val_every"] = cfg.val_every;
  j["sigma"] = cfg.sigma;
  j["train_mask_r"] = cfg.train_mask_r;
  j["train_mask_cf"] = cfg.train_mask_cf;
  j["depth"] = cfg.depth;
  j["base_channels"] = cfg.base_channels;
  j["threads"] = cfg.threads;
  return j.dump(2) + "\n";
}

TrainingPair make_training_pair(const PhantomSample& sample, const Mask& mask, double sigma,
                                std::uint64_t noise_seed, bool with_mask_channel) {
  if (mask.width != sample.image.width)
    throw std::invalid_argument("make_training_pair: mask width " + std::to_string(mask.width) +
                                " does not match image width " +
                                std::to_string(sample.image.width));
  const ComplexGrid k_full = fft2c(sample.image);
  const ComplexGrid k_us = apply_forward_model_k(k_full, mask, sigma, noise_seed);
  TrainingPair pair;
  pair.input = pack_channels(log_transform(k_us));
  pair.target = pack_channels(log_transform(k_full));
  if (with_mask_channel) pair.mask_channel = mask_to_channel(mask, sample.image.height);
  return pair;
}

Mask training_mask(const TrainConfig& cfg, int width, int epoch, std::int64_t dataset_index) {
  MaskSpec spec;
  spec.width = width;
  spec.acceleration = cfg.train_mask_r;
  spec.center_fraction = cfg.train_mask_cf;
  if (cfg.kind == ModelKind::Fixed) {
    spec.pattern = MaskPattern::EquispacedFixed;
    spec.seed = 0;
  } else {
    spec.pattern = MaskPattern::EquispacedRandomOffset;
    const std::uint64_t epoch_seed =
        derive_seed(cfg.seed, "train-mask-epoch", static_cast<std::uint64_t>(epoch));
    spec.seed = derive_seed(epoch_seed, "train-mask-idx", static_cast<std::uint64_t>(dataset_index));
  }
  return gen_mask(spec);
}

Mask validation_mask(const TrainConfig& cfg, int width, std::int64_t val_index) {
  MaskSpec spec;
  spec.width = width;
  spec.acceleration = cfg.train_mask_r;
  spec.center_fraction = cfg.train_mask_cf;
  spec.pattern = MaskPattern::EquispacedRandomOffset;
  spec.seed = derive_seed(cfg.seed, "val-mask", static_cast<std::uint64_t>(val_index));
  return gen_mask(spec);
}

Image reconstruct(const UnetModel& model, const ComplexGrid& k_us, const Mask& mask) {
  if (mask.width != k_us.width)
    throw std::invalid_argument("reconstruct: mask width " + std::to_string(mask.width) +
                                " does not match k-space width " + std::to_string(k_us.width));
  const bool want_mask_channel = model.config().in_channels == 3;
  const ComplexGrid in_t = log_transform(k_us);
  const Tensor input = pack_channels(in_t);
  const Tensor mask_channel =
      want_mask_channel ? mask_to_channel(mask, k_us.height) : Tensor();
  const Tensor out = model.forward(nullptr, input, mask_channel);
  const ComplexGrid out_t = unpack_channels(out);
  // Apply the network's k-space correction as a compensated difference so a
  // zero residual (out_t == in_t) leaves k_us bit-for-bit untouched instead of
  // dragging it through the transform round trip.
  const ComplexGrid pred = inverse_log_transform(out_t);
  const ComplexGrid base = inverse_log_transform(in_t);
  ComplexGrid k_hat(k_us.height, k_us.width);
  for (std::size_t i = 0; i < k_hat.v.size(); ++i)
    k_hat.v[i] = k_us.v[i] + (pred.v[i] - base.v[i]);
  return zero_fill_recon(k_hat);
}

namespace {

void write_train_log(const std::string& path, const std::vector<TrainLogRow>& rows) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("train_model: cannot write " + path);
  out << "epoch,train_loss,val_loss,lr,seconds\n";
  for (const auto& r : rows) {
    out << r.epoch << ',' << fmt_double(r.train_loss) << ',';
    if (r.has_val) out << fmt_double(r.val_loss);
    out << ',' << fmt_double(r.lr) << ',' << fmt_double(r.seconds, "%.3f") << '\n';
  }
  if (!out) throw std::runtime_error("train_model: write failed for " + path);
}

} // namespace

TrainResult train_model(const TrainConfig& cfg, const std::string& out_dir) {
  namespace fs = std::filesystem;
  using clock = std::chrono::steady_clock;

  if (cfg.epochs < 1) throw std::invalid_argument("train_model: epochs must be >= 1");
  if (cfg.batch_size < 1) throw std::invalid_argument("train_model: batch_size must be >= 1");
  if (cfg.val_every < 1) throw std::invalid_argument("train_model: val_every must be >= 1");
  if (cfg.manifest.empty()) throw std::invalid_argument("train_model: manifest path is empty");

  const DatasetManifest manifest = load_manifest(cfg.manifest);
  const auto train_entries = manifest.split_entries("train");
  const auto val_entries = manifest.split_entries("val");
  if (train_entries.empty())
    throw std::runtime_error("train_model: no train split in " + cfg.manifest);
  if (val_entries.empty())
    throw std::runtime_error("train_model: no val split in " + cfg.manifest);

  const int H = manifest.height, W = manifest.width;
  const int threads = cfg.threads > 0 ? cfg.threads : num_threads();
  const bool with_mask_channel = cfg.kind == ModelKind::Mask;
  const std::int64_t n_train = static_cast<std::int64_t>(train_entries.size());
  const std::int64_t n_val = static_cast<std::int64_t>(val_entries.size());

  // Per-sample caches; with sigma == 0 every epoch after this is FFT-free.
  std::vector<ComplexGrid> k_full(n_train);
  std::vector<Tensor> target(n_train);
  parallel_for(
      n_train,
      [&](std::int64_t i) {
        const PhantomSample s = load_sample(manifest, *train_entries[i]);
        k_full[i] = fft2c(s.image);
        target[i] = pack_channels(log_transform(k_full[i]));
      },
      threads);

  std::vector<Tensor> val_input(n_val), val_target(n_val), val_mask_channel(n_val);
  parallel_for(
      n_val,
      [&](std::int64_t i) {
        const PhantomSample s = load_sample(manifest, *val_entries[i]);
        const Mask m = validation_mask(cfg, W, i);
        const ComplexGrid kf = fft2c(s.image);
        const ComplexGrid kus =
            apply_forward_model_k(kf, m, cfg.sigma, derive_seed(cfg.seed, "val-noise", i));
        val_input[i] = pack_channels(log_transform(kus));
        val_target[i] = pack_channels(log_transform(kf));
        if (with_mask_channel) val_mask_channel[i] = mask_to_channel(m, H);
      },
      threads);

  UnetConfig net_cfg;
  net_cfg.in_channels = with_mask_channel ? 3 : 2;
  net_cfg.depth = cfg.depth;
  net_cfg.base_channels = cfg.base_channels;
  UnetModel model(net_cfg, derive_seed(cfg.seed, "init"));
  Rmsprop opt(model.params(), RmspropConfig{cfg.lr, 0.99, 1e-8});
  const std::size_t n_params = model.params().size();

  fs::create_directories(out_dir);
  TrainResult result;
  result.checkpoint_path = (fs::path(out_dir) / "best.ckpt").string();
  result.log_path = (fs::path(out_dir) / "train_log.csv").string();

  const int drop_epoch = cfg.resolved_drop_epoch();
  double best_val = std::numeric_limits<double>::infinity();
  int best_epoch = 0;

  std::vector<std::int64_t> order(static_cast<std::size_t>(n_train));
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto epoch_start = clock::now();
    const double lr_e = epoch >= drop_epoch ? cfg.lr * cfg.lr_drop_factor : cfg.lr;
    opt.set_lr(lr_e);

    std::iota(order.begin(), order.end(), std::int64_t{0});
    Rng shuffle_rng(derive_seed(cfg.seed, "shuffle", static_cast<std::uint64_t>(epoch)));
    shuffle_rng.shuffle(order);
    const std::uint64_t epoch_seed =
        derive_seed(cfg.seed, "train-mask-epoch", static_cast<std::uint64_t>(epoch));

    double loss_sum = 0.0;
    for (std::int64_t start = 0; start < n_train; start += cfg.batch_size) {
      const std::int64_t bsz = std::min<std::int64_t>(cfg.batch_size, n_train - start);
      std::vector<std::vector<std::vector<double>>> slot_grads(static_cast<std::size_t>(bsz));
      std::vector<double> slot_loss(static_cast<std::size_t>(bsz), 0.0);

      // Workers own a model clone each so gradient accumulation never races;
      // the reduction below runs in slot order, making the update independent
      // of the thread count.
      parallel_for(
          bsz,
          [&](std::int64_t s) {
            const std::int64_t di = order[static_cast<std::size_t>(start + s)];
            const Mask m = training_mask(cfg, W, epoch, di);
            const ComplexGrid kus = apply_forward_model_k(
                k_full[di], m, cfg.sigma, derive_seed(epoch_seed, "train-noise-idx",
                                                      static_cast<std::uint64_t>(di)));
            const Tensor input = pack_channels(log_transform(kus));
            const Tensor mask_channel =
                with_mask_channel ? mask_to_channel(m, H) : Tensor();
            UnetModel worker = model.clone();
            Tape tape;
            const Tensor out = worker.forward(&tape, input, mask_channel);
            const Tensor loss = ops::l1_loss(&tape, out, target[di]);
            slot_loss[static_cast<std::size_t>(s)] = loss.item();
            tape.backward(loss);
            auto& grads = slot_grads[static_cast<std::size_t>(s)];
            grads.resize(n_params);
            auto& wp = worker.params();
            for (std::size_t p = 0; p < n_params; ++p)
              if (wp[p].tensor.has_grad()) grads[p] = std::move(wp[p].tensor.grad());
          },
          threads);

      for (std::int64_t s = 0; s < bsz; ++s) {
        const double l = slot_loss[static_cast<std::size_t>(s)];
        if (!std::isfinite(l))
          throw std::runtime_error("train_model: non-finite training loss at epoch " +
                                   std::to_string(epoch) + ", sample index " +
                                   std::to_string(order[static_cast<std::size_t>(start + s)]));
        loss_sum += l;
      }

      auto& params = model.params();
      const double scale = 1.0 / static_cast<double>(bsz);
      for (std::size_t p = 0; p < n_params; ++p) {
        auto& g = params[p].tensor.grad(); // allocates zeros on first touch
        std::fill(g.begin(), g.end(), 0.0);
        for (std::int64_t s = 0; s < bsz; ++s) {
          const auto& sg = slot_grads[static_cast<std::size_t>(s)][p];
          if (sg.empty()) continue;
          for (std::size_t k = 0; k < g.size(); ++k) g[k] += sg[k];
        }
        for (double& v : g) v *= scale;
      }
      opt.step();
    }

    TrainLogRow row;
    row.epoch = epoch;
    row.train_loss = loss_sum / static_cast<double>(n_train);
    row.lr = lr_e;

    if (epoch % cfg.val_every == 0 || epoch == cfg.epochs) {
      std::vector<double> vloss(static_cast<std::size_t>(n_val), 0.0);
      parallel_for(
          n_val,
          [&](std::int64_t i) {
            const Tensor mc = with_mask_channel ? val_mask_channel[i] : Tensor();
            const Tensor out = model.forward(nullptr, val_input[i], mc);
            vloss[static_cast<std::size_t>(i)] = ops::l1_loss(nullptr, out, val_target[i]).item();
          },
          threads);
      double vsum = 0.0;
      for (double v : vloss) vsum += v;
      row.val_loss = vsum / static_cast<double>(n_val);
      row.has_val = true;
      if (!std::isfinite(row.val_loss))
        throw std::runtime_error("train_model: non-finite validation loss at epoch " +
                                 std::to_string(epoch));
      if (row.val_loss < best_val) {
        best_val = row.val_loss;
        best_epoch = epoch;
        CheckpointInfo info;
        info.kind = to_string(cfg.kind);
        info.init_seed = model.init_seed();
        info.epoch = epoch;
        info.val_loss = row.val_loss;
        info.train_mask_pattern = to_string(cfg.kind == ModelKind::Fixed
                                                ? MaskPattern::EquispacedFixed
                                                : MaskPattern::EquispacedRandomOffset);
        info.train_mask_r = cfg.train_mask_r;
        info.train_mask_cf = cfg.train_mask_cf;
        save_checkpoint(result.checkpoint_path, model, info, &opt);
      }
    }

    row.seconds =
        std::chrono::duration<double>(clock::now() - epoch_start).count();
    result.log.push_back(row);
    write_train_log(result.log_path, result.log); // rewritten per epoch: crash-visible progress
  }

  result.best_epoch = best_epoch;
  result.best_val_loss = best_val;
  return result;
}

} // namespace mrprime
