#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mrprime/checkpoint.hpp"
#include "mrprime/kspace.hpp"
#include "mrprime/masks.hpp"
#include "mrprime/model.hpp"
#include "mrprime/phantom.hpp"

namespace mrprime {

enum class ModelKind { Fixed, Baseline, Mask };

std::string to_string(ModelKind k);
ModelKind model_kind_from_string(const std::string& s);

struct TrainConfig {
  ModelKind kind = ModelKind::Baseline;
  std::string manifest;      // dataset manifest path
  int epochs = 30;
  int batch_size = 8;
  double lr = 0.01;
  int lr_drop_epoch = 0;     // 0 = 20% of epochs (rounded, at least 1)
  double lr_drop_factor = 0.1;
  std::uint64_t seed = 0;
  int val_every = 1;
  double sigma = 0.0;        // acquisition noise during training
  int train_mask_r = 4;
  double train_mask_cf = 0.08;
  int depth = 3;
  int base_channels = 16;
  int threads = 0;           // 0 = process default

  int resolved_drop_epoch() const;
};

TrainConfig train_config_from_json(const std::string& text);
std::string train_config_to_json(const TrainConfig& cfg);

struct TrainLogRow {
  int epoch = 0;
  double train_loss = 0.0;
  bool has_val = false;
  double val_loss = 0.0;
  double lr = 0.0;
  double seconds = 0.0;
};

struct TrainResult {
  std::vector<TrainLogRow> log;
  std::string checkpoint_path; // best-validation snapshot
  std::string log_path;
  int best_epoch = 0;
  double best_val_loss = 0.0;
};

/// Transformed-k-space training pair: target = pack(log(fft2c(x))), input =
/// pack(log(apply_forward_model(x, mask, sigma)))) and, when requested, the
/// broadcast mask channel.
struct TrainingPair {
  Tensor input;        // 1 x 2 x H x W
  Tensor mask_channel; // 1 x 1 x H x W, defined only when requested
  Tensor target;       // 1 x 2 x H x W
};

TrainingPair make_training_pair(const PhantomSample& sample, const Mask& mask, double sigma,
                                std::uint64_t noise_seed, bool with_mask_channel);

/// The mask train_model applies to a given training sample at a given epoch
/// (1-based): Fixed = one frozen equispaced mask; Baseline/Mask = equispaced
/// with an offset redrawn per (epoch, sample) from the run seed.
Mask training_mask(const TrainConfig& cfg, int width, int epoch, std::int64_t dataset_index);

/// Frozen per-sample validation mask (one draw at run start from the run seed
/// alone, so all model kinds validate on the same masks).
Mask validation_mask(const TrainConfig& cfg, int width, std::int64_t val_index);

/// Shuffled mini-batch RMSprop on the L1 objective with the step LR schedule.
/// Writes train_log.csv and best.ckpt under out_dir. Deterministic in
/// (dataset, config, seed) regardless of thread count.
TrainResult train_model(const TrainConfig& cfg, const std::string& out_dir);

/// Full reconstruction: push k_us through the model in transformed k-space,
/// apply the predicted residual to k_us, inverse FFT, take magnitudes. A
/// zero-residual (untrained) model reproduces zero_fill_recon bitwise.
Image reconstruct(const UnetModel& model, const ComplexGrid& k_us, const Mask& mask);

} // namespace mrprime
