#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "mrprime/model.hpp"
#include "mrprime/rmsprop.hpp"

namespace mrprime {

/// Everything the eval side needs to know about how a model was trained.
struct CheckpointInfo {
  std::string kind;          // "fixed" | "baseline" | "mask"
  std::uint64_t init_seed = 0;
  int epoch = 0;             // epoch the snapshot was taken at (1-based)
  double val_loss = 0.0;     // validation loss of this snapshot
  std::string train_mask_pattern; // pattern string of the training template
  int train_mask_r = 0;
  double train_mask_cf = 0.0;
};

/// Binary checkpoint: magic, little-endian uint32 header length, JSON header
/// (config, kind, parameter names/shapes, optimizer hyperparameters, seed,
/// epoch), then raw little-endian float32 blobs — parameters first, then
/// optimizer square-average state — in header order.
void save_checkpoint(const std::string& path, const UnetModel& model, const CheckpointInfo& info,
                     const Rmsprop* opt);

struct LoadedCheckpoint {
  UnetModel model;
  CheckpointInfo info;
  RmspropConfig opt_config;
  bool has_opt_state = false;
  std::vector<std::vector<double>> opt_state; // square averages, parameter order
};

LoadedCheckpoint load_checkpoint(const std::string& path);

} // namespace mrprime
