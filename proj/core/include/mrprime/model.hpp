#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mrprime/tensor.hpp"

namespace mrprime {

struct UnetConfig {
  int in_channels = 2;   // 2 = k-space only, 3 = k-space + mask channel
  int depth = 3;         // number of pooling stages
  int base_channels = 16;
};

/// Encoder-decoder U-Net over transformed k-space with a residual output head:
/// forward returns k_us_t + net(concat(k_us_t, mask?)). Blocks are two 3x3
/// convs + ReLU; downsampling is 2x2 maxpool; upsampling is bilinear with skip
/// concatenation; the head is two 1x1 convs, the last zero-initialized so a
/// fresh model is exactly the identity.
class UnetModel {
 public:
  UnetModel() = default;
  UnetModel(UnetConfig config, std::uint64_t seed);

  /// k_us_t is N x 2 x H x W; mask_channel (N x 1 x H x W) must be supplied
  /// iff in_channels == 3. H and W must be divisible by 2^depth.
  Tensor forward(Tape* tape, const Tensor& k_us_t, const Tensor& mask_channel = Tensor()) const;

  const UnetConfig& config() const { return cfg_; }
  std::vector<Parameter>& params() { return params_; }
  const std::vector<Parameter>& params() const { return params_; }
  std::int64_t param_count() const;
  std::uint64_t init_seed() const { return seed_; }

  /// Deep copy (fresh data and gradient storage) for per-task workers.
  UnetModel clone() const;

 private:
  struct ConvRef {
    int w = -1;
    int b = -1;
  };

  ConvRef add_conv(const std::string& name, int cout, int cin, int k);
  Tensor conv_block(Tape* tape, const Tensor& x, const ConvRef& c1, const ConvRef& c2) const;

  UnetConfig cfg_;
  std::uint64_t seed_ = 0;
  std::vector<Parameter> params_;
  std::vector<std::pair<ConvRef, ConvRef>> enc_;
  std::pair<ConvRef, ConvRef> bottleneck_;
  std::vector<std::pair<ConvRef, ConvRef>> dec_; // deepest level first
  ConvRef head1_, head2_;
};

UnetModel build_unet(const UnetConfig& config, std::uint64_t seed);

} // namespace mrprime
