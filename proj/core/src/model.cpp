#include "mrprime/model.hpp"

#include <cmath>
#include <stdexcept>

#include "mrprime/ops.hpp"
#include "mrprime/rng.hpp"

namespace mrprime {

namespace {

void validate(const UnetConfig& c) {
  if (c.in_channels != 2 && c.in_channels != 3)
    throw std::invalid_argument("unet: in_channels must be 2 or 3");
  if (c.depth < 1) throw std::invalid_argument("unet: depth must be >= 1");
  if (c.base_channels < 1) throw std::invalid_argument("unet: base_channels must be >= 1");
}

} // namespace

UnetModel::ConvRef UnetModel::add_conv(const std::string& name, int cout, int cin, int k) {
  ConvRef r;
  r.w = static_cast<int>(params_.size());
  params_.push_back({Tensor({cout, cin, k, k}, /*requires_grad=*/true), name + ".weight"});
  r.b = static_cast<int>(params_.size());
  params_.push_back({Tensor({cout}, /*requires_grad=*/true), name + ".bias"});
  return r;
}

UnetModel::UnetModel(UnetConfig config, std::uint64_t seed) : cfg_(config), seed_(seed) {
  validate(cfg_);
  const int b = cfg_.base_channels;
  int ch_in = cfg_.in_channels;
  int ch = b;
  for (int lvl = 0; lvl < cfg_.depth; ++lvl) {
    const std::string name = "enc" + std::to_string(lvl);
    enc_.emplace_back(add_conv(name + ".conv1", ch, ch_in, 3), add_conv(name + ".conv2", ch, ch, 3));
    ch_in = ch;
    ch *= 2;
  }
  bottleneck_ = {add_conv("bottleneck.conv1", ch, ch_in, 3), add_conv("bottleneck.conv2", ch, ch, 3)};
  for (int lvl = cfg_.depth - 1; lvl >= 0; --lvl) {
    const int skip = b << lvl;   // encoder channels at this level
    const int up = skip * 2;     // channels arriving from below
    const std::string name = "dec" + std::to_string(lvl);
    dec_.emplace_back(add_conv(name + ".conv1", skip, up + skip, 3),
                      add_conv(name + ".conv2", skip, skip, 3));
  }
  const int mid = b / 2 > 0 ? b / 2 : 1;
  head1_ = add_conv("head.conv1", mid, b, 1);
  head2_ = add_conv("head.conv2", 2, mid, 1);

  // He-style fan-in uniform init, biases zero; the last 1x1 conv stays all-zero
  // so the residual model starts as the identity.
  Rng rng(seed_);
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Parameter& p = params_[i];
    if (static_cast<int>(i) == head2_.w || static_cast<int>(i) == head2_.b) continue;
    if (p.tensor.ndim() == 4) {
      const double fan_in =
          static_cast<double>(p.tensor.dim(1)) * p.tensor.dim(2) * p.tensor.dim(3);
      const double bound = std::sqrt(6.0 / fan_in);
      double* w = p.tensor.ptr();
      const std::int64_t n = p.tensor.numel();
      for (std::int64_t j = 0; j < n; ++j) w[j] = rng.uniform(-bound, bound);
    }
    // biases stay zero
  }
}

Tensor UnetModel::conv_block(Tape* tape, const Tensor& x, const ConvRef& c1,
                             const ConvRef& c2) const {
  Tensor h = ops::relu(tape, ops::conv2d(tape, x, params_[static_cast<std::size_t>(c1.w)].tensor,
                                         params_[static_cast<std::size_t>(c1.b)].tensor));
  return ops::relu(tape, ops::conv2d(tape, h, params_[static_cast<std::size_t>(c2.w)].tensor,
                                     params_[static_cast<std::size_t>(c2.b)].tensor));
}

Tensor UnetModel::forward(Tape* tape, const Tensor& k_us_t, const Tensor& mask_channel) const {
  if (!k_us_t.defined() || k_us_t.ndim() != 4 || k_us_t.dim(1) != 2)
    throw std::invalid_argument("unet forward: k_us_t must be N x 2 x H x W");
  const int H = k_us_t.dim(2), W = k_us_t.dim(3);
  const int div = 1 << cfg_.depth;
  if (H % div != 0 || W % div != 0)
    throw std::invalid_argument("unet forward: spatial dims must be divisible by 2^depth");
  Tensor x;
  if (cfg_.in_channels == 3) {
    if (!mask_channel.defined())
      throw std::invalid_argument("unet forward: mask channel required for 3-channel model");
    if (mask_channel.ndim() != 4 || mask_channel.dim(0) != k_us_t.dim(0) ||
        mask_channel.dim(1) != 1 || mask_channel.dim(2) != H || mask_channel.dim(3) != W)
      throw std::invalid_argument("unet forward: mask channel must be N x 1 x H x W");
    x = ops::concat_channels(tape, k_us_t, mask_channel);
  } else {
    if (mask_channel.defined())
      throw std::invalid_argument("unet forward: 2-channel model accepts no mask channel");
    x = k_us_t;
  }

  std::vector<Tensor> skips;
  skips.reserve(static_cast<std::size_t>(cfg_.depth));
  Tensor h = x;
  for (int lvl = 0; lvl < cfg_.depth; ++lvl) {
    h = conv_block(tape, h, enc_[static_cast<std::size_t>(lvl)].first,
                   enc_[static_cast<std::size_t>(lvl)].second);
    skips.push_back(h);
    h = ops::maxpool2(tape, h);
  }
  h = conv_block(tape, h, bottleneck_.first, bottleneck_.second);
  for (int lvl = cfg_.depth - 1; lvl >= 0; --lvl) {
    h = ops::upsample_bilinear2(tape, h);
    h = ops::concat_channels(tape, h, skips[static_cast<std::size_t>(lvl)]);
    const auto& blk = dec_[static_cast<std::size_t>(cfg_.depth - 1 - lvl)];
    h = conv_block(tape, h, blk.first, blk.second);
  }
  h = ops::conv2d(tape, h, params_[static_cast<std::size_t>(head1_.w)].tensor,
                  params_[static_cast<std::size_t>(head1_.b)].tensor);
  h = ops::conv2d(tape, h, params_[static_cast<std::size_t>(head2_.w)].tensor,
                  params_[static_cast<std::size_t>(head2_.b)].tensor);
  return ops::add(tape, k_us_t, h);
}

std::int64_t UnetModel::param_count() const {
  std::int64_t n = 0;
  for (const Parameter& p : params_) n += p.tensor.numel();
  return n;
}

UnetModel UnetModel::clone() const {
  UnetModel m;
  m.cfg_ = cfg_;
  m.seed_ = seed_;
  m.enc_ = enc_;
  m.bottleneck_ = bottleneck_;
  m.dec_ = dec_;
  m.head1_ = head1_;
  m.head2_ = head2_;
  m.params_.reserve(params_.size());
  for (const Parameter& p : params_) {
    Tensor t = p.tensor.clone();
    t.set_requires_grad(true);
    m.params_.push_back({t, p.name});
  }
  return m;
}

UnetModel build_unet(const UnetConfig& config, std::uint64_t seed) {
  return UnetModel(config, seed);
}

} // namespace mrprime
