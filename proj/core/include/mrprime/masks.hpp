#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mrprime/grid.hpp"
#include "mrprime/tensor.hpp"

namespace mrprime {

enum class MaskPattern { EquispacedFixed, EquispacedRandomOffset, RandomUniform };

std::string to_string(MaskPattern p);
MaskPattern mask_pattern_from_string(const std::string& s);

struct MaskSpec {
  int width = 0;
  int acceleration = 4;        // R
  double center_fraction = 0.08; // cf
  MaskPattern pattern = MaskPattern::EquispacedFixed;
  std::uint64_t seed = 0;
};

/// Cartesian column-sampling mask: sampled[c] = true means k-space column c is
/// acquired. The centered low-frequency block of round(cf*W) columns is always
/// fully sampled.
struct Mask {
  int width = 0;
  std::vector<bool> sampled;
  MaskSpec spec;

  int num_sampled() const;
  std::vector<int> sampled_indices() const;
};

/// Column-budget arithmetic shared by all patterns.
struct MaskBudget {
  int low = 0;    // round(cf * W), centered block size
  int total = 0;  // round(W / R)
  int outer = 0;  // total - low
  int stride = 0; // round((W - low) / outer)
  int center_start = 0; // first column of the centered block (left-biased)
};
MaskBudget mask_budget(const MaskSpec& spec);

Mask gen_mask(const MaskSpec& spec);

/// Broadcast the column mask to an H x W single-channel tensor (1 x 1 x H x W).
Tensor mask_to_channel(const Mask& mask, int height);

/// Zero the unsampled columns of k.
ComplexGrid apply_mask(const ComplexGrid& k, const Mask& mask);

/// JSON round trip: {"width", "sampled_indices", "spec":{pattern,R,cf,seed}}.
std::string mask_to_json(const Mask& mask);
Mask mask_from_json(const std::string& text);

} // namespace mrprime
