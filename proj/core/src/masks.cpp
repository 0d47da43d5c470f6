#include "mrprime/masks.hpp"

#include <cmath>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "mrprime/rng.hpp"

namespace mrprime {

namespace {

int iround(double x) { return static_cast<int>(std::lround(x)); }

} // namespace

std::string to_string(MaskPattern p) {
  switch (p) {
    case MaskPattern::EquispacedFixed: return "equispaced-fixed";
    case MaskPattern::EquispacedRandomOffset: return "equispaced";
    case MaskPattern::RandomUniform: return "random";
  }
  throw std::logic_error("unknown mask pattern");
}

MaskPattern mask_pattern_from_string(const std::string& s) {
  if (s == "equispaced-fixed") return MaskPattern::EquispacedFixed;
  if (s == "equispaced") return MaskPattern::EquispacedRandomOffset;
  if (s == "random") return MaskPattern::RandomUniform;
  throw std::invalid_argument("unknown mask pattern: " + s +
                              " (expected equispaced-fixed | equispaced | random)");
}

int Mask::num_sampled() const {
  int n = 0;
  for (bool b : sampled) n += b ? 1 : 0;
  return n;
}

std::vector<int> Mask::sampled_indices() const {
  std::vector<int> idx;
  for (int c = 0; c < width; ++c)
    if (sampled[static_cast<std::size_t>(c)]) idx.push_back(c);
  return idx;
}

MaskBudget mask_budget(const MaskSpec& spec) {
  const int W = spec.width;
  if (W < 1) throw std::invalid_argument("mask: width must be >= 1");
  if (spec.acceleration < 2) throw std::invalid_argument("mask: acceleration must be >= 2");
  if (!(spec.center_fraction > 0.0 && spec.center_fraction < 1.0))
    throw std::invalid_argument("mask: center_fraction must lie in (0, 1)");
  MaskBudget b;
  b.low = iround(spec.center_fraction * W);
  b.total = iround(static_cast<double>(W) / spec.acceleration);
  if (b.low < 1) throw std::invalid_argument("mask: round(cf*W) must be >= 1");
  if (b.low > W / spec.acceleration)
    throw std::invalid_argument("mask: center block exceeds the sampling budget");
  b.outer = b.total - b.low;
  if (b.outer <= 0) throw std::invalid_argument("mask: no outer budget (total <= center block)");
  b.stride = iround(static_cast<double>(W - b.low) / b.outer);
  if (b.stride < 1) throw std::invalid_argument("mask: stride < 1");
  b.center_start = W / 2 - b.low / 2;
  return b;
}

Mask gen_mask(const MaskSpec& spec) {
  const MaskBudget b = mask_budget(spec);
  const int W = spec.width;
  Mask m;
  m.width = W;
  m.spec = spec;
  m.sampled.assign(static_cast<std::size_t>(W), false);
  for (int c = b.center_start; c < b.center_start + b.low; ++c)
    m.sampled[static_cast<std::size_t>(c)] = true;

  // Non-center indices in ascending column order.
  std::vector<int> nc;
  nc.reserve(static_cast<std::size_t>(W - b.low));
  for (int c = 0; c < W; ++c)
    if (c < b.center_start || c >= b.center_start + b.low) nc.push_back(c);

  switch (spec.pattern) {
    case MaskPattern::EquispacedFixed:
    case MaskPattern::EquispacedRandomOffset: {
      int offset = 0;
      if (spec.pattern == MaskPattern::EquispacedRandomOffset) {
        Rng rng(spec.seed);
        offset = static_cast<int>(rng.uniform_int(0, b.stride - 1));
      }
      // Every stride-th non-center index, capped at the outer budget.
      int taken = 0;
      for (std::size_t i = static_cast<std::size_t>(offset);
           i < nc.size() && taken < b.outer; i += static_cast<std::size_t>(b.stride), ++taken)
        m.sampled[static_cast<std::size_t>(nc[i])] = true;
      break;
    }
    case MaskPattern::RandomUniform: {
      Rng rng(spec.seed);
      const std::vector<int> pick =
          rng.sample_without_replacement(static_cast<int>(nc.size()), b.outer);
      for (int i : pick) m.sampled[static_cast<std::size_t>(nc[static_cast<std::size_t>(i)])] = true;
      break;
    }
  }
  return m;
}

Tensor mask_to_channel(const Mask& mask, int height) {
  if (height < 1) throw std::invalid_argument("mask_to_channel: height must be >= 1");
  const int W = mask.width;
  Tensor t({1, 1, height, W});
  double* p = t.ptr();
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < W; ++x)
      p[static_cast<std::int64_t>(y) * W + x] = mask.sampled[static_cast<std::size_t>(x)] ? 1.0 : 0.0;
  return t;
}

ComplexGrid apply_mask(const ComplexGrid& k, const Mask& mask) {
  if (k.width != mask.width)
    throw std::invalid_argument("apply_mask: width mismatch (" + std::to_string(k.width) +
                                " vs " + std::to_string(mask.width) + ")");
  ComplexGrid out = k;
  for (int y = 0; y < out.height; ++y)
    for (int x = 0; x < out.width; ++x)
      if (!mask.sampled[static_cast<std::size_t>(x)]) out.at(y, x) = {0.0, 0.0};
  return out;
}

std::string mask_to_json(const Mask& mask) {
  nlohmann::json j;
  j["width"] = mask.width;
  j["sampled_indices"] = mask.sampled_indices();
  j["spec"] = {{"pattern", to_string(mask.spec.pattern)},
               {"R", mask.spec.acceleration},
               {"cf", mask.spec.center_fraction},
               {"seed", mask.spec.seed}};
  return j.dump(2);
}

Mask mask_from_json(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  Mask m;
  m.width = j.at("width").get<int>();
  if (m.width < 1) throw std::invalid_argument("mask json: bad width");
  m.sampled.assign(static_cast<std::size_t>(m.width), false);
  for (const auto& idx : j.at("sampled_indices")) {
    const int c = idx.get<int>();
    if (c < 0 || c >= m.width) throw std::invalid_argument("mask json: column out of range");
    m.sampled[static_cast<std::size_t>(c)] = true;
  }
  const auto& s = j.at("spec");
  m.spec.width = m.width;
  m.spec.pattern = mask_pattern_from_string(s.at("pattern").get<std::string>());
  m.spec.acceleration = s.at("R").get<int>();
  m.spec.center_fraction = s.at("cf").get<double>();
  m.spec.seed = s.at("seed").get<std::uint64_t>();
  return m;
}

} // namespace mrprime
