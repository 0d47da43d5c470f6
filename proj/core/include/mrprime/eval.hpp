#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "mrprime/cs.hpp"
#include "mrprime/masks.hpp"
#include "mrprime/metrics.hpp"
#include "mrprime/phantom.hpp"

namespace mrprime {

enum class RegionMode { Full, Boxes, Both };

/// One distribution-shift test condition: a mask recipe applied to one test
/// family, evaluated over the given regions.
struct Scenario {
  std::string name;
  MaskPattern pattern = MaskPattern::EquispacedRandomOffset;
  int acceleration = 4;
  double center_fraction = 0.08;
  Family family = Family::A;
  RegionMode region_mode = RegionMode::Both;
};

/// The six standard conditions: {equispaced-varying, random} x {R4, R8} on
/// family A and equispaced-fixed x {R4, R8} on family B (cf 0.08 at R4, 0.04
/// at R8).
std::vector<Scenario> standard_scenarios();
Scenario find_scenario(const std::string& name);

/// Mask seed derived from (scenario name, sample id) alone, so every model
/// sees the identical mask on a given sample and masks never depend on run
/// seeds.
std::uint64_t scenario_mask_seed(const std::string& scenario_name, const std::string& sample_id);
Mask scenario_mask(const Scenario& scenario, int width, const std::string& sample_id);

struct EvalConfig {
  std::string manifest;
  /// (label, checkpoint path), evaluated in order. Labels "zero_fill" and
  /// "cs" are reserved for the references appended automatically.
  std::vector<std::pair<std::string, std::string>> checkpoints;
  Scenario scenario;
  CsConfig cs;
  std::string out_dir; // per-model CSVs land here as <scenario>__<label>.csv; empty = skip
  int threads = 0;
};

struct EvalModelResult {
  std::string label;
  std::vector<MetricsRow> rows; // sample order; full row first, then region rows
  std::string csv_path;         // empty when not persisted
  MeanStd nmse, psnr, ssim;     // aggregates over full-image rows
};

struct EvalResult {
  Scenario scenario;
  std::vector<std::string> sample_ids;
  std::vector<EvalModelResult> models; // checkpoint order, then zero_fill, cs
  /// Full-image per-sample metric vectors by label (sample order), the t-test
  /// inputs.
  std::map<std::string, std::vector<double>> full_nmse, full_psnr, full_ssim;
  /// Pairwise paired t-tests over all label pairs, keys "<a>_vs_<b>:<metric>".
  std::map<std::string, TTestResult> t_tests;

  const EvalModelResult& model(const std::string& label) const;
};

/// Reconstruct every test-split sample of the scenario family with every
/// checkpoint plus the zero-fill and CS references; score full-image and
/// pathology-box regions; persist per-sample rows; t-test metric vectors.
EvalResult evaluate(const EvalConfig& cfg);

} // namespace mrprime
