#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mrprime/cs.hpp"
#include "mrprime/eval.hpp"
#include "mrprime/phantom.hpp"

namespace mrprime {

/// End-to-end study configuration: dataset, the shared training recipe (three
/// model kinds x several seeds, family-A training masks at R=4), CS reference
/// settings, and report options.
struct SuiteConfig {
  DatasetSpec dataset;
  int epochs = 18;
  int batch_size = 8;
  double lr = 0.01;
  int lr_drop_epoch = 0; // 0 = 20% of epochs
  double lr_drop_factor = 0.1;
  int depth = 3;
  int base_channels = 8;
  double sigma = 0.0;
  int train_mask_r = 4;
  double train_mask_cf = 0.08;
  std::vector<std::uint64_t> seeds = {101, 202, 303};
  CsConfig cs;
  int showcase_samples = 2; // panel PNGs per scenario
  int threads = 0;
};

SuiteConfig suite_config_from_json(const std::string& text);
std::string suite_config_to_json(const SuiteConfig& cfg);

/// One pass/fail line of the directional-replication verdict.
struct SuiteClause {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct SuiteReport {
  std::string out_dir;
  std::string manifest_path;
  std::string aggregates_path;
  std::string summary_path;
  std::vector<std::uint64_t> seeds;
  std::vector<std::string> scenario_names;
  std::vector<std::string> model_labels; // fixed, baseline, mask, zero_fill, cs
  std::vector<std::string> figure_paths;
  std::vector<SuiteClause> clauses;
  bool directional_pass = false; // all clauses
  double wall_seconds = 0.0;
};

/// Drives gen-data -> 3 kinds x seeds trainings -> 6 scenario evaluations per
/// seed -> aggregates.json -> showcase figures -> summary.md under out_dir.
/// Any stage failure is rethrown prefixed with the stage name.
SuiteReport run_suite(const SuiteConfig& cfg, const std::string& out_dir);

} // namespace mrprime
