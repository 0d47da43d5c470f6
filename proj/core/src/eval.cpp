#include "mrprime/eval.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <stdexcept>

#include "mrprime/checkpoint.hpp"
#include "mrprime/kspace.hpp"
#include "mrprime/parallel.hpp"
#include "mrprime/rng.hpp"
#include "mrprime/train.hpp"

namespace mrprime {

std::vector<Scenario> standard_scenarios() {
  auto make = [](std::string name, MaskPattern p, int r, Family f) {
    Scenario s;
    s.name = std::move(name);
    s.pattern = p;
    s.acceleration = r;
    s.center_fraction = r == 4 ? 0.08 : 0.04;
    s.family = f;
    return s;
  };
  return {
      make("equispaced-r4-famA", MaskPattern::EquispacedRandomOffset, 4, Family::A),
      make("equispaced-r8-famA", MaskPattern::EquispacedRandomOffset, 8, Family::A),
      make("random-r4-famA", MaskPattern::RandomUniform, 4, Family::A),
      make("random-r8-famA", MaskPattern::RandomUniform, 8, Family::A),
      make("fixed-r4-famB", MaskPattern::EquispacedFixed, 4, Family::B),
      make("fixed-r8-famB", MaskPattern::EquispacedFixed, 8, Family::B),
  };
}

Scenario find_scenario(const std::string& name) {
  for (auto& s : standard_scenarios())
    if (s.name == name) return s;
  std::string known;
  for (const auto& s : standard_scenarios()) known += (known.empty() ? "" : ", ") + s.name;
  throw std::invalid_argument("find_scenario: unknown scenario '" + name + "' (known: " + known +
                              ")");
}

std::uint64_t scenario_mask_seed(const std::string& scenario_name, const std::string& sample_id) {
  return derive_seed(fnv1a64(scenario_name.data(), scenario_name.size()), sample_id);
}

Mask scenario_mask(const Scenario& scenario, int width, const std::string& sample_id) {
  MaskSpec spec;
  spec.width = width;
  spec.acceleration = scenario.acceleration;
  spec.center_fraction = scenario.center_fraction;
  spec.pattern = scenario.pattern;
  spec.seed = scenario_mask_seed(scenario.name, sample_id);
  return gen_mask(spec);
}

const EvalModelResult& EvalResult::model(const std::string& label) const {
  for (const auto& m : models)
    if (m.label == label) return m;
  throw std::invalid_argument("EvalResult::model: no reconstructor labeled '" + label + "'");
}

namespace {

std::vector<MetricsRow> score_sample(const Image& recon, const PhantomSample& sample,
                                     const Scenario& sc) {
  std::vector<MetricsRow> rows;
  MetricsRow base;
  base.sample_id = sample.sample_id;
  base.pattern = to_string(sc.pattern);
  base.r = sc.acceleration;
  base.family = family_to_char(sample.family);
  if (sc.region_mode != RegionMode::Boxes) {
    MetricsRow r = base;
    r.region = "full";
    r.nmse = nmse(recon, sample.image);
    r.psnr = psnr(recon, sample.image);
    r.ssim = ssim(recon, sample.image);
    rows.push_back(std::move(r));
  }
  if (sc.region_mode != RegionMode::Full) {
    for (std::size_t b = 0; b < sample.pathology_boxes.size(); ++b) {
      const BBox& box = sample.pathology_boxes[b];
      const RegionMetrics rm = region_metrics(recon, sample.image, box);
      MetricsRow r = base;
      r.region = (box.label.empty() ? std::string("box") : box.label) + std::to_string(b);
      r.nmse = rm.nmse;
      r.psnr = rm.psnr;
      r.ssim = rm.ssim;
      rows.push_back(std::move(r));
    }
  }
  return rows;
}

} // namespace

EvalResult evaluate(const EvalConfig& cfg) {
  namespace fs = std::filesystem;
  if (cfg.manifest.empty()) throw std::invalid_argument("evaluate: manifest path is empty");
  if (cfg.scenario.name.empty()) throw std::invalid_argument("evaluate: scenario has no name");

  const DatasetManifest manifest = load_manifest(cfg.manifest);
  const auto entries = manifest.split_family("test", cfg.scenario.family);
  if (entries.empty())
    throw std::runtime_error("evaluate: no test samples of family " +
                             std::string(1, family_to_char(cfg.scenario.family)) + " in " +
                             cfg.manifest);

  std::vector<std::string> labels;
  std::vector<UnetModel> nets;
  std::set<std::string> seen;
  for (const auto& [label, path] : cfg.checkpoints) {
    if (label.empty() || label == "zero_fill" || label == "cs")
      throw std::invalid_argument("evaluate: reconstructor label '" + label +
                                  "' is empty or reserved");
    if (!seen.insert(label).second)
      throw std::invalid_argument("evaluate: duplicate reconstructor label '" + label + "'");
    LoadedCheckpoint lc = load_checkpoint(path);
    if (lc.info.train_mask_r != 4)
      throw std::runtime_error("evaluate: checkpoint '" + label + "' was trained at R=" +
                               std::to_string(lc.info.train_mask_r) +
                               "; the evaluation protocol requires R=4 training");
    labels.push_back(label);
    nets.push_back(std::move(lc.model));
  }
  const std::size_t n_nets = nets.size();
  labels.push_back("zero_fill");
  labels.push_back("cs");
  const std::size_t n_models = labels.size();

  const std::int64_t n = static_cast<std::int64_t>(entries.size());
  std::vector<std::vector<std::vector<MetricsRow>>> per_sample(static_cast<std::size_t>(n));
  const int threads = cfg.threads > 0 ? cfg.threads : num_threads();
  parallel_for(
      n,
      [&](std::int64_t i) {
        const PhantomSample s = load_sample(manifest, *entries[i]);
        const Mask m = scenario_mask(cfg.scenario, s.image.width, s.sample_id);
        const ComplexGrid k_us = apply_forward_model(s.image, m, 0.0, 0);
        auto& slots = per_sample[static_cast<std::size_t>(i)];
        slots.resize(n_models);
        for (std::size_t mi = 0; mi < n_nets; ++mi)
          slots[mi] = score_sample(reconstruct(nets[mi], k_us, m), s, cfg.scenario);
        slots[n_nets] = score_sample(zero_fill_recon(k_us), s, cfg.scenario);
        slots[n_nets + 1] = score_sample(cs_reconstruct(k_us, m, cfg.cs), s, cfg.scenario);
      },
      threads);

  EvalResult result;
  result.scenario = cfg.scenario;
  for (const auto* e : entries) result.sample_ids.push_back(e->sample_id);

  for (std::size_t mi = 0; mi < n_models; ++mi) {
    EvalModelResult mr;
    mr.label = labels[mi];
    std::vector<double> v_nmse, v_psnr, v_ssim;
    for (std::int64_t i = 0; i < n; ++i) {
      for (const auto& row : per_sample[static_cast<std::size_t>(i)][mi]) {
        if (row.region == "full") {
          v_nmse.push_back(row.nmse);
          v_psnr.push_back(row.psnr);
          v_ssim.push_back(row.ssim);
        }
        mr.rows.push_back(row);
      }
    }
    mr.nmse = mean_std(v_nmse);
    mr.psnr = mean_std(v_psnr);
    mr.ssim = mean_std(v_ssim);
    result.full_nmse[mr.label] = std::move(v_nmse);
    result.full_psnr[mr.label] = std::move(v_psnr);
    result.full_ssim[mr.label] = std::move(v_ssim);
    result.models.push_back(std::move(mr));
  }

  if (!cfg.out_dir.empty()) {
    fs::create_directories(cfg.out_dir);
    for (auto& mr : result.models) {
      const std::string path =
          (fs::path(cfg.out_dir) / (cfg.scenario.name + "__" + mr.label + ".csv")).string();
      std::ofstream out(path, std::ios::binary | std::ios::trunc);
      if (!out) throw std::runtime_error("evaluate: cannot write " + path);
      out << kMetricsCsvHeader << '\n';
      for (const auto& row : mr.rows) out << metrics_row_to_csv(row) << '\n';
      if (!out) throw std::runtime_error("evaluate: write failed for " + path);
      mr.csv_path = path;
    }
  }

  const auto metric_vec = [&](const std::string& label,
                              const std::string& metric) -> const std::vector<double>& {
    if (metric == "nmse") return result.full_nmse.at(label);
    if (metric == "psnr") return result.full_psnr.at(label);
    return result.full_ssim.at(label);
  };
  for (std::size_t a = 0; a < n_models; ++a) {
    for (std::size_t b = a + 1; b < n_models; ++b) {
      for (const char* metric : {"nmse", "psnr", "ssim"}) {
        const auto& va = metric_vec(labels[a], metric);
        const auto& vb = metric_vec(labels[b], metric);
        if (va.size() < 2) continue;
        result.t_tests[labels[a] + "_vs_" + labels[b] + ":" + metric] = paired_t_test(va, vb);
      }
    }
  }
  return result;
}

} // namespace mrprime
