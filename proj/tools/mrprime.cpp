// mrprime CLI: dataset generation, training, evaluation, the full study
// suite, plus small utilities (mask preview, CS reconstruction, PNG export).
// Exit codes: 0 success, 1 usage error, 2 runtime failure.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mrprime/cs.hpp"
#include "mrprime/eval.hpp"
#include "mrprime/kspace.hpp"
#include "mrprime/masks.hpp"
#include "mrprime/metrics.hpp"
#include "mrprime/parallel.hpp"
#include "mrprime/phantom.hpp"
#include "mrprime/png_io.hpp"
#include "mrprime/suite.hpp"
#include "mrprime/train.hpp"

namespace {

using namespace mrprime;
namespace fs = std::filesystem;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  if (const fs::path dir = fs::path(path).parent_path(); !dir.empty())
    fs::create_directories(dir);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path);
}

MaskPattern parse_pattern(const std::string& s) {
  try {
    return mask_pattern_from_string(s);
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
}

int cmd_mask(int width, int r, double cf, const std::string& pattern, std::uint64_t seed,
             const std::string& out, const std::string& png) {
  MaskSpec spec;
  spec.width = width;
  spec.acceleration = r;
  spec.center_fraction = cf;
  spec.pattern = parse_pattern(pattern);
  spec.seed = seed;
  const Mask mask = gen_mask(spec);
  const std::string json = mask_to_json(mask);
  std::cout << json << "\n";
  if (!out.empty()) write_text_file(out, json + "\n");
  if (!png.empty()) {
    Image img(width, width);
    for (int i = 0; i < width; ++i)
      for (int j = 0; j < width; ++j) img.at(i, j) = mask.sampled[j] ? 1.0 : 0.0;
    export_png(img, png);
  }
  return 0;
}

int cmd_gen_data(const std::string& config, std::uint64_t seed, bool seed_set,
                 const std::string& out) {
  DatasetSpec spec;
  if (!config.empty()) spec = dataset_spec_from_json(read_text_file(config));
  if (seed_set) spec.seed = seed;
  const DatasetManifest m = make_dataset(spec, out);
  std::cout << "wrote " << m.entries.size() << " samples under " << m.root << "\n";
  return 0;
}

int cmd_train(const std::string& config, const std::string& manifest, const std::string& kind,
              std::uint64_t seed, bool seed_set, int epochs, const std::string& out, int threads) {
  TrainConfig cfg;
  if (!config.empty()) cfg = train_config_from_json(read_text_file(config));
  if (!manifest.empty()) cfg.manifest = manifest;
  if (!kind.empty()) {
    try {
      cfg.kind = model_kind_from_string(kind);
    } catch (const std::exception& e) {
      throw UsageError(e.what());
    }
  }
  if (seed_set) cfg.seed = seed;
  if (epochs > 0) cfg.epochs = epochs;
  if (threads > 0) cfg.threads = threads;
  if (cfg.manifest.empty()) throw UsageError("train: supply --manifest or a config with one");
  const TrainResult tr = train_model(cfg, out);
  std::cout << "kind " << to_string(cfg.kind) << ", best epoch " << tr.best_epoch
            << ", val loss " << tr.best_val_loss << "\n"
            << "checkpoint: " << tr.checkpoint_path << "\n"
            << "log: " << tr.log_path << "\n";
  return 0;
}

int cmd_eval(const std::string& manifest, const std::string& scenario_name,
             const std::vector<std::string>& ckpt_args, const std::string& out, double lambda,
             int threads) {
  if (manifest.empty()) throw UsageError("eval: --manifest is required");
  EvalConfig cfg;
  cfg.manifest = manifest;
  try {
    cfg.scenario = find_scenario(scenario_name);
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
  for (const auto& arg : ckpt_args) {
    const auto eq = arg.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == arg.size())
      throw UsageError("eval: --ckpt expects label=path, got '" + arg + "'");
    cfg.checkpoints.emplace_back(arg.substr(0, eq), arg.substr(eq + 1));
  }
  if (lambda > 0) cfg.cs.lambda = lambda;
  cfg.out_dir = out;
  cfg.threads = threads;
  const EvalResult res = evaluate(cfg);
  std::cout << "scenario " << res.scenario.name << " (" << res.sample_ids.size()
            << " samples)\n";
  for (const auto& m : res.models) {
    std::cout << "  " << m.label << ": NMSE " << m.nmse.mean << " +- " << m.nmse.std << ", PSNR "
              << m.psnr.mean << " +- " << m.psnr.std << ", SSIM " << m.ssim.mean << " +- "
              << m.ssim.std << "\n";
  }
  for (const auto& [key, tt] : res.t_tests) {
    if (key.find(":psnr") == std::string::npos) continue;
    std::cout << "  t-test " << key << ": t=" << tt.t_statistic << ", p=" << tt.p_value << "\n";
  }
  if (!out.empty()) std::cout << "per-sample CSVs under " << out << "\n";
  return 0;
}

int cmd_suite(const std::string& config, const std::string& out, int threads) {
  SuiteConfig cfg;
  if (!config.empty()) cfg = suite_config_from_json(read_text_file(config));
  if (threads > 0) cfg.threads = threads;
  const SuiteReport rep = run_suite(cfg, out);
  std::cout << "summary: " << rep.summary_path << "\n";
  for (const auto& c : rep.clauses)
    std::cout << "  [" << (c.pass ? "PASS" : "FAIL") << "] " << c.name << "\n";
  std::cout << "directional verdict: " << (rep.directional_pass ? "PASS" : "FAIL") << "\n";
  return 0;
}

int cmd_cs_recon(const std::string& manifest_path, const std::string& sample_id,
                 const std::string& pattern, int r, double cf, std::uint64_t mask_seed,
                 double lambda, int outer, int inner, bool fista, const std::string& out) {
  if (manifest_path.empty() || sample_id.empty())
    throw UsageError("cs-recon: --manifest and --sample are required");
  const DatasetManifest manifest = load_manifest(manifest_path);
  const PhantomSample s = load_sample(manifest, sample_id);
  MaskSpec spec;
  spec.width = s.image.width;
  spec.acceleration = r;
  spec.center_fraction = cf;
  spec.pattern = parse_pattern(pattern);
  spec.seed = mask_seed;
  const Mask mask = gen_mask(spec);
  const ComplexGrid k_us = apply_forward_model(s.image, mask, 0.0, 0);

  CsConfig cs;
  if (lambda > 0) cs.lambda = lambda;
  if (outer > 0) cs.outer_iters = outer;
  if (inner > 0) cs.prox_inner_iters = inner;
  cs.use_fista = fista;
  const Image zf = zero_fill_recon(k_us);
  const Image recon = cs_reconstruct(k_us, mask, cs);

  fs::create_directories(out);
  export_png(s.image, (fs::path(out) / (sample_id + "_target.png")).string());
  export_png(zf, (fs::path(out) / (sample_id + "_zero_fill.png")).string());
  export_png(recon, (fs::path(out) / (sample_id + "_cs.png")).string());
  std::cout << "zero-fill: NMSE " << nmse(zf, s.image) << ", PSNR " << psnr(zf, s.image)
            << ", SSIM " << ssim(zf, s.image) << "\n";
  std::cout << "cs:        NMSE " << nmse(recon, s.image) << ", PSNR " << psnr(recon, s.image)
            << ", SSIM " << ssim(recon, s.image) << "\n";
  std::cout << "PNGs under " << out << "\n";
  return 0;
}

int cmd_export_png(const std::string& manifest_path, const std::string& sample_id,
                   const std::string& bin, int height, int width, bool boxes,
                   const std::string& out) {
  if (out.empty()) throw UsageError("export-png: --out is required");
  if (!bin.empty()) {
    if (height <= 0 || width <= 0)
      throw UsageError("export-png: --height and --width are required with --bin");
    export_png(read_image_bin(bin, height, width), out);
  } else {
    if (manifest_path.empty() || sample_id.empty())
      throw UsageError("export-png: supply --manifest + --sample, or --bin");
    const DatasetManifest manifest = load_manifest(manifest_path);
    const PhantomSample s = load_sample(manifest, sample_id);
    export_png(s.image, out, boxes ? s.pathology_boxes : std::vector<BBox>{});
  }
  std::cout << "wrote " << out << "\n";
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"mrprime: physically-primed reconstruction of undersampled k-space"};
  app.require_subcommand(1);

  // mask
  auto* mask_cmd = app.add_subcommand("mask", "Generate an undersampling mask (JSON + preview)");
  int m_width = 64, m_r = 4;
  double m_cf = 0.08;
  std::string m_pattern = "equispaced-fixed", m_out, m_png;
  std::uint64_t m_seed = 0;
  mask_cmd->add_option("--width", m_width, "Mask width (k-space columns)");
  mask_cmd->add_option("--r", m_r, "Acceleration factor R");
  mask_cmd->add_option("--cf", m_cf, "Center fraction");
  mask_cmd->add_option("--pattern", m_pattern, "equispaced-fixed | equispaced | random");
  mask_cmd->add_option("--seed", m_seed, "Mask seed");
  mask_cmd->add_option("--out", m_out, "Also write the JSON here");
  mask_cmd->add_option("--png", m_png, "Write a PNG preview here");

  // gen-data
  auto* gen_cmd = app.add_subcommand("gen-data", "Generate the synthetic phantom dataset");
  std::string g_config, g_out = "data";
  std::uint64_t g_seed = 0;
  auto* g_seed_opt = gen_cmd->add_option("--seed", g_seed, "Override the dataset seed");
  gen_cmd->add_option("--config", g_config, "DatasetSpec JSON path");
  gen_cmd->add_option("--out", g_out, "Output directory");

  // train
  auto* train_cmd = app.add_subcommand("train", "Train one model configuration");
  std::string t_config, t_manifest, t_kind, t_out = "train-out";
  std::uint64_t t_seed = 0;
  int t_epochs = 0, t_threads = 0;
  train_cmd->add_option("--config", t_config, "TrainConfig JSON path");
  train_cmd->add_option("--manifest", t_manifest, "Dataset manifest path");
  train_cmd->add_option("--kind", t_kind, "fixed | baseline | mask");
  auto* t_seed_opt = train_cmd->add_option("--seed", t_seed, "Run seed");
  train_cmd->add_option("--epochs", t_epochs, "Override epochs");
  train_cmd->add_option("--out", t_out, "Output directory");
  train_cmd->add_option("--threads", t_threads, "Worker threads");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate checkpoints on a scenario");
  std::string e_manifest, e_scenario = "random-r4-famA", e_out;
  std::vector<std::string> e_ckpts;
  double e_lambda = 0;
  int e_threads = 0;
  eval_cmd->add_option("--manifest", e_manifest, "Dataset manifest path");
  eval_cmd->add_option("--scenario", e_scenario,
                       "equispaced-r4-famA | equispaced-r8-famA | random-r4-famA | "
                       "random-r8-famA | fixed-r4-famB | fixed-r8-famB");
  eval_cmd->add_option("--ckpt", e_ckpts, "Checkpoint as label=path (repeatable)");
  eval_cmd->add_option("--out", e_out, "Directory for per-sample CSVs");
  eval_cmd->add_option("--lambda", e_lambda, "CS reference TV weight");
  eval_cmd->add_option("--threads", e_threads, "Worker threads");

  // suite
  auto* suite_cmd = app.add_subcommand("suite", "Run the full study end to end");
  std::string s_config, s_out = "suite-out";
  int s_threads = 0;
  suite_cmd->add_option("--config", s_config, "SuiteConfig JSON path");
  suite_cmd->add_option("--out", s_out, "Output directory");
  suite_cmd->add_option("--threads", s_threads, "Worker threads");

  // cs-recon
  auto* cs_cmd = app.add_subcommand("cs-recon", "TV compressed-sensing reconstruction");
  std::string c_manifest, c_sample, c_pattern = "equispaced-fixed", c_out = "cs-out";
  int c_r = 4, c_outer = 0, c_inner = 0;
  double c_cf = 0.08, c_lambda = 0;
  std::uint64_t c_mask_seed = 0;
  bool c_fista = false;
  cs_cmd->add_option("--manifest", c_manifest, "Dataset manifest path");
  cs_cmd->add_option("--sample", c_sample, "Sample id");
  cs_cmd->add_option("--pattern", c_pattern, "Mask pattern");
  cs_cmd->add_option("--r", c_r, "Acceleration factor R");
  cs_cmd->add_option("--cf", c_cf, "Center fraction");
  cs_cmd->add_option("--mask-seed", c_mask_seed, "Mask seed");
  cs_cmd->add_option("--lambda", c_lambda, "TV weight");
  cs_cmd->add_option("--outer", c_outer, "Outer iterations");
  cs_cmd->add_option("--inner", c_inner, "Prox inner iterations");
  cs_cmd->add_flag("--fista", c_fista, "Use FISTA momentum");
  cs_cmd->add_option("--out", c_out, "Output directory");

  // export-png
  auto* png_cmd = app.add_subcommand("export-png", "Render a sample or raw image to PNG");
  std::string p_manifest, p_sample, p_bin, p_out;
  int p_height = 0, p_width = 0;
  bool p_boxes = false;
  png_cmd->add_option("--manifest", p_manifest, "Dataset manifest path");
  png_cmd->add_option("--sample", p_sample, "Sample id");
  png_cmd->add_option("--bin", p_bin, "Raw float32 image file");
  png_cmd->add_option("--height", p_height, "Rows of --bin");
  png_cmd->add_option("--width", p_width, "Columns of --bin");
  png_cmd->add_flag("--boxes", p_boxes, "Overlay pathology boxes");
  png_cmd->add_option("--out", p_out, "Output PNG path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (app.got_subcommand(mask_cmd))
      return cmd_mask(m_width, m_r, m_cf, m_pattern, m_seed, m_out, m_png);
    if (app.got_subcommand(gen_cmd))
      return cmd_gen_data(g_config, g_seed, g_seed_opt->count() > 0, g_out);
    if (app.got_subcommand(train_cmd))
      return cmd_train(t_config, t_manifest, t_kind, t_seed, t_seed_opt->count() > 0, t_epochs,
                       t_out, t_threads);
    if (app.got_subcommand(eval_cmd))
      return cmd_eval(e_manifest, e_scenario, e_ckpts, e_out, e_lambda, e_threads);
    if (app.got_subcommand(suite_cmd)) return cmd_suite(s_config, s_out, s_threads);
    if (app.got_subcommand(cs_cmd))
      return cmd_cs_recon(c_manifest, c_sample, c_pattern, c_r, c_cf, c_mask_seed, c_lambda,
                          c_outer, c_inner, c_fista, c_out);
    if (app.got_subcommand(png_cmd))
      return cmd_export_png(p_manifest, p_sample, p_bin, p_height, p_width, p_boxes, p_out);
    std::cerr << "error: no subcommand\n";
    return 1;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
