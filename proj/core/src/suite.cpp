#include "mrprime/suite.hpp"

#include <array>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "mrprime/checkpoint.hpp"
#include "mrprime/kspace.hpp"
#include "mrprime/png_io.hpp"
#include "mrprime/train.hpp"

namespace mrprime {

namespace {

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path);
}

nlohmann::json mean_std_json(const MeanStd& m) {
  return {{"mean", m.mean}, {"std", m.std}, {"n", m.n}};
}

nlohmann::json t_test_json(const TTestResult& t) {
  return {{"t", t.t_statistic}, {"df", t.degrees_of_freedom}, {"p", t.p_value}, {"n", t.n}};
}

} // namespace

SuiteConfig suite_config_from_json(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  SuiteConfig cfg;
  if (j.contains("dataset")) cfg.dataset = dataset_spec_from_json(j.at("dataset").dump());
  cfg.epochs = j.value("epochs", cfg.epochs);
  cfg.batch_size = j.value("batch_size", cfg.batch_size);
  cfg.lr = j.value("lr", cfg.lr);
  cfg.lr_drop_epoch = j.value("lr_drop_epoch", cfg.lr_drop_epoch);
  cfg.lr_drop_factor = j.value("lr_drop_factor", cfg.lr_drop_factor);
  cfg.depth = j.value("depth", cfg.depth);
  cfg.base_channels = j.value("base_channels", cfg.base_channels);
  cfg.sigma = j.value("sigma", cfg.sigma);
  cfg.train_mask_r = j.value("train_mask_r", cfg.train_mask_r);
  cfg.train_mask_cf = j.value("train_mask_cf", cfg.train_mask_cf);
  if (j.contains("seeds")) cfg.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
  if (j.contains("cs")) {
    const auto& c = j.at("cs");
    cfg.cs.lambda = c.value("lambda", cfg.cs.lambda);
    cfg.cs.outer_iters = c.value("outer_iters", cfg.cs.outer_iters);
    cfg.cs.prox_inner_iters = c.value("prox_inner_iters", cfg.cs.prox_inner_iters);
    cfg.cs.step_size = c.value("step_size", cfg.cs.step_size);
    cfg.cs.use_fista = c.value("use_fista", cfg.cs.use_fista);
  }
  cfg.showcase_samples = j.value("showcase_samples", cfg.showcase_samples);
  cfg.threads = j.value("threads", cfg.threads);
  return cfg;
}

std::string suite_config_to_json(const SuiteConfig& cfg) {
  nlohmann::json j;
  j["dataset"] = nlohmann::json::parse(dataset_spec_to_json(cfg.dataset));
  j["epochs"] = cfg.epochs;
  j["batch_size"] = cfg.batch_size;
  j["lr"] = cfg.lr;
  j["lr_drop_epoch"] = cfg.lr_drop_epoch;
  j["lr_drop_factor"] = cfg.lr_drop_factor;
  j["depth"] = cfg.depth;
  j["base_channels"] = cfg.base_channels;
  j["sigma"] = cfg.sigma;
  j["train_mask_r"] = cfg.train_mask_r;
  j["train_mask_cf"] = cfg.train_mask_cf;
  j["seeds"] = cfg.seeds;
  j["cs"] = {{"lambda", cfg.cs.lambda},
             {"outer_iters", cfg.cs.outer_iters},
             {"prox_inner_iters", cfg.cs.prox_inner_iters},
             {"step_size", cfg.cs.step_size},
             {"use_fista", cfg.cs.use_fista}};
  j["showcase_samples"] = cfg.showcase_samples;
  j["threads"] = cfg.threads;
  return j.dump(2) + "\n";
}

SuiteReport run_suite(const SuiteConfig& cfg, const std::string& out_dir) {
  namespace fs = std::filesystem;
  using clock = std::chrono::steady_clock;
  const auto t_start = clock::now();

  if (cfg.seeds.empty()) throw std::invalid_argument("run_suite: seeds list is empty");
  fs::create_directories(out_dir);

  SuiteReport report;
  report.out_dir = out_dir;
  report.seeds = cfg.seeds;
  report.model_labels = {"fixed", "baseline", "mask", "zero_fill", "cs"};

  const auto stage = [](const std::string& name, const std::function<void()>& fn) {
    try {
      fn();
    } catch (const std::exception& e) {
      throw std::runtime_error("suite stage '" + name + "' failed: " + e.what());
    }
  };

  write_text_file((fs::path(out_dir) / "suite_config.json").string(), suite_config_to_json(cfg));

  stage("gen-data", [&] {
    const DatasetManifest m = make_dataset(cfg.dataset, (fs::path(out_dir) / "data").string());
    report.manifest_path = (fs::path(m.root) / "manifest.json").string();
    std::cout << "[suite] gen-data: " << m.entries.size() << " samples under " << m.root << "\n"
              << std::flush;
  });

  static constexpr std::array<ModelKind, 3> kKinds = {ModelKind::Fixed, ModelKind::Baseline,
                                                      ModelKind::Mask};
  std::vector<std::array<std::string, 3>> ckpts(cfg.seeds.size());
  stage("train", [&] {
    for (std::size_t si = 0; si < cfg.seeds.size(); ++si) {
      for (std::size_t ki = 0; ki < kKinds.size(); ++ki) {
        TrainConfig tc;
        tc.kind = kKinds[ki];
        tc.manifest = report.manifest_path;
        tc.epochs = cfg.epochs;
        tc.batch_size = cfg.batch_size;
        tc.lr = cfg.lr;
        tc.lr_drop_epoch = cfg.lr_drop_epoch;
        tc.lr_drop_factor = cfg.lr_drop_factor;
        tc.seed = cfg.seeds[si];
        tc.sigma = cfg.sigma;
        tc.train_mask_r = cfg.train_mask_r;
        tc.train_mask_cf = cfg.train_mask_cf;
        tc.depth = cfg.depth;
        tc.base_channels = cfg.base_channels;
        tc.threads = cfg.threads;
        const std::string dir = (fs::path(out_dir) / "checkpoints" /
                                 ("seed" + std::to_string(cfg.seeds[si])) / to_string(kKinds[ki]))
                                    .string();
        std::cout << "[suite] train seed=" << cfg.seeds[si] << " kind=" << to_string(kKinds[ki])
                  << std::endl;
        const TrainResult tr = train_model(tc, dir);
        ckpts[si][ki] = tr.checkpoint_path;
        std::cout << "[suite]   best epoch " << tr.best_epoch << ", val loss "
                  << fmt("%.6g", tr.best_val_loss) << std::endl;
      }
    }
  });

  const std::vector<Scenario> scenarios = standard_scenarios();
  for (const auto& s : scenarios) report.scenario_names.push_back(s.name);
  std::map<std::string, std::size_t> scenario_index;
  for (std::size_t i = 0; i < scenarios.size(); ++i) scenario_index[scenarios[i].name] = i;

  std::vector<std::vector<EvalResult>> results(cfg.seeds.size());
  stage("evaluate", [&] {
    for (std::size_t si = 0; si < cfg.seeds.size(); ++si) {
      results[si].reserve(scenarios.size());
      for (const Scenario& sc : scenarios) {
        EvalConfig ec;
        ec.manifest = report.manifest_path;
        ec.checkpoints = {{"fixed", ckpts[si][0]},
                          {"baseline", ckpts[si][1]},
                          {"mask", ckpts[si][2]}};
        ec.scenario = sc;
        ec.cs = cfg.cs;
        ec.out_dir =
            (fs::path(out_dir) / "metrics" / ("seed" + std::to_string(cfg.seeds[si]))).string();
        ec.threads = cfg.threads;
        std::cout << "[suite] eval seed=" << cfg.seeds[si] << " scenario=" << sc.name << std::endl;
        results[si].push_back(evaluate(ec));
      }
    }
  });

  // Pooled per-sample vectors (seed order, sample order within a seed), so the
  // pooled paired t-tests stay paired.
  const auto pooled_vec = [&](const std::string& scenario, const std::string& label,
                              const std::string& metric) {
    std::vector<double> v;
    for (std::size_t si = 0; si < cfg.seeds.size(); ++si) {
      const EvalResult& er = results[si][scenario_index.at(scenario)];
      const auto& src = metric == "nmse"   ? er.full_nmse.at(label)
                        : metric == "psnr" ? er.full_psnr.at(label)
                                           : er.full_ssim.at(label);
      v.insert(v.end(), src.begin(), src.end());
    }
    return v;
  };

  const std::string sc_a = "random-r4-famA";
  const std::string sc_b = "fixed-r4-famB";
  const auto psnr_mean = [&](std::size_t si, const std::string& scenario,
                             const std::string& label) {
    return results[si][scenario_index.at(scenario)].model(label).psnr.mean;
  };

  stage("aggregate", [&] {
    nlohmann::json agg;
    agg["seeds"] = cfg.seeds;
    agg["scenarios"] = report.scenario_names;
    agg["models"] = report.model_labels;
    for (std::size_t si = 0; si < cfg.seeds.size(); ++si) {
      const std::string seed_key = std::to_string(cfg.seeds[si]);
      for (const EvalResult& er : results[si]) {
        auto& jsc = agg["per_seed"][seed_key][er.scenario.name];
        for (const auto& mr : er.models)
          jsc[mr.label] = {{"nmse", mean_std_json(mr.nmse)},
                           {"psnr", mean_std_json(mr.psnr)},
                           {"ssim", mean_std_json(mr.ssim)}};
        for (const auto& [key, tt] : er.t_tests)
          agg["t_tests"]["per_seed"][seed_key][er.scenario.name][key] = t_test_json(tt);
      }
    }
    for (const Scenario& sc : scenarios) {
      for (const auto& label : report.model_labels) {
        for (const char* metric : {"nmse", "psnr", "ssim"}) {
          agg["pooled"][sc.name][label][metric] =
              mean_std_json(mean_std(pooled_vec(sc.name, label, metric)));
        }
      }
      for (std::size_t a = 0; a < report.model_labels.size(); ++a) {
        for (std::size_t b = a + 1; b < report.model_labels.size(); ++b) {
          for (const char* metric : {"nmse", "psnr", "ssim"}) {
            const auto va = pooled_vec(sc.name, report.model_labels[a], metric);
            const auto vb = pooled_vec(sc.name, report.model_labels[b], metric);
            if (va.size() < 2) continue;
            agg["t_tests"]["pooled"][sc.name]
               [report.model_labels[a] + "_vs_" + report.model_labels[b] + ":" + metric] =
                   t_test_json(paired_t_test(va, vb));
          }
        }
      }
    }

    // Directional verdict clauses.
    {
      SuiteClause c;
      c.name = "psnr-mask-gt-fixed-per-seed";
      c.pass = true;
      for (std::size_t si = 0; si < cfg.seeds.size(); ++si) {
        for (const std::string& sc : {sc_a, sc_b}) {
          const double m = psnr_mean(si, sc, "mask"), f = psnr_mean(si, sc, "fixed");
          c.pass = c.pass && m > f;
          c.detail += (c.detail.empty() ? "" : "; ") + ("seed " + std::to_string(cfg.seeds[si]) +
                                                        " " + sc + ": mask " + fmt("%.3f", m) +
                                                        " vs fixed " + fmt("%.3f", f));
        }
      }
      report.clauses.push_back(std::move(c));
    }
    for (const std::string& sc : {sc_a, sc_b}) {
      SuiteClause c;
      c.name = "psnr-mask-ge-baseline-2of3-" + sc;
      int wins = 0;
      for (std::size_t si = 0; si < cfg.seeds.size(); ++si) {
        const double m = psnr_mean(si, sc, "mask"), b = psnr_mean(si, sc, "baseline");
        if (m >= b) ++wins;
        c.detail += (c.detail.empty() ? "" : "; ") + ("seed " + std::to_string(cfg.seeds[si]) +
                                                      ": mask " + fmt("%.3f", m) + " vs baseline " +
                                                      fmt("%.3f", b));
      }
      c.pass = 3 * wins >= 2 * static_cast<int>(cfg.seeds.size());
      c.detail = std::to_string(wins) + "/" + std::to_string(cfg.seeds.size()) + " seeds; " +
                 c.detail;
      report.clauses.push_back(std::move(c));
    }
    {
      SuiteClause c;
      c.name = "ttest-mask-fixed-p05-" + sc_b;
      c.pass = true;
      for (std::size_t si = 0; si < cfg.seeds.size(); ++si) {
        const auto& tt =
            results[si][scenario_index.at(sc_b)].t_tests.at("fixed_vs_mask:psnr");
        c.pass = c.pass && tt.p_value < 0.05;
        c.detail += (c.detail.empty() ? "" : "; ") +
                    ("seed " + std::to_string(cfg.seeds[si]) + ": p=" + fmt("%.3g", tt.p_value));
      }
      const auto pooled =
          paired_t_test(pooled_vec(sc_b, "fixed", "psnr"), pooled_vec(sc_b, "mask", "psnr"));
      c.detail += "; pooled p=" + fmt("%.3g", pooled.p_value);
      report.clauses.push_back(std::move(c));
    }
    report.directional_pass = true;
    for (const auto& c : report.clauses) report.directional_pass = report.directional_pass && c.pass;

    nlohmann::json jv;
    for (const auto& c : report.clauses)
      jv.push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
    agg["verdicts"] = jv;
    agg["directional_pass"] = report.directional_pass;

    report.aggregates_path = (fs::path(out_dir) / "aggregates.json").string();
    write_text_file(report.aggregates_path, agg.dump(2) + "\n");
  });

  stage("figures", [&] {
    const DatasetManifest manifest = load_manifest(report.manifest_path);
    const std::string fig_dir = (fs::path(out_dir) / "figures").string();
    fs::create_directories(fig_dir);
    std::array<UnetModel, 3> nets = {load_checkpoint(ckpts[0][0]).model,
                                     load_checkpoint(ckpts[0][1]).model,
                                     load_checkpoint(ckpts[0][2]).model};
    for (const Scenario& sc : scenarios) {
      const auto entries = manifest.split_family("test", sc.family);
      const std::size_t n_show =
          std::min<std::size_t>(static_cast<std::size_t>(std::max(0, cfg.showcase_samples)),
                                entries.size());
      for (std::size_t i = 0; i < n_show; ++i) {
        const PhantomSample s = load_sample(manifest, *entries[i]);
        const Mask m = scenario_mask(sc, s.image.width, s.sample_id);
        const ComplexGrid k_us = apply_forward_model(s.image, m, 0.0, 0);
        // Panel order: target | zero-fill | fixed | baseline | mask | CS.
        std::vector<Image> tiles;
        tiles.push_back(s.image);
        tiles.push_back(zero_fill_recon(k_us));
        for (const auto& net : nets) tiles.push_back(reconstruct(net, k_us, m));
        tiles.push_back(cs_reconstruct(k_us, m, cfg.cs));
        const std::string path =
            (fs::path(fig_dir) / (sc.name + "__" + s.sample_id + ".png")).string();
        export_panel_png(tiles, path, s.pathology_boxes);
        report.figure_paths.push_back(path);
      }
    }
  });

  report.wall_seconds = std::chrono::duration<double>(clock::now() - t_start).count();

  stage("summary", [&] {
    std::string md;
    md += "# Undersampled-recon study summary\n\n";
    md += "Physically-primed (mask-conditioned) U-Net vs mask-blind baselines on synthetic\n";
    md += "phantoms, with zero-fill and TV compressed-sensing references.\n\n";
    md += "## Configuration\n\n";
    md += "- dataset: " + std::to_string(cfg.dataset.train_a) + " train / " +
          std::to_string(cfg.dataset.val_a) + " val (family A), " +
          std::to_string(cfg.dataset.test_a) + " test A + " + std::to_string(cfg.dataset.test_b) +
          " test B, " + std::to_string(cfg.dataset.height) + "x" +
          std::to_string(cfg.dataset.width) + ", seed " + std::to_string(cfg.dataset.seed) + "\n";
    std::string seed_list;
    for (auto s : cfg.seeds) seed_list += (seed_list.empty() ? "" : ", ") + std::to_string(s);
    md += "- training: kinds {fixed, baseline, mask} x seeds {" + seed_list + "}, " +
          std::to_string(cfg.epochs) + " epochs, batch " + std::to_string(cfg.batch_size) +
          ", lr " + fmt("%g", cfg.lr) + " (x" + fmt("%g", cfg.lr_drop_factor) + " at epoch " +
          std::to_string(TrainConfig{.epochs = cfg.epochs,
                                     .lr_drop_epoch = cfg.lr_drop_epoch}
                             .resolved_drop_epoch()) +
          "), U-Net depth " + std::to_string(cfg.depth) + " base " +
          std::to_string(cfg.base_channels) + ", train masks equispaced R=" +
          std::to_string(cfg.train_mask_r) + " cf=" + fmt("%g", cfg.train_mask_cf) + "\n";
    md += "- CS reference: lambda " + fmt("%g", cfg.cs.lambda) + ", " +
          std::to_string(cfg.cs.outer_iters) + " outer x " +
          std::to_string(cfg.cs.prox_inner_iters) + " inner iterations\n";
    md += "- wall time: " + fmt("%.1f", report.wall_seconds) + " s\n\n";

    md += "## Aggregates (pooled over seeds, mean +- std of full-image metrics)\n\n";
    for (const Scenario& sc : scenarios) {
      md += "### " + sc.name + " (" + to_string(sc.pattern) + ", R=" +
            std::to_string(sc.acceleration) + ", cf=" + fmt("%g", sc.center_fraction) +
            ", family " + std::string(1, family_to_char(sc.family)) + ")\n\n";
      md += "| model | NMSE | PSNR (dB) | SSIM |\n|---|---|---|---|\n";
      for (const auto& label : report.model_labels) {
        const auto pn = mean_std(pooled_vec(sc.name, label, "nmse"));
        const auto pp = mean_std(pooled_vec(sc.name, label, "psnr"));
        const auto ps = mean_std(pooled_vec(sc.name, label, "ssim"));
        md += "| " + label + " | " + fmt("%.4g", pn.mean) + " +- " + fmt("%.3g", pn.std) + " | " +
              fmt("%.4g", pp.mean) + " +- " + fmt("%.3g", pp.std) + " | " + fmt("%.4f", ps.mean) +
              " +- " + fmt("%.3g", ps.std) + " |\n";
      }
      md += "\n";
    }

    md += "## Per-seed mean PSNR on the verdict scenarios\n\n";
    md += "| seed | scenario | fixed | baseline | mask |\n|---|---|---|---|---|\n";
    for (std::size_t si = 0; si < cfg.seeds.size(); ++si) {
      for (const std::string& sc : {sc_a, sc_b}) {
        md += "| " + std::to_string(cfg.seeds[si]) + " | " + sc + " | " +
              fmt("%.3f", psnr_mean(si, sc, "fixed")) + " | " +
              fmt("%.3f", psnr_mean(si, sc, "baseline")) + " | " +
              fmt("%.3f", psnr_mean(si, sc, "mask")) + " |\n";
      }
    }
    md += "\n## Paired t-tests (PSNR, pooled over seeds)\n\n";
    md += "| scenario | mask vs fixed (t, p) | mask vs baseline (t, p) |\n|---|---|---|\n";
    for (const Scenario& sc : scenarios) {
      const auto tf =
          paired_t_test(pooled_vec(sc.name, "fixed", "psnr"), pooled_vec(sc.name, "mask", "psnr"));
      const auto tb = paired_t_test(pooled_vec(sc.name, "baseline", "psnr"),
                                    pooled_vec(sc.name, "mask", "psnr"));
      md += "| " + sc.name + " | " + fmt("%.3f", tf.t_statistic) + ", " + fmt("%.3g", tf.p_value) +
            " | " + fmt("%.3f", tb.t_statistic) + ", " + fmt("%.3g", tb.p_value) + " |\n";
    }

    md += "\n## Directional verdict\n\n";
    for (const auto& c : report.clauses)
      md += std::string("- [") + (c.pass ? "PASS" : "FAIL") + "] " + c.name + ": " + c.detail +
            "\n";
    md += std::string("\nOverall: ") + (report.directional_pass ? "PASS" : "FAIL") + "\n";

    md += "\n## Artifacts\n\n";
    md += "- data: data/manifest.json\n";
    md += "- checkpoints: checkpoints/seed<seed>/<kind>/best.ckpt (+ train_log.csv)\n";
    md += "- per-sample metrics: metrics/seed<seed>/<scenario>__<model>.csv\n";
    md += "- aggregates: aggregates.json\n";
    md += "- figures: figures/<scenario>__<sample>.png (target | zero-fill | fixed | baseline | "
          "mask | cs)\n";

    report.summary_path = (fs::path(out_dir) / "summary.md").string();
    write_text_file(report.summary_path, md);
  });

  std::cout << "[suite] done in " << fmt("%.1f", report.wall_seconds) << " s; directional verdict: "
            << (report.directional_pass ? "PASS" : "FAIL") << std::endl;
  return report;
}

} // namespace mrprime
