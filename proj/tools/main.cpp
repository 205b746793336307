// Copyright (c) 2026 vmfmix authors
// SPDX-License-Identifier: Apache-2.0
//
// vmfmix CLI: reproducible desk-scale experiments over the library.
//
// Exit codes: 0 success, 1 config/usage error, 2 I/O failure,
// 3 divergence abort, 4 internal error.

#include <CLI11.hpp>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "vmfmix/analysis.hpp"
#include "vmfmix/config.hpp"
#include "vmfmix/movmf.hpp"
#include "vmfmix/serialize.hpp"
#include "vmfmix/trainer.hpp"
#include "vmfmix/version.hpp"

namespace fs = std::filesystem;
using namespace vmfmix;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitIo = 2;
constexpr int kExitDiverged = 3;
constexpr int kExitInternal = 4;

std::map<std::string, std::string> resolved_config_echo(const FlatConfig& cfg) {
  std::map<std::string, std::string> echo;
  for (const auto& key : config_registry()) echo[key.name] = cfg.get_string(key.name);
  return echo;
}

FlatConfig load_config(const std::string& path, const std::optional<std::uint64_t>& seed_override) {
  FlatConfig cfg = FlatConfig::from_file(path);
  if (seed_override) cfg.override_value("seed", std::to_string(*seed_override));
  return cfg;
}

void ensure_out_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
}

SyntheticDataset dataset_from_config(const FlatConfig& cfg) {
  return generate_dataset(static_cast<int>(cfg.get_int("data_k_true")),
                          static_cast<int>(cfg.get_int("data_dim")), cfg.get_uint("data_n"),
                          cfg.get_real("data_kappa"), cfg.get_real("data_noise"),
                          cfg.get_uint("data_seed"));
}

Json summary_header(const char* command, const FlatConfig& cfg) {
  Json j;
  j["command"] = command;
  j["library_version"] = kVersion;
  j["config_hash"] = fnv1a64_hex(cfg.text());
  j["seed"] = cfg.get_uint("seed");
  return j;
}

// ---------------------------------------------------------------------------

int cmd_approx_check(const std::vector<int>& p_list, double kappa_min, double kappa_max,
                     int grid_size, const fs::path& out_csv) {
  if (kappa_min <= 0.0 || kappa_max < kappa_min || grid_size < 1)
    throw ConfigError("approx-check: need 0 < kappa-min <= kappa-max and grid-size >= 1");
  for (int p : p_list)
    if (p < 4 || p % 2 != 0)
      throw ConfigError("approx-check: every p must be even and >= 4");

  std::vector<std::vector<std::string>> rows;
  Json per_p = Json::array();
  for (int p : p_list) {
    double max_abs = 0.0, max_rel = 0.0;
    for (int i = 0; i < grid_size; ++i) {
      const double k = grid_size == 1
                           ? kappa_min
                           : kappa_min + (kappa_max - kappa_min) * i / (grid_size - 1.0);
      const double approx = log_norm_const_approx(p, k);
      const double exact = log_norm_const_exact(p, k);
      const double eps = approx - exact;
      max_abs = std::max(max_abs, std::abs(eps));
      max_rel = std::max(max_rel, std::abs(eps) / std::abs(exact));
      rows.push_back({std::to_string(p), format_double(k), format_double(approx),
                      format_double(exact), format_double(eps)});
    }
    per_p.push_back(Json{{"p", p}, {"max_abs_epsilon", max_abs}, {"max_rel_epsilon", max_rel}});
    log_info("approx-check p=" + std::to_string(p) + ": max |eps| = " + format_double(max_abs));
  }
  if (out_csv.has_parent_path()) ensure_out_dir(out_csv.parent_path());
  write_csv(out_csv, {"p", "kappa", "log_c_approx", "log_c_exact", "epsilon"}, rows);

  const fs::path dir = out_csv.has_parent_path() ? out_csv.parent_path() : fs::path(".");
  const std::string pseudo_config =
      "approx-check p-list grid=" + std::to_string(grid_size) + " kappa=[" +
      format_double(kappa_min) + "," + format_double(kappa_max) + "]";
  Json summary;
  summary["command"] = "approx-check";
  summary["library_version"] = kVersion;
  summary["config_hash"] = fnv1a64_hex(pseudo_config);
  summary["seed"] = 0;
  summary["kappa_min"] = kappa_min;
  summary["kappa_max"] = kappa_max;
  summary["grid_size"] = grid_size;
  summary["per_p"] = per_p;
  save_json(summary, dir / "summary.json");
  write_manifest(dir, "approx-check", pseudo_config, 0);
  return kExitOk;
}

int cmd_train(const std::string& config_path, const fs::path& out_dir,
              const std::optional<std::uint64_t>& seed_override) {
  const FlatConfig cfg = load_config(config_path, seed_override);
  const TrainConfig train_cfg = cfg.to_train_config();
  ensure_out_dir(out_dir);

  const SyntheticDataset dataset = dataset_from_config(cfg);
  const TrainResult result = train(train_cfg, dataset);

  const auto echo = resolved_config_echo(cfg);
  save_encoder_checkpoint(
      {result.student, result.center, train_cfg.steps, train_cfg.seed, echo},
      out_dir / "checkpoint_student.json");
  save_encoder_checkpoint(
      {result.teacher, result.center, train_cfg.steps, train_cfg.seed, echo},
      out_dir / "checkpoint_teacher.json");

  std::vector<std::vector<std::string>> rows;
  rows.reserve(result.metrics.size());
  for (const auto& m : result.metrics)
    rows.push_back({std::to_string(m.step), format_double(m.loss),
                    format_double(m.marginal_entropy), format_double(m.conditional_entropy),
                    format_double(m.center_norm), format_double(m.tau_t)});
  write_csv(out_dir / "metrics.csv",
            {"step", "loss", "marginal_entropy", "conditional_entropy", "center_norm", "tau_t"},
            rows);

  Json summary = summary_header("train", cfg);
  const auto& last = result.metrics.back();
  summary["steps"] = train_cfg.steps;
  summary["final_loss"] = last.loss;
  summary["final_marginal_entropy"] = last.marginal_entropy;
  summary["final_conditional_entropy"] = last.conditional_entropy;
  summary["final_center_norm"] = last.center_norm;
  summary["collapse_detected"] = result.collapse_detected;
  summary["knn_accuracy"] = result.knn_accuracy;
  summary["checkpoints"] =
      Json{{"student", "checkpoint_student.json"}, {"teacher", "checkpoint_teacher.json"}};
  save_json(summary, out_dir / "summary.json");
  write_manifest(out_dir, "train", cfg.text(), train_cfg.seed);
  log_info("train: knn_accuracy = " + format_double(result.knn_accuracy));
  return kExitOk;
}

int cmd_em_fit(const std::string& config_path, const fs::path& out_dir,
               const std::optional<std::uint64_t>& seed_override) {
  const FlatConfig cfg = load_config(config_path, seed_override);
  const auto em_k = static_cast<std::size_t>(cfg.get_int("em_k"));
  const int max_iters = static_cast<int>(cfg.get_int("em_max_iters"));
  const double tol = cfg.get_real("em_tol");
  const std::uint64_t seed = cfg.get_uint("seed");
  ensure_out_dir(out_dir);

  const SyntheticDataset dataset = dataset_from_config(cfg);
  std::vector<UnitVector> sphere_points;
  sphere_points.reserve(dataset.size());
  for (std::size_t i = 0; i < dataset.size(); ++i)
    sphere_points.push_back(normalize(dataset.points.row(i)));

  const EmResult result = em_fit(sphere_points, em_k, seed, max_iters, tol);
  for (const auto& w : result.warnings) log_warn(w);

  save_movmf_checkpoint({result.model, seed, resolved_config_echo(cfg)},
                        out_dir / "checkpoint_movmf.json");

  std::vector<std::vector<std::string>> rows;
  for (std::size_t i = 0; i < result.log_likelihood_trace.size(); ++i)
    rows.push_back({std::to_string(i), format_double(result.log_likelihood_trace[i])});
  write_csv(out_dir / "loglik.csv", {"iteration", "log_likelihood"}, rows);

  Json summary = summary_header("em-fit", cfg);
  summary["em_k"] = em_k;
  summary["iterations"] = result.iterations;
  summary["converged"] = result.converged;
  summary["reinit_events"] = result.reinit_events;
  summary["log_likelihood"] = result.log_likelihood_trace.back();
  Json kappas = Json::array(), props = Json::array();
  for (std::size_t k = 0; k < result.model.k(); ++k) {
    kappas.push_back(result.model.components[k].kappa);
    props.push_back(result.model.proportions[k]);
  }
  summary["kappa"] = kappas;
  summary["proportions"] = props;
  summary["checkpoint"] = "checkpoint_movmf.json";
  save_json(summary, out_dir / "summary.json");
  write_manifest(out_dir, "em-fit", cfg.text(), seed);
  log_info("em-fit: final log-likelihood = " + format_double(result.log_likelihood_trace.back()));
  return kExitOk;
}

int cmd_ablate(const std::string& config_path, const fs::path& out_dir,
               const std::optional<std::uint64_t>& seed_override) {
  const FlatConfig cfg = load_config(config_path, seed_override);
  const TrainConfig base = cfg.to_train_config();
  const double threshold = cfg.get_real("duplicate_threshold");
  ensure_out_dir(out_dir);

  const SyntheticDataset dataset = dataset_from_config(cfg);
  const AblationResult grid = run_ablation_grid(base, dataset, threshold);

  std::vector<std::vector<std::string>> rows;
  Json cells = Json::array();
  for (const auto& cell : grid.cells) {
    rows.push_back({cell.normalization, cell.centering, format_double(cell.knn_accuracy),
                    std::to_string(cell.unique_count), std::to_string(cell.largest_group_size)});
    cells.push_back(Json{{"normalization", cell.normalization},
                         {"centering", cell.centering},
                         {"knn_accuracy", cell.knn_accuracy},
                         {"unique_count", cell.unique_count},
                         {"largest_group_size", cell.largest_group_size}});
  }
  write_csv(out_dir / "table.csv",
            {"normalization", "centering", "knn_accuracy", "unique_count", "largest_group_size"},
            rows);

  Json summary = summary_header("ablate", cfg);
  summary["cells"] = cells;
  save_json(summary, out_dir / "summary.json");
  write_manifest(out_dir, "ablate", cfg.text(), base.seed);
  return kExitOk;
}

int cmd_analyze(const std::string& config_path, const std::string& checkpoint_path,
                const fs::path& out_dir, const std::optional<std::uint64_t>& seed_override) {
  const FlatConfig cfg = load_config(config_path, seed_override);
  const double threshold = cfg.get_real("duplicate_threshold");
  const auto sweep_thresholds = cfg.get_real_list("analysis_thresholds");
  const auto percentile_edges = cfg.get_real_list("percentile_edges");
  ensure_out_dir(out_dir);

  const EncoderCheckpoint ckpt = load_encoder_checkpoint(checkpoint_path);
  const SyntheticDataset dataset = dataset_from_config(cfg);
  if (dataset.dim() != ckpt.params.d_in())
    throw ConfigError("analyze: config dataset dimension does not match the checkpoint");

  std::vector<UnitVector> reps;
  reps.reserve(dataset.size());
  for (std::size_t i = 0; i < dataset.size(); ++i)
    reps.push_back(ckpt.params.represent(dataset.points.row(i)));

  const std::string mode_name = cfg.get_string("mode");
  const HeadMode mode = mode_name == "vmf" ? HeadMode::vmf : HeadMode::dino;
  const double tau_s = cfg.get_real("tau_s");

  const DuplicateReport report = duplicate_sets(ckpt.params.bank, threshold);
  const VoidReport voids = void_prototype_check(ckpt.params.bank, reps, report, mode, tau_s);

  std::vector<std::vector<std::string>> dup_rows;
  int void_groups = 0;
  for (std::size_t g = 0; g < report.groups.size(); ++g) {
    if (voids.is_void[g]) ++void_groups;
    dup_rows.push_back({std::to_string(g), std::to_string(report.groups[g].size()),
                        std::to_string(report.groups[g].front()),
                        voids.is_void[g] ? "true" : "false",
                        std::to_string(voids.group_assignments[g]),
                        voids.alignment_defined[g] ? format_double(voids.alignment[g]) : "undefined"});
  }
  write_csv(out_dir / "duplicates.csv",
            {"group", "size", "seed_prototype", "is_void", "assignments", "alignment"}, dup_rows);

  const auto sweep = utilization_sweep(ckpt.params.bank, sweep_thresholds);
  std::vector<std::vector<std::string>> sweep_rows;
  for (const auto& row : sweep)
    sweep_rows.push_back({format_double(row.threshold), std::to_string(row.unique_count),
                          std::to_string(row.largest_group_size)});
  write_csv(out_dir / "utilization.csv", {"threshold", "unique_count", "largest_group_size"},
            sweep_rows);

  bool percentiles_available = true;
  try {
    const auto buckets = precision_percentile_report(ckpt.params.bank, reps, dataset.labels,
                                                     percentile_edges, mode, tau_s);
    std::vector<std::vector<std::string>> bucket_rows;
    for (const auto& b : buckets)
      bucket_rows.push_back({format_double(b.lo), format_double(b.hi), std::to_string(b.count),
                             format_double(b.accuracy)});
    write_csv(out_dir / "percentiles.csv", {"percentile_lo", "percentile_hi", "count", "accuracy"},
              bucket_rows);
  } catch (const std::invalid_argument& e) {
    percentiles_available = false;
    log_warn(std::string("analyze: percentile report unavailable: ") + e.what());
  }

  Json summary = summary_header("analyze", cfg);
  summary["duplicate_threshold"] = threshold;
  summary["unique_count"] = report.unique_count;
  summary["largest_group_size"] = report.largest_group_size;
  summary["largest_group_is_void"] =
      voids.is_void[static_cast<std::size_t>(report.largest_group_index)];
  const bool align_defined =
      voids.alignment_defined[static_cast<std::size_t>(report.largest_group_index)];
  summary["largest_group_alignment_defined"] = align_defined;
  if (align_defined)
    summary["largest_group_alignment"] =
        voids.alignment[static_cast<std::size_t>(report.largest_group_index)];
  summary["void_group_count"] = void_groups;
  summary["percentile_report_available"] = percentiles_available;
  save_json(summary, out_dir / "summary.json");
  write_manifest(out_dir, "analyze", cfg.text(), cfg.get_uint("seed"));
  log_info("analyze: unique prototypes = " + std::to_string(report.unique_count));
  return kExitOk;
}

int cmd_knn(const std::string& config_path, const std::string& checkpoint_path,
            const fs::path& out_dir, const std::optional<std::uint64_t>& seed_override) {
  const FlatConfig cfg = load_config(config_path, seed_override);
  ensure_out_dir(out_dir);
  const EncoderCheckpoint ckpt = load_encoder_checkpoint(checkpoint_path);
  const SyntheticDataset dataset = dataset_from_config(cfg);
  if (dataset.dim() != ckpt.params.d_in())
    throw ConfigError("knn: config dataset dimension does not match the checkpoint");

  const double eval_fraction = cfg.get_real("eval_fraction");
  if (!(eval_fraction > 0.0 && eval_fraction < 1.0))
    throw ConfigError("knn: eval_fraction must be in (0,1)");
  const std::size_t n_train =
      dataset.size() - static_cast<std::size_t>(eval_fraction * static_cast<double>(dataset.size()));
  std::vector<UnitVector> train_reps, test_reps;
  std::vector<int> train_labels, test_labels;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    UnitVector y = ckpt.params.represent(dataset.points.row(i));
    if (i < n_train) {
      train_reps.push_back(std::move(y));
      train_labels.push_back(dataset.labels[i]);
    } else {
      test_reps.push_back(std::move(y));
      test_labels.push_back(dataset.labels[i]);
    }
  }
  const std::size_t k = std::min<std::size_t>(cfg.get_uint("knn_k"), train_reps.size());
  const double accuracy = knn_eval(train_reps, train_labels, test_reps, test_labels, k);

  Json summary = summary_header("knn", cfg);
  summary["accuracy"] = accuracy;
  summary["k"] = k;
  summary["n_train"] = train_reps.size();
  summary["n_test"] = test_reps.size();
  save_json(summary, out_dir / "summary.json");
  write_manifest(out_dir, "knn", cfg.text(), cfg.get_uint("seed"));
  log_info("knn: accuracy = " + format_double(accuracy));
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"vmfmix: von Mises-Fisher mixture heads, EM, and self-distillation experiments"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  // approx-check
  auto* approx = app.add_subcommand("approx-check",
                                    "compare the approximate log-normalizer against the oracle");
  std::vector<int> p_list{16, 64, 256};
  double kappa_min = 20.0, kappa_max = 500.0;
  int grid_size = 1000;
  std::string approx_out = "approx_check.csv";
  approx->add_option("--p", p_list, "bottleneck dimensions (even, >= 4)");
  approx->add_option("--kappa-min", kappa_min, "low end of the kappa grid");
  approx->add_option("--kappa-max", kappa_max, "high end of the kappa grid");
  approx->add_option("--grid-size", grid_size, "number of grid points");
  approx->add_option("--out", approx_out, "output CSV path");

  // shared options for config-driven commands
  struct CommonArgs {
    std::string config;
    std::string out = ".";
    std::string checkpoint;
    std::optional<std::uint64_t> seed;
  };
  const auto add_common = [](CLI::App* sub, CommonArgs* args, bool needs_checkpoint) {
    sub->add_option("--config", args->config, "config file path")->required();
    sub->add_option("--out", args->out, "output directory");
    sub->add_option_function<std::uint64_t>(
        "--seed", [args](const std::uint64_t& s) { args->seed = s; },
        "override the config seed");
    if (needs_checkpoint)
      sub->add_option("--checkpoint", args->checkpoint, "encoder checkpoint path")->required();
  };

  CommonArgs train_args, em_args, ablate_args, analyze_args, knn_args;
  add_common(app.add_subcommand("train", "run the self-distillation loop"), &train_args, false);
  add_common(app.add_subcommand("em-fit", "fit a movMF baseline by EM"), &em_args, false);
  add_common(app.add_subcommand("ablate", "run the 6-cell normalization x centering grid"),
             &ablate_args, false);
  add_common(app.add_subcommand("analyze", "prototype utilization diagnostics"), &analyze_args,
             true);
  add_common(app.add_subcommand("knn", "kNN evaluation of a checkpoint"), &knn_args, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (app.got_subcommand("approx-check"))
      return cmd_approx_check(p_list, kappa_min, kappa_max, grid_size, approx_out);
    if (app.got_subcommand("train")) return cmd_train(train_args.config, train_args.out, train_args.seed);
    if (app.got_subcommand("em-fit")) return cmd_em_fit(em_args.config, em_args.out, em_args.seed);
    if (app.got_subcommand("ablate"))
      return cmd_ablate(ablate_args.config, ablate_args.out, ablate_args.seed);
    if (app.got_subcommand("analyze"))
      return cmd_analyze(analyze_args.config, analyze_args.checkpoint, analyze_args.out,
                         analyze_args.seed);
    if (app.got_subcommand("knn"))
      return cmd_knn(knn_args.config, knn_args.checkpoint, knn_args.out, knn_args.seed);
    std::cerr << "no subcommand\n";
    return kExitConfig;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const TrainingDiverged& e) {
    std::cerr << "divergence: " << e.what() << "\n";
    return kExitDiverged;
  } catch (const IoError& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInternal;
  }
}
