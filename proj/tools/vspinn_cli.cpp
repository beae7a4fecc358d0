#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "vspinn/experiment.hpp"

namespace fs = std::filesystem;
using namespace vspinn;

namespace {

struct CommonOpts {
  std::string config_path;
  std::optional<int> n_override;
  std::optional<std::uint64_t> seed_override;
  std::optional<std::string> out_override;
  std::optional<int> iters_override;
  bool quiet = false;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config_path, "experiment config file (JSON)");
  cmd->add_option("--n", opts.n_override, "override number of residual blocks");
  cmd->add_option("--seed", opts.seed_override, "override training seed");
  cmd->add_option("--out", opts.out_override, "override output directory");
  cmd->add_option("--iters", opts.iters_override, "override max training iterations");
  cmd->add_flag("--quiet", opts.quiet, "suppress progress output");
}

ExperimentConfig load(const CommonOpts& opts) {
  ExperimentConfig cfg = opts.config_path.empty()
                             ? ExperimentConfig::from_json_text("{}")
                             : ExperimentConfig::from_file(opts.config_path);
  if (opts.n_override) cfg.train.n_blocks = *opts.n_override;
  if (opts.seed_override) cfg.train.seed = *opts.seed_override;
  if (opts.out_override) cfg.out_dir = *opts.out_override;
  if (opts.iters_override) cfg.train.max_iters = *opts.iters_override;
  cfg.train.validate();
  return cfg;
}

void emit_resolved(const ExperimentConfig& cfg) {
  fs::create_directories(cfg.out_dir);
  std::ofstream rc(cfg.out_dir / "resolved_config.json");
  rc << cfg.resolved_json();
}

int cmd_simulate(const CommonOpts& opts) {
  const ExperimentConfig cfg = load(opts);
  emit_resolved(cfg);
  const DensityField field = run_simulate(cfg, opts.quiet);
  save_field(field, cfg.out_dir / "field.txt");
  const auto data = sample_measurements(field, cfg.noise_sigma,
                                        cfg.seeds.empty() ? 0 : cfg.seeds.front());
  save_dataset(data, cfg.out_dir / "dataset.txt");
  if (!opts.quiet) {
    std::printf("wrote %s and %s (%zu measurements)\n",
                (cfg.out_dir / "field.txt").c_str(),
                (cfg.out_dir / "dataset.txt").c_str(), data.size());
  }
  return 0;
}

int cmd_train(const CommonOpts& opts) {
  const ExperimentConfig cfg = load(opts);
  emit_resolved(cfg);
  const fs::path field_path = cfg.out_dir / "field.txt";
  const fs::path data_path = cfg.out_dir / "dataset.txt";
  if (!fs::exists(field_path) || !fs::exists(data_path)) {
    throw ConfigError("missing field/dataset files; run `simulate` first");
  }
  const DensityField field = load_field(field_path);
  const auto data = load_dataset(data_path);
  const TrainOutputs out = run_train(cfg, field, data, opts.quiet);
  const std::string tag = "n" + std::to_string(cfg.train.n_blocks) + "_seed" +
                          std::to_string(cfg.train.seed);
  out.result.model.save_checkpoint(cfg.out_dir / ("checkpoint_" + tag + ".json"));
  save_history_csv(out.result.history, cfg.out_dir / ("history_" + tag + ".csv"));
  save_report(out.report, cfg.out_dir / ("report_" + tag + ".txt"));
  return 0;
}

int cmd_evaluate(const CommonOpts& opts, const std::string& checkpoint) {
  const ExperimentConfig cfg = load(opts);
  const fs::path field_path = cfg.out_dir / "field.txt";
  if (!fs::exists(field_path)) {
    throw ConfigError("missing field file; run `simulate` first");
  }
  const DensityField field = load_field(field_path);
  const StackedPinn model = StackedPinn::load_checkpoint(checkpoint);
  const ErrorReport report = error_distribution(field, model, model.n_stages());
  save_report(report, cfg.out_dir / "evaluate_report.txt");
  if (!opts.quiet) {
    for (const auto& row : stage_error_table(field, model)) {
      std::printf("stage %d relative_l2 %.6g\n", row.stage, row.relative_l2);
    }
  }
  return 0;
}

int cmd_sweep(const CommonOpts& opts) {
  ExperimentConfig cfg = load(opts);
  if (opts.iters_override) cfg.train.max_iters = *opts.iters_override;
  run_sweep(cfg, opts.quiet);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"stacked-residual PINN reconstruction of scalar conservation laws"};
  app.require_subcommand(1);

  CommonOpts opts;
  std::string checkpoint;
  auto* sim = app.add_subcommand("simulate", "run the finite-volume oracle, write field + dataset");
  add_common(sim, opts);
  auto* tr = app.add_subcommand("train", "train one model against existing field/dataset");
  add_common(tr, opts);
  auto* ev = app.add_subcommand("evaluate", "evaluate a checkpoint against the field");
  add_common(ev, opts);
  ev->add_option("--checkpoint", checkpoint, "checkpoint file")->required();
  auto* sw = app.add_subcommand("sweep", "train over all (n, seed) cells, emit summary tables");
  add_common(sw, opts);

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) return cmd_simulate(opts);
    if (tr->parsed()) return cmd_train(opts);
    if (ev->parsed()) return cmd_evaluate(opts, checkpoint);
    if (sw->parsed()) return cmd_sweep(opts);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 1;
  } catch (const DivergenceError& e) {
    std::fprintf(stderr, "numerical divergence at iteration %d: %s\n", e.iteration, e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
