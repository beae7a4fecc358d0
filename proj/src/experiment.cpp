#include "vspinn/experiment.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>

#include "json.hpp"

namespace vspinn {

using nlohmann::json;

std::vector<double> InitialProfile::sample(const GridSpec& grid) const {
  if (values.size() != breaks.size() + 1) {
    throw ConfigError("initial profile: values must have breaks+1 entries");
  }
  for (std::size_t k = 0; k + 1 < breaks.size(); ++k) {
    if (breaks[k] >= breaks[k + 1]) throw ConfigError("initial profile: breaks must increase");
  }
  std::vector<double> u0(static_cast<std::size_t>(grid.nx));
  for (int j = 0; j < grid.nx; ++j) {
    const double x = grid.cell_center(j);
    std::size_t k = 0;
    while (k < breaks.size() && x >= breaks[k] * grid.length_L) ++k;
    u0[static_cast<std::size_t>(j)] = values[k];
  }
  return u0;
}

namespace {

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (j.contains(key)) return j.at(key).get<T>();
  return fallback;
}

TrainingMode mode_from_string(const std::string& s) {
  if (s == "joint") return TrainingMode::Joint;
  if (s == "sequential") return TrainingMode::Sequential;
  throw ConfigError("training_mode must be joint or sequential: " + s);
}

const char* mode_to_string(TrainingMode m) {
  return m == TrainingMode::Joint ? "joint" : "sequential";
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  ExperimentConfig cfg;
  try {
    if (j.contains("scenario")) {
      const json& s = j.at("scenario");
      cfg.scenario.flux.v_f = get_or(s, "v_f", cfg.scenario.flux.v_f);
      cfg.scenario.grid.length_L = get_or(s, "length", cfg.scenario.grid.length_L);
      cfg.scenario.grid.time_T = get_or(s, "time", cfg.scenario.grid.time_T);
      cfg.scenario.grid.nx = get_or(s, "nx", cfg.scenario.grid.nx);
      cfg.scenario.grid.cfl = get_or(s, "cfl", cfg.scenario.grid.cfl);
      if (s.contains("initial")) {
        cfg.scenario.initial.breaks = s.at("initial").at("breaks").get<std::vector<double>>();
        cfg.scenario.initial.values = s.at("initial").at("values").get<std::vector<double>>();
      }
      cfg.scenario.bc_left = get_or(s, "bc_left", cfg.scenario.initial.left_value());
      cfg.scenario.bc_right = get_or(s, "bc_right", cfg.scenario.initial.right_value());
    }
    if (j.contains("train")) {
      const json& t = j.at("train");
      TrainConfig& tc = cfg.train;
      tc.n_blocks = get_or(t, "n_blocks", tc.n_blocks);
      tc.gamma_init = get_or(t, "gamma_init", tc.gamma_init);
      tc.p = get_or(t, "p", tc.p);
      tc.lambda = get_or(t, "lambda", tc.lambda);
      tc.lr = get_or(t, "lr", tc.lr);
      tc.max_iters = get_or(t, "max_iters", tc.max_iters);
      tc.patience_iters = get_or(t, "patience_iters", tc.patience_iters);
      tc.patience_rel_tol = get_or(t, "patience_rel_tol", tc.patience_rel_tol);
      tc.n_collocation = get_or(t, "n_collocation", tc.n_collocation);
      tc.seed = get_or(t, "seed", tc.seed);
      tc.base_dims = get_or(t, "base_dims", tc.base_dims);
      tc.block_dims = get_or(t, "block_dims", tc.block_dims);
      tc.alpha_init = get_or(t, "alpha_init", tc.alpha_init);
      tc.log_stride = get_or(t, "log_stride", tc.log_stride);
      if (t.contains("training_mode")) {
        tc.training_mode = mode_from_string(t.at("training_mode").get<std::string>());
      }
      if (t.contains("activation")) {
        tc.activation = activation_from_string(t.at("activation").get<std::string>());
      }
    }
    cfg.sweep_n = get_or(j, "sweep_n", cfg.sweep_n);
    cfg.seeds = get_or(j, "seeds", cfg.seeds);
    cfg.noise_sigma = get_or(j, "noise_sigma", cfg.noise_sigma);
    cfg.out_dir = get_or<std::string>(j, "out_dir", cfg.out_dir.string());
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config field error: ") + e.what());
  }
  try {
    cfg.train.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("invalid train config: ") + e.what());
  }
  if (cfg.scenario.grid.nx < 2) throw ConfigError("nx must be >= 2");
  for (int nv : cfg.sweep_n) {
    if (nv < 0) throw ConfigError("sweep_n entries must be >= 0");
  }
  return cfg;
}

ExperimentConfig ExperimentConfig::from_file(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read config: " + path.string());
  std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return from_json_text(text);
}

std::string ExperimentConfig::resolved_json() const {
  json j;
  j["scenario"] = {
      {"v_f", scenario.flux.v_f},
      {"length", scenario.grid.length_L},
      {"time", scenario.grid.time_T},
      {"nx", scenario.grid.nx},
      {"cfl", scenario.grid.cfl},
      {"initial", {{"breaks", scenario.initial.breaks}, {"values", scenario.initial.values}}},
      {"bc_left", scenario.bc_left},
      {"bc_right", scenario.bc_right},
  };
  j["train"] = {
      {"n_blocks", train.n_blocks},
      {"gamma_init", train.gamma_init},
      {"p", train.p},
      {"lambda", train.lambda},
      {"lr", train.lr},
      {"max_iters", train.max_iters},
      {"patience_iters", train.patience_iters},
      {"patience_rel_tol", train.patience_rel_tol},
      {"n_collocation", train.n_collocation},
      {"seed", train.seed},
      {"base_dims", train.base_dims},
      {"block_dims", train.block_dims},
      {"alpha_init", train.alpha_init},
      {"training_mode", mode_to_string(train.training_mode)},
      {"activation", to_string(train.activation)},
      {"log_stride", train.log_stride},
  };
  j["sweep_n"] = sweep_n;
  j["seeds"] = seeds;
  j["noise_sigma"] = noise_sigma;
  j["out_dir"] = out_dir.string();
  return j.dump(2) + "\n";
}

DensityField run_simulate(const ExperimentConfig& cfg, bool quiet) {
  const std::vector<double> u0 = cfg.scenario.initial.sample(cfg.scenario.grid);
  const BoundaryTrace bc = BoundaryTrace::constants(cfg.scenario.bc_left, cfg.scenario.bc_right);
  DensityField field = simulate(u0, bc, cfg.scenario.grid, cfg.scenario.flux);
  if (!quiet) {
    std::printf("grid: nx=%d nt=%d dx=%.6g dt=%.6g L=%g T=%g v_f=%g\n",
                field.grid.nx, field.nt(), field.grid.dx(), field.dt,
                field.grid.length_L, field.grid.time_T, field.v_f);
  }
  return field;
}

TrainOutputs run_train(const ExperimentConfig& cfg, const DensityField& field,
                       const std::vector<Measurement>& data, bool quiet) {
  const TrainingPoints colloc = sample_collocation(
      cfg.scenario.grid.time_T, cfg.scenario.grid.length_L, cfg.train.n_collocation,
      cfg.train.seed ^ 0x636f6c6c6f63ULL);
  TrainOutputs out{train(cfg.train, data, colloc, cfg.scenario.flux), {}};
  out.report = error_distribution(field, out.result.model, cfg.train.n_blocks);
  if (!quiet) {
    std::printf("n=%d seed=%llu stop_iter=%d rel_l2=%.6g\n", cfg.train.n_blocks,
                static_cast<unsigned long long>(cfg.train.seed),
                out.result.history.stop_iteration, out.report.relative_l2);
  }
  return out;
}

void write_grid_csv(const Eigen::MatrixXd& grid, const std::filesystem::path& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write grid csv: " + path.string());
  char buf[40];
  for (Eigen::Index i = 0; i < grid.rows(); ++i) {
    for (Eigen::Index j = 0; j < grid.cols(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", grid(i, j));
      if (j > 0) f << ',';
      f << buf;
    }
    f << '\n';
  }
}

namespace {

Eigen::MatrixXd stage_grid(const DensityField& field, const StackedPinn& model, int stage) {
  Eigen::VectorXd ts, xs;
  field_eval_points(field, ts, xs);
  const Eigen::MatrixXd stages = eval_stages_values(model, ts, xs);
  Eigen::MatrixXd grid(field.values.rows(), field.values.cols());
  Eigen::Index k = 0;
  for (Eigen::Index it = 0; it < grid.rows(); ++it) {
    for (Eigen::Index j = 0; j < grid.cols(); ++j) grid(it, j) = stages(stage, k++);
  }
  return grid;
}

}  // namespace

std::vector<SweepRow> run_sweep(const ExperimentConfig& cfg, bool quiet) {
  namespace fs = std::filesystem;
  fs::create_directories(cfg.out_dir);
  {
    std::ofstream rc(cfg.out_dir / "resolved_config.json");
    rc << cfg.resolved_json();
  }
  DensityField field = run_simulate(cfg, quiet);
  save_field(field, cfg.out_dir / "field.txt");
  const std::vector<Measurement> data =
      sample_measurements(field, cfg.noise_sigma, cfg.seeds.empty() ? 0 : cfg.seeds.front());
  save_dataset(data, cfg.out_dir / "dataset.txt");

  std::vector<SweepRow> rows;
  std::ofstream summary(cfg.out_dir / "summary.csv");
  summary << "n,seed,relative_l2,stop_iteration\n";
  std::ofstream boxplot(cfg.out_dir / "boxplot.csv");
  boxplot << "n,seed,min,q1,median,q3,max\n";
  char buf[64];
  for (int nv : cfg.sweep_n) {
    for (std::uint64_t seed : cfg.seeds) {
      ExperimentConfig cell = cfg;
      cell.train.n_blocks = nv;
      cell.train.seed = seed;
      const TrainOutputs out = run_train(cell, field, data, quiet);
      const std::string tag = "n" + std::to_string(nv) + "_seed" + std::to_string(seed);
      out.result.model.save_checkpoint(cfg.out_dir / ("checkpoint_" + tag + ".json"));
      save_history_csv(out.result.history, cfg.out_dir / ("history_" + tag + ".csv"));
      save_report(out.report, cfg.out_dir / ("report_" + tag + ".txt"));

      const Eigen::MatrixXd uhat = stage_grid(field, out.result.model, nv);
      write_grid_csv(uhat, cfg.out_dir / ("uhat_" + tag + ".csv"));
      write_grid_csv(uhat - field.values, cfg.out_dir / ("error_" + tag + ".csv"));
      if (nv >= 1) {
        const Eigen::MatrixXd s1 = stage_grid(field, out.result.model, 1);
        const Eigen::MatrixXd s0 = stage_grid(field, out.result.model, 0);
        write_grid_csv(s1 - s0, cfg.out_dir / ("block1_" + tag + ".csv"));
      }
      rows.push_back({nv, seed, out.report.relative_l2, out.result.history.stop_iteration});
      std::snprintf(buf, sizeof(buf), "%.17g", out.report.relative_l2);
      summary << nv << ',' << seed << ',' << buf << ',' << out.result.history.stop_iteration << "\n";
      auto put = [&](double v) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        boxplot << ',' << buf;
      };
      boxplot << nv << ',' << seed;
      put(out.report.min);
      put(out.report.q1);
      put(out.report.median);
      put(out.report.q3);
      put(out.report.max);
      boxplot << "\n";
    }
  }
  return rows;
}

}  // namespace vspinn
