#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "vspinn/godunov.hpp"
#include "vspinn/metrics.hpp"
#include "vspinn/trainer.hpp"

namespace vspinn {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Piecewise-constant initial profile: values[k] on [breaks[k-1], breaks[k]).
struct InitialProfile {
  std::vector<double> breaks;  // interior break points, increasing, in (0, L)
  std::vector<double> values;  // breaks.size() + 1 entries

  std::vector<double> sample(const GridSpec& grid) const;
  double left_value() const { return values.front(); }
  double right_value() const { return values.back(); }
};

struct Scenario {
  GreenshieldsFlux flux;
  GridSpec grid;
  InitialProfile initial{{1.0 / 3.0, 2.0 / 3.0}, {0.8, 0.2, 0.6}};
  double bc_left = 0.8;
  double bc_right = 0.6;
};

struct ExperimentConfig {
  Scenario scenario;
  TrainConfig train;
  std::vector<int> sweep_n = {0, 1, 3, 5};
  std::vector<std::uint64_t> seeds = {1, 2, 3};
  double noise_sigma = 0.0;
  std::filesystem::path out_dir = "out";

  static ExperimentConfig from_file(const std::filesystem::path& path);
  static ExperimentConfig from_json_text(const std::string& text);
  // Every defaulted value written out explicitly.
  std::string resolved_json() const;
};

struct SweepRow {
  int n = 0;
  std::uint64_t seed = 0;
  double relative_l2 = 0.0;
  int stop_iteration = 0;
};

DensityField run_simulate(const ExperimentConfig& cfg, bool quiet = false);

struct TrainOutputs {
  TrainResult result;
  ErrorReport report;
};

TrainOutputs run_train(const ExperimentConfig& cfg, const DensityField& field,
                       const std::vector<Measurement>& data, bool quiet = false);

std::vector<SweepRow> run_sweep(const ExperimentConfig& cfg, bool quiet = false);

void write_grid_csv(const Eigen::MatrixXd& grid, const std::filesystem::path& path);

}  // namespace vspinn
