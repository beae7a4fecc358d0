#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "vspinn/batch.hpp"
#include "vspinn/godunov.hpp"
#include "vspinn/stacked.hpp"

namespace vspinn {

enum class TrainingMode { Joint, Sequential };

struct TrainConfig {
  int n_blocks = 0;
  double gamma_init = 0.1;
  double p = 2.0;
  double lambda = 0.1;
  double lr = 1e-3;
  int max_iters = 15000;
  int patience_iters = 1500;
  double patience_rel_tol = 1e-4;
  int n_collocation = 10000;
  std::uint64_t seed = 0;
  std::vector<int> base_dims = {2, 30, 30, 30, 1};
  std::vector<int> block_dims = {3, 40, 40, 40, 1};
  double alpha_init = 0.05;
  TrainingMode training_mode = TrainingMode::Joint;
  Activation activation = Activation::Tanh;
  int log_stride = 50;

  void validate() const;
  // Per-stage viscosities; n_blocks = 0 is the gamma = 0 (vanilla) path.
  std::vector<double> gammas() const;
};

struct TrainRecord {
  int iteration = 0;
  double total = 0.0;
  std::vector<double> data_losses;  // per stage
  std::vector<double> phy_losses;   // per stage
  std::vector<double> alphas;
};

enum class StopReason { MaxIters, EarlyStop };

struct TrainHistory {
  std::vector<TrainRecord> records;
  StopReason stop_reason = StopReason::MaxIters;
  int stop_iteration = 0;
};

class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, int iteration)
      : std::runtime_error(what), iteration(iteration) {}
  int iteration;
};

// Best-so-far tracker: fires once the best loss has not improved by a
// relative tolerance within `patience` consecutive iterations.
class PlateauDetector {
 public:
  PlateauDetector(int patience, double rel_tol)
      : patience_(patience), rel_tol_(rel_tol) {}

  bool observe(int iteration, double loss) {
    if (loss < best_ * (1.0 - rel_tol_)) {
      best_ = loss;
      best_iteration_ = iteration;
    }
    return iteration - best_iteration_ >= patience_;
  }

 private:
  int patience_;
  double rel_tol_;
  double best_ = std::numeric_limits<double>::infinity();
  int best_iteration_ = 0;
};

// Adam with bias correction; beta1 = 0.9, beta2 = 0.999, eps = 1e-8.
struct AdamState {
  Eigen::VectorXd m, v;
  int t = 0;

  explicit AdamState(Eigen::Index n)
      : m(Eigen::VectorXd::Zero(n)), v(Eigen::VectorXd::Zero(n)) {}
};

void adam_step(Eigen::VectorXd& params, const Eigen::VectorXd& grad,
               AdamState& state, double lr);

// Uniform i.i.d. points over [0,T] x [0,L], deterministic per seed.
TrainingPoints sample_collocation(double time_T, double length_L, int count,
                                  std::uint64_t seed);

// Reference per-point losses (spec contracts; the engine reproduces these).
double loss_data(const StackedPinn& model, int stage, const std::vector<Measurement>& data);
double loss_phy(const StackedPinn& model, int stage, double gamma,
                const GreenshieldsFlux& flux, const TrainingPoints& colloc);
double total_loss(const StackedPinn& model, const std::vector<Measurement>& data,
                  const TrainingPoints& colloc, const GreenshieldsFlux& flux,
                  const TrainConfig& cfg);

struct TrainResult {
  StackedPinn model;
  TrainHistory history;
};

TrainResult train(const TrainConfig& cfg, const std::vector<Measurement>& data,
                  const TrainingPoints& colloc, const GreenshieldsFlux& flux);

void save_history_csv(const TrainHistory& history, const std::filesystem::path& path);

}  // namespace vspinn
