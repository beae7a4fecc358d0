#include "vspinn/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>

namespace vspinn {

void TrainConfig::validate() const {
  if (n_blocks < 0) throw std::invalid_argument("n_blocks must be >= 0");
  if (gamma_init < 0.0) throw std::invalid_argument("gamma_init must be >= 0");
  if (p <= 1.0) throw std::invalid_argument("p must be > 1");
  if (lambda <= 0.0) throw std::invalid_argument("lambda must be > 0");
  if (lr <= 0.0) throw std::invalid_argument("lr must be > 0");
  if (max_iters < 0) throw std::invalid_argument("max_iters must be >= 0");
  if (patience_iters <= 0) throw std::invalid_argument("patience_iters must be > 0");
  if (n_collocation < 1) throw std::invalid_argument("n_collocation must be >= 1");
  if (log_stride < 1) throw std::invalid_argument("log_stride must be >= 1");
  if (base_dims.size() < 2 || base_dims.front() != 2 || base_dims.back() != 1) {
    throw std::invalid_argument("base_dims must be [2, ..., 1]");
  }
  if (n_blocks > 0 &&
      (block_dims.size() < 2 || block_dims.front() != 3 || block_dims.back() != 1)) {
    throw std::invalid_argument("block_dims must be [3, ..., 1]");
  }
}

std::vector<double> TrainConfig::gammas() const {
  if (n_blocks == 0) return {0.0};
  ViscositySchedule sched{gamma_init, p, n_blocks};
  std::vector<double> g(static_cast<std::size_t>(n_blocks) + 1);
  for (int i = 0; i <= n_blocks; ++i) g[static_cast<std::size_t>(i)] = sched.at(i);
  return g;
}

void adam_step(Eigen::VectorXd& params, const Eigen::VectorXd& grad,
               AdamState& state, double lr) {
  constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  state.t += 1;
  state.m = beta1 * state.m + (1.0 - beta1) * grad;
  state.v = beta2 * state.v + (1.0 - beta2) * grad.cwiseProduct(grad);
  const double c1 = 1.0 - std::pow(beta1, state.t);
  const double c2 = 1.0 - std::pow(beta2, state.t);
  params.array() -=
      lr * (state.m.array() / c1) / ((state.v.array() / c2).sqrt() + eps);
}

TrainingPoints sample_collocation(double time_T, double length_L, int count,
                                  std::uint64_t seed) {
  if (count < 1) throw std::invalid_argument("sample_collocation: count must be >= 1");
  TrainingPoints pts;
  pts.colloc_t.resize(count);
  pts.colloc_x.resize(count);
  std::mt19937_64 rng(seed);
  auto u01 = [&rng]() { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
  for (int i = 0; i < count; ++i) {
    pts.colloc_t(i) = time_T * u01();
    pts.colloc_x(i) = length_L * u01();
  }
  return pts;
}

double loss_data(const StackedPinn& model, int stage, const std::vector<Measurement>& data) {
  if (data.empty()) throw std::invalid_argument("loss_data: empty dataset");
  double acc = 0.0;
  for (const auto& d : data) {
    const double e = d.u - model.eval_stage(stage, d.t, d.x);
    acc += e * e;
  }
  return acc / static_cast<double>(data.size());
}

double loss_phy(const StackedPinn& model, int stage, double gamma,
                const GreenshieldsFlux& flux, const TrainingPoints& colloc) {
  if (colloc.n_colloc() < 1) throw std::invalid_argument("loss_phy: empty collocation set");
  double acc = 0.0;
  for (Eigen::Index i = 0; i < colloc.n_colloc(); ++i) {
    const Jet2d jet = model.eval_stage_jet(stage, colloc.colloc_t(i), colloc.colloc_x(i));
    const double r = residual(jet, flux, gamma);
    acc += r * r;
  }
  return acc / static_cast<double>(colloc.n_colloc());
}

double total_loss(const StackedPinn& model, const std::vector<Measurement>& data,
                  const TrainingPoints& colloc, const GreenshieldsFlux& flux,
                  const TrainConfig& cfg) {
  const std::vector<double> gammas = cfg.gammas();
  const int n = model.n_stages();
  double acc = 0.0;
  for (int i = 0; i <= n; ++i) {
    acc += loss_data(model, i, data) +
           cfg.lambda * loss_phy(model, i, gammas[static_cast<std::size_t>(i)], flux, colloc);
  }
  acc /= static_cast<double>(n + 1);
  for (const auto& blk : model.blocks) acc += blk.alpha * blk.alpha;
  return acc;
}

namespace {

TrainingPoints merge_points(const std::vector<Measurement>& data,
                            const TrainingPoints& colloc) {
  TrainingPoints pts = colloc;
  const Eigen::Index nd = static_cast<Eigen::Index>(data.size());
  pts.data_t.resize(nd);
  pts.data_x.resize(nd);
  pts.data_u.resize(nd);
  for (Eigen::Index i = 0; i < nd; ++i) {
    pts.data_t(i) = data[static_cast<std::size_t>(i)].t;
    pts.data_x(i) = data[static_cast<std::size_t>(i)].x;
    pts.data_u(i) = data[static_cast<std::size_t>(i)].u;
  }
  return pts;
}

TrainRecord make_record(int iter, const StageLosses& losses, const StackedPinn& model) {
  TrainRecord rec;
  rec.iteration = iter;
  rec.total = losses.total;
  rec.data_losses = losses.data;
  rec.phy_losses = losses.phy;
  for (const auto& blk : model.blocks) rec.alphas.push_back(blk.alpha);
  return rec;
}

}  // namespace

TrainResult train(const TrainConfig& cfg, const std::vector<Measurement>& data,
                  const TrainingPoints& colloc, const GreenshieldsFlux& flux) {
  cfg.validate();
  if (data.empty()) throw std::invalid_argument("train: empty dataset");

  StackedPinn model = StackedPinn::init(cfg.base_dims, cfg.block_dims, cfg.n_blocks,
                                        cfg.alpha_init, cfg.gamma_init, cfg.p,
                                        cfg.activation, cfg.seed);
  TrainHistory history;
  if (cfg.max_iters == 0) return {std::move(model), std::move(history)};

  const TrainingPoints pts = merge_points(data, colloc);
  LossGradEngine engine(model, flux, pts, cfg.lambda);
  const std::vector<double> gammas = cfg.gammas();
  const int n = cfg.n_blocks;
  const ParamLayout layout = param_layout(model);

  Eigen::VectorXd params(static_cast<Eigen::Index>(layout.total));
  model.flatten({params.data(), layout.total});
  Eigen::VectorXd grad(params.size());
  AdamState adam(params.size());

  const int n_phases = cfg.training_mode == TrainingMode::Sequential ? n + 1 : 1;
  const int iters_per_phase =
      n_phases == 1 ? cfg.max_iters : std::max(1, cfg.max_iters / n_phases);

  int iter = 0;
  bool stopped_early = false;
  for (int phase = 0; phase < n_phases && !stopped_early; ++phase) {
    std::vector<double> stage_w(static_cast<std::size_t>(n) + 1, 0.0);
    std::vector<double> alpha_pen(static_cast<std::size_t>(n), 0.0);
    if (cfg.training_mode == TrainingMode::Joint) {
      for (auto& w : stage_w) w = 1.0 / static_cast<double>(n + 1);
      for (auto& a : alpha_pen) a = 1.0;
    } else {
      stage_w[static_cast<std::size_t>(phase)] = 1.0;
      if (phase >= 1) alpha_pen[static_cast<std::size_t>(phase) - 1] = 1.0;
    }
    PlateauDetector plateau(cfg.patience_iters, cfg.patience_rel_tol);
    const int phase_end = (phase == n_phases - 1) ? cfg.max_iters : iter + iters_per_phase;
    while (iter < phase_end) {
      ++iter;
      const StageLosses losses = engine.compute(model, gammas, stage_w, alpha_pen, &grad);
      if (!std::isfinite(losses.total)) {
        throw DivergenceError("training diverged: non-finite loss", iter);
      }
      if ((iter - 1) % cfg.log_stride == 0 || iter == cfg.max_iters) {
        history.records.push_back(make_record(iter, losses, model));
      }
      if (plateau.observe(iter, losses.total)) {
        history.stop_reason = StopReason::EarlyStop;
        history.stop_iteration = iter;
        stopped_early = true;
        if (history.records.empty() || history.records.back().iteration != iter) {
          history.records.push_back(make_record(iter, losses, model));
        }
        break;
      }
      if (cfg.training_mode == TrainingMode::Sequential) {
        // Freeze every parameter outside the current phase.
        Eigen::VectorXd masked = Eigen::VectorXd::Zero(grad.size());
        if (phase == 0) {
          masked.head(static_cast<Eigen::Index>(layout.base_count)) =
              grad.head(static_cast<Eigen::Index>(layout.base_count));
        } else {
          const auto& bs = layout.blocks[static_cast<std::size_t>(phase) - 1];
          masked(static_cast<Eigen::Index>(bs.alpha_index)) =
              grad(static_cast<Eigen::Index>(bs.alpha_index));
          masked.segment(static_cast<Eigen::Index>(bs.net_offset),
                         static_cast<Eigen::Index>(bs.net_count)) =
              grad.segment(static_cast<Eigen::Index>(bs.net_offset),
                           static_cast<Eigen::Index>(bs.net_count));
        }
        grad = masked;
      }
      if (!grad.allFinite()) {
        throw DivergenceError("training diverged: non-finite gradient", iter);
      }
      adam_step(params, grad, adam, cfg.lr);
      model.unflatten({params.data(), layout.total});
    }
  }
  if (!stopped_early) {
    history.stop_reason = StopReason::MaxIters;
    history.stop_iteration = iter;
  }
  return {std::move(model), std::move(history)};
}

void save_history_csv(const TrainHistory& history, const std::filesystem::path& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write history: " + path.string());
  const std::size_t n_stages = history.records.empty()
                                   ? 0
                                   : history.records.front().data_losses.size();
  f << "iter,total";
  for (std::size_t i = 0; i < n_stages; ++i) f << ",data" << i;
  for (std::size_t i = 0; i < n_stages; ++i) f << ",phy" << i;
  const std::size_t n_alpha = n_stages > 0 ? n_stages - 1 : 0;
  for (std::size_t i = 1; i <= n_alpha; ++i) f << ",alpha" << i;
  f << "\n";
  char buf[40];
  for (const auto& rec : history.records) {
    f << rec.iteration;
    auto put = [&](double v) {
      std::snprintf(buf, sizeof(buf), "%.17g", v);
      f << ',' << buf;
    };
    put(rec.total);
    for (double v : rec.data_losses) put(v);
    for (double v : rec.phy_losses) put(v);
    for (double v : rec.alphas) put(v);
    f << "\n";
  }
}

}  // namespace vspinn
