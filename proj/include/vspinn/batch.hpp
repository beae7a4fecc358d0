#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "vspinn/godunov.hpp"
#include "vspinn/stacked.hpp"

namespace vspinn {

// Point sets the trainer evaluates every iteration: collocation points for
// the physics loss and measured (t, x, u) triples for the data loss.
struct TrainingPoints {
  Eigen::VectorXd colloc_t, colloc_x;
  Eigen::VectorXd data_t, data_x, data_u;

  Eigen::Index n_colloc() const { return colloc_t.size(); }
  Eigen::Index n_data() const { return data_t.size(); }
};

struct StageLosses {
  double total = 0.0;
  std::vector<double> data;  // per stage
  std::vector<double> phy;   // per stage
};

// Batched loss + gradient over all points and all stages. Points are
// processed in cache-sized panels; within a panel every layer is one GEMM
// over the jet slots [v | dt | dx | dxx] stored as column blocks (data points
// carry only the value slot, since no derivatives are needed there). Both
// loss terms are means of pointwise quantities, so their adjoint seeds are
// local to each point: each panel runs the full forward and reverse sweep
// through all stages while its activations are still in cache, which keeps
// the pipeline compute-bound instead of memory-bound. All reductions run in
// a fixed sequential order, so results are reproducible bit for bit.
class LossGradEngine {
 public:
  LossGradEngine(const StackedPinn& model, const GreenshieldsFlux& flux,
                 const TrainingPoints& pts, double lambda);

  // gammas/stage_weights have n+1 entries, alpha_penalty has n entries.
  // grad (of size param_count) may be null for a loss-only evaluation.
  StageLosses compute(const StackedPinn& model, std::span<const double> gammas,
                      std::span<const double> stage_weights,
                      std::span<const double> alpha_penalty,
                      Eigen::VectorXd* grad);

 private:
  // A panel covers m consecutive points; its buffers hold ns*m columns with
  // the point's jet slots at offsets {0, m, 2m, 3m}. Collocation panels carry
  // ns in {3,4} slots, data panels a single value slot (ns = 1).
  struct Panel {
    Eigen::Index j0;  // first point (collocation index, or data index)
    Eigen::Index m;   // number of points
    bool colloc;
  };
  // Per-stage activation storage for the panel currently being processed.
  struct StageBuf {
    std::vector<Eigen::MatrixXd> Z, H;  // per hidden layer
    Eigen::RowVectorXd y;               // raw net output jets
    Eigen::RowVectorXd s;               // composed stage jets
    Eigen::RowVectorXd gs;              // stage adjoint
    Eigen::RowVectorXd r, fp;           // residual, f'(u); collocation only
  };

  void panel_forward(const DenseNet& net, int ns, Eigen::Index m,
                     Eigen::Index a0_rows, StageBuf& sb);
  void panel_backward(const DenseNet& net, int ns, Eigen::Index m,
                      Eigen::Index a0_rows, const StageBuf& sb,
                      std::size_t param_offset, Eigen::VectorXd& grad,
                      bool want_ga0);

  GreenshieldsFlux flux_;
  double lambda_;
  Eigen::Index nc_ = 0, nd_ = 0, n_ = 0;  // colloc, data, total points
  Eigen::VectorXd colloc_t_, colloc_x_;
  Eigen::VectorXd data_t_, data_x_, data_u_;
  std::vector<Panel> panels_;
  std::vector<StageBuf> stages_;          // one per stage, panel-sized
  // Panel-sized scratch, reused across panels and stages.
  Eigen::MatrixXd a0p_;                   // input jets (<= 3 rows)
  Eigen::RowVectorXd gyp_;                // net output adjoint
  Eigen::MatrixXd gap_, gbp_;             // adjoint buffers
  Eigen::RowVectorXd ga0p_;               // input-jet adjoint, row 2 only
};

// Values of every stage at arbitrary points, one batched forward.
// Row i of the result holds stage i.
Eigen::MatrixXd eval_stages_values(const StackedPinn& model,
                                   const Eigen::VectorXd& ts,
                                   const Eigen::VectorXd& xs);

}  // namespace vspinn
