#include "vspinn/batch.hpp"

#include <cmath>
#include <stdexcept>

namespace vspinn {

namespace {

constexpr Eigen::Index kCollocPanel = 64;   // points per collocation panel
constexpr Eigen::Index kDataPanel = 256;    // points per data panel
constexpr Eigen::Index kPanelCols = 256;    // max columns any panel needs

double sgn0(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

std::size_t layer_offset(const std::vector<int>& dims, int layer) {
  std::size_t off = 0;
  for (int l = 0; l < layer; ++l) {
    off += static_cast<std::size_t>(dims[static_cast<std::size_t>(l) + 1]) *
           static_cast<std::size_t>(dims[static_cast<std::size_t>(l)] + 1);
  }
  return off;
}

using RowMajorMap =
    Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

}  // namespace

LossGradEngine::LossGradEngine(const StackedPinn& model,
                               const GreenshieldsFlux& flux,
                               const TrainingPoints& pts, double lambda)
    : flux_(flux), lambda_(lambda) {
  nc_ = pts.n_colloc();
  nd_ = pts.n_data();
  n_ = nc_ + nd_;
  if (nc_ < 1) throw std::invalid_argument("LossGradEngine: empty collocation set");
  if (nd_ < 1) throw std::invalid_argument("LossGradEngine: empty dataset");
  colloc_t_ = pts.colloc_t;
  colloc_x_ = pts.colloc_x;
  data_t_ = pts.data_t;
  data_x_ = pts.data_x;
  data_u_ = pts.data_u;

  for (Eigen::Index j = 0; j < nc_; j += kCollocPanel) {
    panels_.push_back({j, std::min(kCollocPanel, nc_ - j), true});
  }
  for (Eigen::Index j = 0; j < nd_; j += kDataPanel) {
    panels_.push_back({j, std::min(kDataPanel, nd_ - j), false});
  }

  const int n_stages = model.n_stages();
  stages_.resize(static_cast<std::size_t>(n_stages) + 1);
  int max_width = 0;
  for (int i = 0; i <= n_stages; ++i) {
    const DenseNet& net = (i == 0) ? model.base : model.blocks[static_cast<std::size_t>(i) - 1].net;
    StageBuf& sb = stages_[static_cast<std::size_t>(i)];
    const int hidden = net.n_layers() - 1;
    sb.Z.resize(static_cast<std::size_t>(hidden));
    sb.H.resize(static_cast<std::size_t>(hidden));
    for (int l = 0; l < hidden; ++l) {
      sb.Z[static_cast<std::size_t>(l)].setZero(net.dims[static_cast<std::size_t>(l) + 1], kPanelCols);
      sb.H[static_cast<std::size_t>(l)].setZero(net.dims[static_cast<std::size_t>(l) + 1], kPanelCols);
    }
    sb.y.setZero(kPanelCols);
    sb.s.setZero(kPanelCols);
    sb.gs.setZero(kPanelCols);
    sb.r.setZero(kCollocPanel);
    sb.fp.setZero(kCollocPanel);
    for (int d : net.dims) max_width = std::max(max_width, d);
  }
  a0p_.setZero(3, kPanelCols);
  gyp_.setZero(kPanelCols);
  gap_.setZero(max_width, kPanelCols);
  gbp_.setZero(max_width, kPanelCols);
  ga0p_.setZero(kPanelCols);
}

void LossGradEngine::panel_forward(const DenseNet& net, int ns, Eigen::Index m,
                                   Eigen::Index a0_rows, StageBuf& sb) {
  const Eigen::Index w = ns * m;
  const int hidden = net.n_layers() - 1;
  const Eigen::MatrixXd* prev = &a0p_;
  Eigen::Index prev_rows = a0_rows;
  for (int l = 0; l < hidden; ++l) {
    Eigen::MatrixXd& Z = sb.Z[static_cast<std::size_t>(l)];
    Eigen::MatrixXd& H = sb.H[static_cast<std::size_t>(l)];
    const Eigen::MatrixXd& W = net.W[static_cast<std::size_t>(l)];
    const Eigen::Index rows = W.rows();
    Z.topLeftCorner(rows, w).noalias() = W * prev->topLeftCorner(prev_rows, w);
    Z.topLeftCorner(rows, m).colwise() += net.b[static_cast<std::size_t>(l)];
    // tanh via exp so Eigen can vectorize it for doubles (std::tanh is a
    // scalar call and dominates the iteration cost otherwise).
    H.topLeftCorner(rows, m) =
        1.0 - 2.0 / ((2.0 * Z.topLeftCorner(rows, m).array()).exp() + 1.0);
    if (ns >= 3) {
      // Derivative slots, one fused pass per point.
      const double* zpd = Z.data();
      double* hpd = H.data();
      const Eigen::Index ld = Z.rows();
      for (Eigen::Index j = 0; j < m; ++j) {
        const double* hv = hpd + j * ld;
        const double* zdt = zpd + (m + j) * ld;
        const double* zdx = zpd + (2 * m + j) * ld;
        double* hdt = hpd + (m + j) * ld;
        double* hdx = hpd + (2 * m + j) * ld;
        if (ns == 4) {
          const double* zdxx = zpd + (3 * m + j) * ld;
          double* hdxx = hpd + (3 * m + j) * ld;
          for (Eigen::Index r = 0; r < rows; ++r) {
            const double h = hv[r];
            const double p1 = 1.0 - h * h;
            const double zx = zdx[r];
            hdt[r] = p1 * zdt[r];
            hdx[r] = p1 * zx;
            hdxx[r] = (-2.0 * h * p1) * (zx * zx) + p1 * zdxx[r];
          }
        } else {
          for (Eigen::Index r = 0; r < rows; ++r) {
            const double h = hv[r];
            const double p1 = 1.0 - h * h;
            hdt[r] = p1 * zdt[r];
            hdx[r] = p1 * zdx[r];
          }
        }
      }
    }
    prev = &H;
    prev_rows = rows;
  }
  const Eigen::MatrixXd& Wl = net.W.back();
  sb.y.head(w).noalias() = (Wl * prev->topLeftCorner(prev_rows, w)).row(0);
  sb.y.head(m).array() += net.b.back()(0);
}

void LossGradEngine::panel_backward(const DenseNet& net, int ns, Eigen::Index m,
                                    Eigen::Index a0_rows, const StageBuf& sb,
                                    std::size_t param_offset, Eigen::VectorXd& grad,
                                    bool want_ga0) {
  const Eigen::Index w = ns * m;
  const int hidden = net.n_layers() - 1;
  const std::vector<int>& dims = net.dims;

  // Output layer (linear).
  {
    const Eigen::MatrixXd& Wl = net.W.back();
    const Eigen::MatrixXd& Hl = sb.H[static_cast<std::size_t>(hidden) - 1];
    const std::size_t off = param_offset + layer_offset(dims, hidden);
    const int n_in = dims[static_cast<std::size_t>(hidden)];
    RowMajorMap gw(grad.data() + off, 1, n_in);
    gw.noalias() += gyp_.head(w) * Hl.topLeftCorner(n_in, w).transpose();
    grad(static_cast<Eigen::Index>(off) + n_in) += gyp_.head(m).sum();
    gap_.topLeftCorner(n_in, w).noalias() = Wl.transpose() * gyp_.head(w);
  }

  for (int l = hidden - 1; l >= 0; --l) {
    const Eigen::Index rows = dims[static_cast<std::size_t>(l) + 1];
    const Eigen::MatrixXd& Z = sb.Z[static_cast<std::size_t>(l)];
    const Eigen::MatrixXd& H = sb.H[static_cast<std::size_t>(l)];
    if (ns == 1) {
      gbp_.topLeftCorner(rows, m).array() =
          gap_.topLeftCorner(rows, m).array() *
          (1.0 - H.topLeftCorner(rows, m).array().square());
    } else {
      // One fused pass over all jet slots per point.
      const double* zpd = Z.data();
      const double* hpd = H.data();
      const double* gapd = gap_.data();
      double* gbpd = gbp_.data();
      const Eigen::Index ld = Z.rows();
      const Eigen::Index lg = gap_.rows();
      for (Eigen::Index j = 0; j < m; ++j) {
        const double* hv = hpd + j * ld;
        const double* zdt = zpd + (m + j) * ld;
        const double* zdx = zpd + (2 * m + j) * ld;
        const double* gh0 = gapd + j * lg;
        const double* gh1 = gapd + (m + j) * lg;
        const double* gh2 = gapd + (2 * m + j) * lg;
        double* gz0 = gbpd + j * lg;
        double* gz1 = gbpd + (m + j) * lg;
        double* gz2 = gbpd + (2 * m + j) * lg;
        if (ns == 4) {
          const double* zdxx = zpd + (3 * m + j) * ld;
          const double* gh3 = gapd + (3 * m + j) * lg;
          double* gz3 = gbpd + (3 * m + j) * lg;
          for (Eigen::Index r = 0; r < rows; ++r) {
            const double h = hv[r];
            const double p1 = 1.0 - h * h;
            const double p2 = -2.0 * h * p1;
            const double zx = zdx[r];
            // phi''' = phi' (6 phi^2 - 2) for tanh
            gz0[r] = gh0[r] * p1 + (gh1[r] * p2) * zdt[r] + (gh2[r] * p2) * zx +
                     gh3[r] * ((p1 * (6.0 * h * h - 2.0)) * (zx * zx) + p2 * zdxx[r]);
            gz1[r] = gh1[r] * p1;
            gz2[r] = gh2[r] * p1 + ((gh3[r] * 2.0) * p2) * zx;
            gz3[r] = gh3[r] * p1;
          }
        } else {
          for (Eigen::Index r = 0; r < rows; ++r) {
            const double h = hv[r];
            const double p1 = 1.0 - h * h;
            const double p2 = -2.0 * h * p1;
            gz0[r] = gh0[r] * p1 + (gh1[r] * p2) * zdt[r] + (gh2[r] * p2) * zdx[r];
            gz1[r] = gh1[r] * p1;
            gz2[r] = gh2[r] * p1;
          }
        }
      }
    }

    const Eigen::MatrixXd& A = (l == 0) ? a0p_ : sb.H[static_cast<std::size_t>(l) - 1];
    const Eigen::Index n_in = (l == 0) ? a0_rows : dims[static_cast<std::size_t>(l)];
    const std::size_t off = param_offset + layer_offset(dims, l);
    RowMajorMap gw(grad.data() + off, rows, n_in);
    gw.noalias() += gbp_.topLeftCorner(rows, w) * A.topLeftCorner(n_in, w).transpose();
    Eigen::Map<Eigen::VectorXd> gb(grad.data() + off + static_cast<std::size_t>(rows) * n_in, rows);
    gb += gbp_.topLeftCorner(rows, m).rowwise().sum();

    if (l > 0) {
      const Eigen::Index n_prev = dims[static_cast<std::size_t>(l)];
      gap_.topLeftCorner(n_prev, w).noalias() =
          net.W[static_cast<std::size_t>(l)].transpose() * gbp_.topLeftCorner(rows, w);
    } else if (want_ga0) {
      // Only row 2 of the input adjoint (the previous stage's jet) is needed.
      ga0p_.head(w).noalias() = net.W[0].col(2).transpose() * gbp_.topLeftCorner(rows, w);
    }
  }
}

StageLosses LossGradEngine::compute(const StackedPinn& model,
                                    std::span<const double> gammas,
                                    std::span<const double> stage_weights,
                                    std::span<const double> alpha_penalty,
                                    Eigen::VectorXd* grad) {
  const int n_stages = model.n_stages();
  if (static_cast<int>(gammas.size()) != n_stages + 1 ||
      static_cast<int>(stage_weights.size()) != n_stages + 1 ||
      static_cast<int>(alpha_penalty.size()) != n_stages) {
    throw std::invalid_argument("LossGradEngine::compute: size mismatch");
  }
  const ParamLayout layout = param_layout(model);
  auto need_dxx = [&](int i) { return i < n_stages || gammas[static_cast<std::size_t>(i)] != 0.0; };
  auto stage_net = [&](int i) -> const DenseNet& {
    return (i == 0) ? model.base : model.blocks[static_cast<std::size_t>(i) - 1].net;
  };

  StageLosses out;
  out.data.assign(static_cast<std::size_t>(n_stages) + 1, 0.0);
  out.phy.assign(static_cast<std::size_t>(n_stages) + 1, 0.0);
  if (grad != nullptr) grad->setZero(static_cast<Eigen::Index>(layout.total));

  for (const Panel& p : panels_) {
    const Eigen::Index m = p.m;
    // Coordinate jets of this panel: dt slot of t and dx slot of x are one.
    if (p.colloc) {
      a0p_.row(0).segment(0, m) = colloc_t_.segment(p.j0, m).transpose();
      a0p_.row(0).segment(m, 3 * m).setZero();
      a0p_.row(0).segment(m, m).setOnes();
      a0p_.row(1).segment(0, m) = colloc_x_.segment(p.j0, m).transpose();
      a0p_.row(1).segment(m, 3 * m).setZero();
      a0p_.row(1).segment(2 * m, m).setOnes();
    } else {
      a0p_.row(0).head(m) = data_t_.segment(p.j0, m).transpose();
      a0p_.row(1).head(m) = data_x_.segment(p.j0, m).transpose();
    }

    // Forward through all stages; losses accumulate panel by panel.
    for (int i = 0; i <= n_stages; ++i) {
      const std::size_t si = static_cast<std::size_t>(i);
      const int ns = p.colloc ? (need_dxx(i) ? 4 : 3) : 1;
      const Eigen::Index w = ns * m;
      StageBuf& sb = stages_[si];
      const DenseNet& net = stage_net(i);
      if (i > 0) a0p_.row(2).head(w) = stages_[si - 1].s.head(w);
      panel_forward(net, ns, m, net.input_width(), sb);
      if (i == 0) {
        sb.s.head(w) = sb.y.head(w);
      } else {
        sb.s.head(w) = stages_[si - 1].s.head(w) +
                       std::fabs(model.blocks[si - 1].alpha) * sb.y.head(w);
      }
      const double gamma = gammas[si];
      if (p.colloc) {
        sb.fp.head(m) = flux_.v_f * (1.0 - 2.0 * sb.s.head(m).array());
        sb.r.head(m) = sb.s.segment(m, m).array() +
                       sb.fp.head(m).array() * sb.s.segment(2 * m, m).array();
        if (gamma != 0.0) {
          sb.r.head(m).array() -= gamma * sb.s.segment(3 * m, m).array();
        }
        out.phy[si] += sb.r.head(m).squaredNorm();
      } else {
        out.data[si] +=
            (sb.s.head(m) - data_u_.segment(p.j0, m).transpose()).squaredNorm();
      }
    }
    if (grad == nullptr) continue;

    // Adjoint seeds: both losses are means of pointwise terms, so the seeds
    // are local to this panel.
    for (int i = 0; i <= n_stages; ++i) {
      const std::size_t si = static_cast<std::size_t>(i);
      const int ns = p.colloc ? (need_dxx(i) ? 4 : 3) : 1;
      StageBuf& sb = stages_[si];
      const double wi = stage_weights[si];
      if (wi == 0.0) {
        sb.gs.head(ns * m).setZero();
        continue;
      }
      if (p.colloc) {
        const double qf = 2.0 * lambda_ * wi / static_cast<double>(nc_);
        const auto r = sb.r.head(m).array();
        const auto fp = sb.fp.head(m).array();
        sb.gs.head(m).array() =
            qf * r * flux_.flux_second() * sb.s.segment(2 * m, m).array();
        sb.gs.segment(m, m).array() = qf * r;
        sb.gs.segment(2 * m, m).array() = qf * r * fp;
        if (ns == 4) {
          const double gamma = gammas[si];
          if (gamma != 0.0) {
            sb.gs.segment(3 * m, m).array() = -qf * gamma * r;
          } else {
            sb.gs.segment(3 * m, m).setZero();
          }
        }
      } else {
        sb.gs.head(m) = (2.0 * wi / static_cast<double>(nd_)) *
                        (sb.s.head(m) - data_u_.segment(p.j0, m).transpose());
      }
    }

    // Reverse sweep while this panel's activations are still in cache.
    for (int i = n_stages; i >= 0; --i) {
      const std::size_t si = static_cast<std::size_t>(i);
      const int ns = p.colloc ? (need_dxx(i) ? 4 : 3) : 1;
      const Eigen::Index w = ns * m;
      StageBuf& sb = stages_[si];
      const DenseNet& net = stage_net(i);
      std::size_t net_offset = 0;
      if (i > 0) {
        const auto& blk_layout = layout.blocks[si - 1];
        const double alpha = model.blocks[si - 1].alpha;
        net_offset = blk_layout.net_offset;
        (*grad)(static_cast<Eigen::Index>(blk_layout.alpha_index)) +=
            sgn0(alpha) * sb.gs.head(w).dot(sb.y.head(w));
        gyp_.head(w) = std::fabs(alpha) * sb.gs.head(w);
        a0p_.row(2).head(w) = stages_[si - 1].s.head(w);
      } else {
        gyp_.head(w) = sb.gs.head(w);
      }
      panel_backward(net, ns, m, net.input_width(), sb, net_offset, *grad, i > 0);
      if (i > 0) {
        stages_[si - 1].gs.head(w) += ga0p_.head(w);
        stages_[si - 1].gs.head(w) += sb.gs.head(w);  // skip connection
      }
    }
  }

  for (int i = 0; i <= n_stages; ++i) {
    const std::size_t si = static_cast<std::size_t>(i);
    out.phy[si] /= static_cast<double>(nc_);
    out.data[si] /= static_cast<double>(nd_);
    out.total += stage_weights[si] * (out.data[si] + lambda_ * out.phy[si]);
  }
  for (int i = 0; i < n_stages; ++i) {
    const double a = model.blocks[static_cast<std::size_t>(i)].alpha;
    out.total += alpha_penalty[static_cast<std::size_t>(i)] * a * a;
    if (grad != nullptr) {
      (*grad)(static_cast<Eigen::Index>(layout.blocks[static_cast<std::size_t>(i)].alpha_index)) +=
          2.0 * alpha_penalty[static_cast<std::size_t>(i)] * a;
    }
  }
  return out;
}

Eigen::MatrixXd eval_stages_values(const StackedPinn& model,
                                   const Eigen::VectorXd& ts,
                                   const Eigen::VectorXd& xs) {
  if (ts.size() != xs.size()) throw std::invalid_argument("eval_stages_values: size mismatch");
  const Eigen::Index n = ts.size();
  const int n_stages = model.n_stages();
  Eigen::MatrixXd stages(n_stages + 1, n);
  Eigen::MatrixXd a0(3, n);
  a0.row(0) = ts.transpose();
  a0.row(1) = xs.transpose();
  Eigen::MatrixXd cur, next;
  for (int i = 0; i <= n_stages; ++i) {
    const DenseNet& net = (i == 0) ? model.base : model.blocks[static_cast<std::size_t>(i) - 1].net;
    cur = a0.topRows(net.input_width());
    for (int l = 0; l + 1 < net.n_layers(); ++l) {
      next.noalias() = net.W[static_cast<std::size_t>(l)] * cur;
      next.colwise() += net.b[static_cast<std::size_t>(l)];
      cur = 1.0 - 2.0 / ((2.0 * next.array()).exp() + 1.0);
    }
    Eigen::RowVectorXd y =
        (net.W.back() * cur).row(0).array() + net.b.back()(0);
    if (i == 0) {
      stages.row(0) = y;
    } else {
      stages.row(i) = stages.row(i - 1) +
                      std::fabs(model.blocks[static_cast<std::size_t>(i) - 1].alpha) * y;
    }
    if (i < n_stages) a0.row(2) = stages.row(i);  // next block's third input
  }
  return stages;
}

}  // namespace vspinn
