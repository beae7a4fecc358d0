#include "vspinn/network.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace vspinn {

namespace {

// 53-bit uniform in [0, 1).
double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace

std::size_t dense_param_count(const std::vector<int>& dims) {
  std::size_t n = 0;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    n += static_cast<std::size_t>(dims[l + 1]) * static_cast<std::size_t>(dims[l] + 1);
  }
  return n;
}

DenseNet DenseNet::init(const std::vector<int>& layer_dims, Activation act,
                        std::uint64_t seed) {
  if (layer_dims.size() < 2) {
    throw std::invalid_argument("DenseNet: need at least input and output layer");
  }
  for (int d : layer_dims) {
    if (d <= 0) throw std::invalid_argument("DenseNet: non-positive layer width");
  }
  DenseNet net;
  net.dims = layer_dims;
  net.act = act;
  std::mt19937_64 rng(seed);
  for (std::size_t l = 0; l + 1 < layer_dims.size(); ++l) {
    const int n_in = layer_dims[l];
    const int n_out = layer_dims[l + 1];
    const double bound = std::sqrt(6.0 / (n_in + n_out));
    Eigen::MatrixXd w(n_out, n_in);
    for (int i = 0; i < n_out; ++i) {      // row-major draw order
      for (int j = 0; j < n_in; ++j) {
        w(i, j) = bound * (2.0 * uniform01(rng) - 1.0);
      }
    }
    net.W.push_back(std::move(w));
    net.b.push_back(Eigen::VectorXd::Zero(n_out));
  }
  return net;
}

std::size_t DenseNet::param_count() const { return dense_param_count(dims); }

void DenseNet::flatten(std::span<double> out) const {
  std::size_t k = 0;
  for (std::size_t l = 0; l < W.size(); ++l) {
    for (Eigen::Index i = 0; i < W[l].rows(); ++i) {
      for (Eigen::Index j = 0; j < W[l].cols(); ++j) out[k++] = W[l](i, j);
    }
    for (Eigen::Index i = 0; i < b[l].size(); ++i) out[k++] = b[l](i);
  }
  if (k != param_count()) throw std::logic_error("flatten: size mismatch");
}

void DenseNet::unflatten(std::span<const double> in) {
  std::size_t k = 0;
  for (std::size_t l = 0; l < W.size(); ++l) {
    for (Eigen::Index i = 0; i < W[l].rows(); ++i) {
      for (Eigen::Index j = 0; j < W[l].cols(); ++j) W[l](i, j) = in[k++];
    }
    for (Eigen::Index i = 0; i < b[l].size(); ++i) b[l](i) = in[k++];
  }
  if (k != param_count()) throw std::logic_error("unflatten: size mismatch");
}

double DenseNet::forward(std::span<const double> inputs) const {
  if (static_cast<int>(inputs.size()) != input_width()) {
    throw std::invalid_argument("DenseNet::forward: input width mismatch");
  }
  // Same accumulation order as the jet path so the value slots agree exactly.
  std::vector<double> cur(inputs.begin(), inputs.end());
  for (int l = 0; l < n_layers(); ++l) {
    const int n_out = static_cast<int>(W[static_cast<std::size_t>(l)].rows());
    const int n_in = static_cast<int>(W[static_cast<std::size_t>(l)].cols());
    std::vector<double> next(static_cast<std::size_t>(n_out));
    for (int i = 0; i < n_out; ++i) {
      double z = 0.0;
      for (int j = 0; j < n_in; ++j) {
        z += W[static_cast<std::size_t>(l)](i, j) * cur[static_cast<std::size_t>(j)];
      }
      z += b[static_cast<std::size_t>(l)](i);
      next[static_cast<std::size_t>(i)] = (l + 1 == n_layers()) ? z : std::tanh(z);
    }
    cur = std::move(next);
  }
  return cur.front();
}

Jet2d DenseNet::jet_forward(double t, double x, std::span<const Jet2d> extra) const {
  if (2 + static_cast<int>(extra.size()) != input_width()) {
    throw std::invalid_argument("DenseNet::jet_forward: input width mismatch");
  }
  std::vector<Jet2d> cur;
  cur.reserve(static_cast<std::size_t>(input_width()));
  cur.push_back(Jet2d::time_coord(t));
  cur.push_back(Jet2d::space_coord(x));
  cur.insert(cur.end(), extra.begin(), extra.end());
  for (int l = 0; l < n_layers(); ++l) {
    const int n_out = static_cast<int>(W[static_cast<std::size_t>(l)].rows());
    const int n_in = static_cast<int>(W[static_cast<std::size_t>(l)].cols());
    std::vector<Jet2d> next(static_cast<std::size_t>(n_out));
    for (int i = 0; i < n_out; ++i) {
      Jet2d z{};
      for (int j = 0; j < n_in; ++j) {
        const double w = W[static_cast<std::size_t>(l)](i, j);
        const Jet2d& a = cur[static_cast<std::size_t>(j)];
        z.v += w * a.v;
        z.dt += w * a.dt;
        z.dx += w * a.dx;
        z.dxx += w * a.dxx;
      }
      z.v += b[static_cast<std::size_t>(l)](i);
      next[static_cast<std::size_t>(i)] = (l + 1 == n_layers()) ? z : jet_activate(z, act);
    }
    cur = std::move(next);
  }
  return cur.front();
}

}  // namespace vspinn
