#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <vector>

#include "vspinn/jet.hpp"

namespace vspinn {

// Dense feedforward net u = W_L h_{L-1} + b_L, h_l = phi(W_l h_{l-1} + b_l),
// with a linear output layer of width 1.
//
// Flat parameter order (used by gradients and checkpoints): for each layer
// l = 1..L, the weight matrix W_l row by row, then the bias b_l.
struct DenseNet {
  std::vector<int> dims;  // input, hidden..., output
  std::vector<Eigen::MatrixXd> W;
  std::vector<Eigen::VectorXd> b;
  Activation act = Activation::Tanh;

  static DenseNet init(const std::vector<int>& layer_dims, Activation act,
                       std::uint64_t seed);

  int input_width() const { return dims.front(); }
  int n_layers() const { return static_cast<int>(W.size()); }
  std::size_t param_count() const;

  void flatten(std::span<double> out) const;
  void unflatten(std::span<const double> in);

  double forward(std::span<const double> inputs) const;
  double forward(std::initializer_list<double> inputs) const {
    return forward(std::span<const double>(inputs.begin(), inputs.size()));
  }
  Jet2d jet_forward(double t, double x, std::span<const Jet2d> extra = {}) const;
};

std::size_t dense_param_count(const std::vector<int>& dims);

// Evaluation of the same architecture on any scalar type, reading the
// parameters from a flat span in the documented order. Used to drive the
// reverse tape and to cross-check the double-precision paths.
template <typename S>
Jet2<S> dense_jet_eval(const std::vector<int>& dims, Activation act,
                       std::span<const S> params,
                       std::span<const Jet2<S>> inputs) {
  const std::size_t n_layers = dims.size() - 1;
  std::vector<Jet2<S>> cur(inputs.begin(), inputs.end());
  std::size_t off = 0;
  for (std::size_t l = 0; l < n_layers; ++l) {
    const int n_in = dims[l];
    const int n_out = dims[l + 1];
    std::vector<Jet2<S>> next(static_cast<std::size_t>(n_out));
    for (int i = 0; i < n_out; ++i) {
      Jet2<S> z = Jet2<S>::constant(S(0));
      for (int j = 0; j < n_in; ++j) {
        z = z + params[off + static_cast<std::size_t>(i * n_in + j)] * cur[static_cast<std::size_t>(j)];
      }
      z.v = z.v + params[off + static_cast<std::size_t>(n_out * n_in + i)];
      next[static_cast<std::size_t>(i)] =
          (l + 1 == n_layers) ? z : jet_activate(z, act);
    }
    off += static_cast<std::size_t>(n_out) * static_cast<std::size_t>(n_in + 1);
    cur = std::move(next);
  }
  return cur.front();
}

}  // namespace vspinn
