#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "vspinn/network.hpp"
#include "vspinn/pde.hpp"

namespace vspinn {

// Base network u^(0)(t,x) refined by n residual blocks:
//   u^(i) = u^(i-1) + |alpha_i| N([t, x, u^(i-1)]; theta_i)
// with a decreasing per-stage viscosity attached to each stage's residual.
struct ResidualBlock {
  double alpha = 0.0;
  DenseNet net;  // input width 3: t, x, previous stage output
};

struct StackedPinn {
  DenseNet base;  // input width 2: t, x
  std::vector<ResidualBlock> blocks;
  ViscositySchedule schedule;  // schedule.n == blocks.size()

  static StackedPinn init(const std::vector<int>& base_dims,
                          const std::vector<int>& block_dims, int n_blocks,
                          double alpha_init, double gamma_init, double p,
                          Activation act, std::uint64_t seed);

  int n_stages() const { return static_cast<int>(blocks.size()); }

  double eval_stage(int i, double t, double x) const;
  Jet2d eval_stage_jet(int i, double t, double x) const;

  // Flat order: base params, then per block (alpha_i, block params).
  std::size_t param_count() const;
  void flatten(std::span<double> out) const;
  void unflatten(std::span<const double> in);

  void save_checkpoint(const std::filesystem::path& path) const;
  static StackedPinn load_checkpoint(const std::filesystem::path& path);
};

// Offsets into the flat parameter vector.
struct ParamLayout {
  std::size_t total = 0;
  std::size_t base_count = 0;
  struct BlockSpan {
    std::size_t alpha_index = 0;
    std::size_t net_offset = 0;
    std::size_t net_count = 0;
  };
  std::vector<BlockSpan> blocks;
};

ParamLayout param_layout(const StackedPinn& model);

// Stage evaluation on any scalar type from flat parameters (tape route).
template <typename S>
Jet2<S> stacked_jet_eval(const StackedPinn& shape, std::span<const S> params,
                         int stage, double t, double x) {
  const Jet2<S> tj = Jet2<S>::time_coord(S(t));
  const Jet2<S> xj = Jet2<S>::space_coord(S(x));
  const std::size_t base_count = dense_param_count(shape.base.dims);
  std::vector<Jet2<S>> in{tj, xj};
  Jet2<S> u = dense_jet_eval<S>(shape.base.dims, shape.base.act,
                                params.subspan(0, base_count), in);
  std::size_t off = base_count;
  for (int i = 0; i < stage; ++i) {
    const auto& dims = shape.blocks[static_cast<std::size_t>(i)].net.dims;
    const std::size_t count = dense_param_count(dims);
    using std::abs;
    const S scale = abs(params[off]);
    std::vector<Jet2<S>> bin{tj, xj, u};
    const Jet2<S> y = dense_jet_eval<S>(dims, shape.base.act,
                                        params.subspan(off + 1, count), bin);
    u = u + scale * y;
    off += 1 + count;
  }
  return u;
}

}  // namespace vspinn
