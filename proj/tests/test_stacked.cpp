#include <cstdio>
#include <filesystem>
#include <vector>

#include "doctest.h"
#include "fd_oracle.hpp"
#include "vspinn/stacked.hpp"

using vspinn::Activation;
using vspinn::Jet2;
using vspinn::StackedPinn;
using vspinn::ViscositySchedule;

namespace {
StackedPinn make_model(int n) {
  return StackedPinn::init({2, 10, 10, 1}, {3, 8, 8, 1}, n, 0.05, 0.1, 2.0,
                           Activation::Tanh, 123);
}
}  // namespace

TEST_CASE("stage zero equals the base network") {
  StackedPinn model = make_model(3);
  for (double t : {0.1, 0.7}) {
    for (double x : {0.2, 0.9}) {
      CHECK(model.eval_stage(0, t, x) == model.base.forward({t, x}));
    }
  }
}

TEST_CASE("stages compose as residual corrections") {
  StackedPinn model = make_model(2);
  const double t = 0.35, x = 0.6;
  double u = model.base.forward({t, x});
  for (int i = 0; i < 2; ++i) {
    const auto& blk = model.blocks[i];
    u += std::abs(blk.alpha) * blk.net.forward({t, x, u});
    CHECK(model.eval_stage(i + 1, t, x) == doctest::Approx(u).epsilon(1e-15));
  }
}

TEST_CASE("zero blocks reduces to a vanilla network") {
  StackedPinn model = make_model(0);
  CHECK(model.blocks.empty());
  CHECK(model.eval_stage(0, 0.4, 0.5) == model.base.forward({0.4, 0.5}));
}

TEST_CASE("block seeds differ from the base seed") {
  StackedPinn model = make_model(2);
  std::vector<double> pb(model.base.param_count());
  model.base.flatten(pb);
  // The two block nets share dims; their parameters must not coincide with
  // each other (different derived seeds).
  std::vector<double> p0(model.blocks[0].net.param_count());
  std::vector<double> p1(model.blocks[1].net.param_count());
  model.blocks[0].net.flatten(p0);
  model.blocks[1].net.flatten(p1);
  CHECK(p0 != p1);
}

TEST_CASE("flatten/unflatten round-trips including alphas") {
  StackedPinn model = make_model(3);
  model.blocks[1].alpha = -0.2;
  std::vector<double> params(model.param_count());
  model.flatten(params);
  StackedPinn other = make_model(3);
  other.unflatten(params);
  std::vector<double> again(other.param_count());
  other.flatten(again);
  CHECK(params == again);
  CHECK(other.blocks[1].alpha == -0.2);
}

TEST_CASE("param_layout indexes alphas and block slices correctly") {
  StackedPinn model = make_model(2);
  const auto layout = vspinn::param_layout(model);
  CHECK(layout.total == model.param_count());
  CHECK(layout.base_count == model.base.param_count());
  std::vector<double> params(layout.total);
  model.flatten(params);
  for (std::size_t i = 0; i < layout.blocks.size(); ++i) {
    CHECK(params[layout.blocks[i].alpha_index] == model.blocks[i].alpha);
    CHECK(layout.blocks[i].net_count == model.blocks[i].net.param_count());
  }
  const auto& last = layout.blocks.back();
  CHECK(last.net_offset + last.net_count == layout.total);
}

TEST_CASE("stage jet value equals scalar stage eval") {
  StackedPinn model = make_model(3);
  for (int stage : {0, 1, 2, 3}) {
    const Jet2<double> jet = model.eval_stage_jet(stage, 0.3, 0.7);
    CHECK(jet.v == doctest::Approx(model.eval_stage(stage, 0.3, 0.7)).epsilon(1e-15));
  }
}

TEST_CASE("stage jet derivatives match finite differences") {
  StackedPinn model = make_model(2);
  auto f = [&](double t, double x) { return model.eval_stage(2, t, x); };
  const Jet2<double> got = model.eval_stage_jet(2, 0.45, 0.3);
  const fd::JetFd want = fd::jet(f, 0.45, 0.3);
  CHECK(fd::rel_err(got.dt, want.dt, 1e-2) < 1e-6);
  CHECK(fd::rel_err(got.dx, want.dx, 1e-2) < 1e-6);
  CHECK(fd::rel_err(got.dxx, want.dxx, 1e-2) < 1e-4);
}

TEST_CASE("checkpoint save/load reproduces the model exactly") {
  StackedPinn model = make_model(3);
  model.blocks[0].alpha = 0.31;
  const std::filesystem::path path =
      std::filesystem::temp_directory_path() / "vspinn_ckpt_test.json";
  model.save_checkpoint(path);
  StackedPinn loaded = StackedPinn::load_checkpoint(path);
  std::filesystem::remove(path);

  CHECK(loaded.blocks.size() == model.blocks.size());
  CHECK(loaded.schedule.gamma_init == model.schedule.gamma_init);
  CHECK(loaded.schedule.p == model.schedule.p);
  std::vector<double> pa(model.param_count()), pb(loaded.param_count());
  model.flatten(pa);
  loaded.flatten(pb);
  CHECK(pa == pb);
  CHECK(loaded.eval_stage(3, 0.2, 0.8) == model.eval_stage(3, 0.2, 0.8));
}
