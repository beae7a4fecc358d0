#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "vspinn/metrics.hpp"

using vspinn::BoundaryTrace;
using vspinn::DensityField;
using vspinn::GreenshieldsFlux;
using vspinn::GridSpec;
using vspinn::StackedPinn;

namespace {

DensityField small_field() {
  const GridSpec grid{1.0, 0.3, 12, 0.9};
  std::vector<double> u0(12);
  for (int j = 0; j < 12; ++j) u0[j] = grid.cell_center(j) < 0.5 ? 0.7 : 0.3;
  return vspinn::simulate(u0, BoundaryTrace::constants(0.7, 0.3), grid,
                          GreenshieldsFlux{1.0});
}

StackedPinn small_model(int n) {
  return StackedPinn::init({2, 6, 1}, {3, 5, 1}, n, 0.05, 0.1, 2.0,
                           vspinn::Activation::Tanh, 31);
}

}  // namespace

TEST_CASE("quantile interpolates linearly") {
  std::vector<double> v{3.0, 1.0, 4.0, 2.0};  // unsorted on purpose
  CHECK(vspinn::quantile(v, 0.0) == 1.0);
  CHECK(vspinn::quantile(v, 1.0) == 4.0);
  CHECK(vspinn::quantile(v, 0.5) == doctest::Approx(2.5));
  CHECK(vspinn::quantile(v, 0.25) == doctest::Approx(1.75));
  CHECK(vspinn::quantile({5.0}, 0.5) == 5.0);
}

TEST_CASE("field_eval_points flattens time-major") {
  const DensityField field = small_field();
  Eigen::VectorXd ts, xs;
  vspinn::field_eval_points(field, ts, xs);
  const int nx = field.grid.nx;
  REQUIRE(ts.size() == static_cast<Eigen::Index>((field.nt() + 1) * nx));
  for (int j = 0; j < nx; ++j) {
    CHECK(ts(j) == 0.0);
    CHECK(xs(j) == doctest::Approx(field.grid.cell_center(j)));
  }
  CHECK(ts(nx) == doctest::Approx(field.time_at(1)));
  CHECK(xs(nx) == doctest::Approx(field.grid.cell_center(0)));
}

TEST_CASE("relative_l2 matches a brute-force recomputation") {
  const DensityField field = small_field();
  const StackedPinn model = small_model(2);
  for (int stage : {0, 2}) {
    double num = 0.0, den = 0.0;
    for (int k = 0; k <= field.nt(); ++k) {
      for (int j = 0; j < field.grid.nx; ++j) {
        const double u = field.values(k, j);
        const double uh = model.eval_stage(stage, field.time_at(k), field.grid.cell_center(j));
        num += (uh - u) * (uh - u);
        den += u * u;
      }
    }
    const double want = std::sqrt(num) / std::sqrt(den);
    CHECK(vspinn::relative_l2(field, model, stage) == doctest::Approx(want).epsilon(1e-12));
  }
}

TEST_CASE("relative_l2 of a perfect constant fit is zero-ish") {
  // Constant truth; a model is no better oracle than a synthetic field whose
  // entries equal the model's own predictions on the grid.
  DensityField field = small_field();
  const StackedPinn model = small_model(0);
  for (int k = 0; k <= field.nt(); ++k) {
    for (int j = 0; j < field.grid.nx; ++j) {
      field.values(k, j) = model.eval_stage(0, field.time_at(k), field.grid.cell_center(j));
    }
  }
  CHECK(vspinn::relative_l2(field, model, 0) == doctest::Approx(0.0));
}

TEST_CASE("error distribution quantiles agree with brute force") {
  const DensityField field = small_field();
  const StackedPinn model = small_model(1);
  const auto rep = vspinn::error_distribution(field, model, 1);
  std::vector<double> errs;
  for (int k = 0; k <= field.nt(); ++k) {
    for (int j = 0; j < field.grid.nx; ++j) {
      errs.push_back(std::abs(model.eval_stage(1, field.time_at(k), field.grid.cell_center(j)) -
                              field.values(k, j)));
    }
  }
  CHECK(rep.n_eval_points == static_cast<long>(errs.size()));
  CHECK(rep.min == doctest::Approx(vspinn::quantile(errs, 0.0)));
  CHECK(rep.q1 == doctest::Approx(vspinn::quantile(errs, 0.25)));
  CHECK(rep.median == doctest::Approx(vspinn::quantile(errs, 0.5)));
  CHECK(rep.q3 == doctest::Approx(vspinn::quantile(errs, 0.75)));
  CHECK(rep.max == doctest::Approx(vspinn::quantile(errs, 1.0)));
  CHECK(rep.relative_l2 == doctest::Approx(vspinn::relative_l2(field, model, 1)));
  CHECK(rep.min <= rep.q1);
  CHECK(rep.q1 <= rep.median);
  CHECK(rep.median <= rep.q3);
  CHECK(rep.q3 <= rep.max);
}

TEST_CASE("stage error table covers all stages, final entry exact") {
  const DensityField field = small_field();
  const StackedPinn model = small_model(3);
  const auto table = vspinn::stage_error_table(field, model);
  REQUIRE(table.size() == 4);
  for (int i = 0; i <= 3; ++i) {
    CHECK(table[static_cast<std::size_t>(i)].stage == i);
    CHECK(table[static_cast<std::size_t>(i)].relative_l2 ==
          vspinn::relative_l2(field, model, i));
  }
}

TEST_CASE("report file carries every key") {
  vspinn::ErrorReport rep;
  rep.relative_l2 = 0.12;
  rep.min = 0.0;
  rep.q1 = 0.01;
  rep.median = 0.02;
  rep.q3 = 0.04;
  rep.max = 0.3;
  rep.n_eval_points = 123;
  const auto path = std::filesystem::temp_directory_path() / "vspinn_report_test.txt";
  vspinn::save_report(rep, path);
  std::ifstream f(path);
  std::stringstream ss;
  ss << f.rdbuf();
  const std::string text = ss.str();
  for (const char* key : {"relative_l2", "min", "q1", "median", "q3", "max", "n_eval_points"}) {
    CHECK(text.find(key) != std::string::npos);
  }
  std::filesystem::remove(path);
}
