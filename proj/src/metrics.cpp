#include "vspinn/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace vspinn {

void field_eval_points(const DensityField& field, Eigen::VectorXd& ts, Eigen::VectorXd& xs) {
  const int nx = field.grid.nx;
  const int nt = field.nt();
  ts.resize(static_cast<Eigen::Index>(nt + 1) * nx);
  xs.resize(ts.size());
  Eigen::Index k = 0;
  for (int it = 0; it <= nt; ++it) {
    const double t = field.time_at(it);
    for (int j = 0; j < nx; ++j) {
      ts(k) = t;
      xs(k) = field.grid.cell_center(j);
      ++k;
    }
  }
}

namespace {

Eigen::RowVectorXd stage_values_on_grid(const DensityField& truth,
                                        const StackedPinn& model, int stage) {
  if (stage < 0 || stage > model.n_stages()) {
    throw std::out_of_range("metrics: stage out of range");
  }
  Eigen::VectorXd ts, xs;
  field_eval_points(truth, ts, xs);
  return eval_stages_values(model, ts, xs).row(stage);
}

}  // namespace

double relative_l2(const DensityField& truth, const StackedPinn& model, int stage) {
  const Eigen::RowVectorXd uhat = stage_values_on_grid(truth, model, stage);
  double num = 0.0, den = 0.0;
  Eigen::Index k = 0;
  for (Eigen::Index it = 0; it < truth.values.rows(); ++it) {
    for (Eigen::Index j = 0; j < truth.values.cols(); ++j) {
      const double u = truth.values(it, j);
      const double e = u - uhat(k++);
      num += e * e;
      den += u * u;
    }
  }
  if (den == 0.0) throw std::invalid_argument("relative_l2: zero-norm reference field");
  return std::sqrt(num) / std::sqrt(den);
}

double quantile(std::vector<double> v, double q) {
  if (v.empty()) throw std::invalid_argument("quantile: empty sample");
  std::sort(v.begin(), v.end());
  const double h = q * static_cast<double>(v.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  const double frac = h - static_cast<double>(lo);
  return v[lo] + frac * (v[hi] - v[lo]);
}

ErrorReport error_distribution(const DensityField& truth, const StackedPinn& model, int stage) {
  const Eigen::RowVectorXd uhat = stage_values_on_grid(truth, model, stage);
  std::vector<double> errs;
  errs.reserve(static_cast<std::size_t>(uhat.size()));
  Eigen::Index k = 0;
  for (Eigen::Index it = 0; it < truth.values.rows(); ++it) {
    for (Eigen::Index j = 0; j < truth.values.cols(); ++j) {
      errs.push_back(std::fabs(uhat(k++) - truth.values(it, j)));
    }
  }
  ErrorReport rep;
  rep.relative_l2 = relative_l2(truth, model, stage);
  rep.min = quantile(errs, 0.0);
  rep.q1 = quantile(errs, 0.25);
  rep.median = quantile(errs, 0.5);
  rep.q3 = quantile(errs, 0.75);
  rep.max = quantile(errs, 1.0);
  rep.n_eval_points = static_cast<long>(errs.size());
  return rep;
}

std::vector<StageError> stage_error_table(const DensityField& truth, const StackedPinn& model) {
  // Reuses relative_l2 per stage so table entries match it bit for bit.
  std::vector<StageError> table;
  for (int i = 0; i <= model.n_stages(); ++i) {
    table.push_back({i, relative_l2(truth, model, i)});
  }
  return table;
}

void save_report(const ErrorReport& report, const std::filesystem::path& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write report: " + path.string());
  char buf[64];
  auto line = [&](const char* key, double v) {
    std::snprintf(buf, sizeof(buf), "%s %.17g\n", key, v);
    f << buf;
  };
  line("relative_l2", report.relative_l2);
  line("pointwise_min", report.min);
  line("pointwise_q1", report.q1);
  line("pointwise_median", report.median);
  line("pointwise_q3", report.q3);
  line("pointwise_max", report.max);
  f << "n_eval_points " << report.n_eval_points << "\n";
}

}  // namespace vspinn
