#pragma once

#include <filesystem>
#include <vector>

#include "vspinn/batch.hpp"
#include "vspinn/godunov.hpp"
#include "vspinn/stacked.hpp"

namespace vspinn {

struct ErrorReport {
  double relative_l2 = 0.0;
  double min = 0.0, q1 = 0.0, median = 0.0, q3 = 0.0, max = 0.0;
  long n_eval_points = 0;
};

// ||u - uhat||_2 / ||u||_2 over all grid nodes of the reference field
// (cell centers x stored time steps, plain l2 on the uniform grid).
double relative_l2(const DensityField& truth, const StackedPinn& model, int stage);

// Absolute point-wise errors |uhat - u| over the grid; quantiles use the
// linear-interpolation convention.
ErrorReport error_distribution(const DensityField& truth, const StackedPinn& model, int stage);

struct StageError {
  int stage = 0;
  double relative_l2 = 0.0;
};

std::vector<StageError> stage_error_table(const DensityField& truth, const StackedPinn& model);

// Grid coordinates of a field, flattened row (time) major.
void field_eval_points(const DensityField& field, Eigen::VectorXd& ts, Eigen::VectorXd& xs);

double quantile(std::vector<double> sorted_or_not, double q);

void save_report(const ErrorReport& report, const std::filesystem::path& path);

}  // namespace vspinn
