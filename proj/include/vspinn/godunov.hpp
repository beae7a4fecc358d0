#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <vector>

#include "vspinn/pde.hpp"

namespace vspinn {

struct GridSpec {
  double length_L = 1.0;
  double time_T = 1.0;
  int nx = 200;       // cells
  double cfl = 0.9;   // in (0, 1]

  double dx() const { return length_L / nx; }
  double cell_center(int j) const { return (j + 0.5) * dx(); }
};

// Dirichlet traces at both ends, values in [0, 1].
struct BoundaryTrace {
  std::function<double(double)> left;
  std::function<double(double)> right;

  static BoundaryTrace constants(double ul, double ur) {
    return {[ul](double) { return ul; }, [ur](double) { return ur; }};
  }
};

// Cell averages, row k = time step k (row 0 = initial data), column j = cell j.
struct DensityField {
  GridSpec grid;
  double dt = 0.0;
  double v_f = 1.0;
  Eigen::MatrixXd values;  // (nt+1) x nx

  int nt() const { return static_cast<int>(values.rows()) - 1; }
  double time_at(int k) const { return k * dt; }
};

struct Measurement {
  double t = 0.0;
  double x = 0.0;
  double u = 0.0;
};

// Exact Riemann interface flux for a concave flux function:
// min f over [u_l, u_r] if u_l <= u_r, else max f over [u_r, u_l]
// (f(1/2) when the sonic point lies inside the interval).
double godunov_flux(double u_l, double u_r, const GreenshieldsFlux& m);

// Explicit conservative update with ghost cells holding the boundary traces.
// dt = cfl dx / v_f, shrunk so nt dt = T exactly.
DensityField simulate(const std::vector<double>& u0, const BoundaryTrace& bc,
                      const GridSpec& grid, const GreenshieldsFlux& m);

// Triples on the measured boundary: the initial row at every cell center,
// then both boundary columns at every stored time step, in that order.
// sigma > 0 adds Gaussian noise, deterministic per seed.
std::vector<Measurement> sample_measurements(const DensityField& field,
                                             double noise_sigma = 0.0,
                                             std::uint64_t seed = 0);

void save_field(const DensityField& field, const std::filesystem::path& path);
DensityField load_field(const std::filesystem::path& path);

void save_dataset(const std::vector<Measurement>& data, const std::filesystem::path& path);
std::vector<Measurement> load_dataset(const std::filesystem::path& path);

}  // namespace vspinn
