#include "vspinn/godunov.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

namespace vspinn {

namespace {

double interface_flux(double u_l, double u_r, const GreenshieldsFlux& m) {
  const double uc = m.critical_density();
  if (u_l <= u_r) {
    return std::min(m.flux(u_l), m.flux(u_r));
  }
  if (u_r <= uc && uc <= u_l) return m.flux(uc);
  return std::max(m.flux(u_l), m.flux(u_r));
}

void append_formatted(std::string& out, double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  out += buf;
}

}  // namespace

double godunov_flux(double u_l, double u_r, const GreenshieldsFlux& m) {
  if (u_l < 0.0 || u_l > 1.0 || u_r < 0.0 || u_r > 1.0) {
    throw std::invalid_argument("godunov_flux: states must lie in [0,1]");
  }
  return interface_flux(u_l, u_r, m);
}

DensityField simulate(const std::vector<double>& u0, const BoundaryTrace& bc,
                      const GridSpec& grid, const GreenshieldsFlux& m) {
  if (grid.nx < 2) throw std::invalid_argument("simulate: nx must be >= 2");
  if (grid.cfl <= 0.0 || grid.cfl > 1.0) throw std::invalid_argument("simulate: cfl in (0,1]");
  if (static_cast<int>(u0.size()) != grid.nx) {
    throw std::invalid_argument("simulate: u0 size must equal nx");
  }
  for (double u : u0) {
    if (u < 0.0 || u > 1.0) throw std::invalid_argument("simulate: u0 outside [0,1]");
  }
  const int nx = grid.nx;
  const double dx = grid.dx();
  const double dt_bound = grid.cfl * dx / m.max_wave_speed();
  const int nt = static_cast<int>(std::ceil(grid.time_T / dt_bound));
  const double dt = grid.time_T / nt;
  if (dt > dt_bound * (1.0 + 1e-12)) throw std::runtime_error("simulate: CFL violation");

  DensityField field;
  field.grid = grid;
  field.dt = dt;
  field.v_f = m.v_f;
  field.values.resize(nt + 1, nx);
  for (int j = 0; j < nx; ++j) field.values(0, j) = u0[static_cast<std::size_t>(j)];

  std::vector<double> flux(static_cast<std::size_t>(nx) + 1);
  for (int k = 0; k < nt; ++k) {
    const double t = k * dt;
    const double ghost_l = bc.left(t);
    const double ghost_r = bc.right(t);
    flux[0] = interface_flux(ghost_l, field.values(k, 0), m);
    for (int j = 1; j < nx; ++j) {
      flux[static_cast<std::size_t>(j)] =
          interface_flux(field.values(k, j - 1), field.values(k, j), m);
    }
    flux[static_cast<std::size_t>(nx)] =
        interface_flux(field.values(k, nx - 1), ghost_r, m);
    const double lam = dt / dx;
    for (int j = 0; j < nx; ++j) {
      const double u = field.values(k, j) -
                       lam * (flux[static_cast<std::size_t>(j) + 1] -
                              flux[static_cast<std::size_t>(j)]);
      if (!std::isfinite(u)) throw std::runtime_error("simulate: non-finite state");
      field.values(k + 1, j) = u;
    }
  }
  return field;
}

std::vector<Measurement> sample_measurements(const DensityField& field,
                                             double noise_sigma,
                                             std::uint64_t seed) {
  std::vector<Measurement> data;
  const int nx = field.grid.nx;
  const int nt = field.nt();
  data.reserve(static_cast<std::size_t>(nx) + 2 * (static_cast<std::size_t>(nt) + 1));
  for (int j = 0; j < nx; ++j) {
    data.push_back({0.0, field.grid.cell_center(j), field.values(0, j)});
  }
  for (int k = 0; k <= nt; ++k) {
    data.push_back({field.time_at(k), field.grid.cell_center(0), field.values(k, 0)});
    data.push_back({field.time_at(k), field.grid.cell_center(nx - 1), field.values(k, nx - 1)});
  }
  if (noise_sigma > 0.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, noise_sigma);
    for (auto& d : data) d.u += noise(rng);
  }
  return data;
}

void save_field(const DensityField& field, const std::filesystem::path& path) {
  std::string out;
  out.reserve(static_cast<std::size_t>(field.values.size()) * 20);
  char head[160];
  std::snprintf(head, sizeof(head), "%d %d %.17g %.17g %.17g\n", field.grid.nx,
                field.nt(), field.grid.length_L, field.grid.time_T, field.v_f);
  out += head;
  for (Eigen::Index k = 0; k < field.values.rows(); ++k) {
    for (Eigen::Index j = 0; j < field.values.cols(); ++j) {
      if (j > 0) out += ' ';
      append_formatted(out, field.values(k, j));
    }
    out += '\n';
  }
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write field file: " + path.string());
  f << out;
}

DensityField load_field(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read field file: " + path.string());
  DensityField field;
  int nt = 0;
  f >> field.grid.nx >> nt >> field.grid.length_L >> field.grid.time_T >> field.v_f;
  if (!f || field.grid.nx < 1 || nt < 0) throw std::runtime_error("bad field header");
  field.dt = nt > 0 ? field.grid.time_T / nt : 0.0;
  field.values.resize(nt + 1, field.grid.nx);
  for (int k = 0; k <= nt; ++k) {
    for (int j = 0; j < field.grid.nx; ++j) {
      if (!(f >> field.values(k, j))) throw std::runtime_error("truncated field file");
    }
  }
  return field;
}

void save_dataset(const std::vector<Measurement>& data, const std::filesystem::path& path) {
  std::string out;
  out.reserve(data.size() * 60);
  for (const auto& d : data) {
    append_formatted(out, d.t);
    out += ' ';
    append_formatted(out, d.x);
    out += ' ';
    append_formatted(out, d.u);
    out += '\n';
  }
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write dataset: " + path.string());
  f << out;
}

std::vector<Measurement> load_dataset(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read dataset: " + path.string());
  std::vector<Measurement> data;
  Measurement d;
  while (f >> d.t >> d.x >> d.u) data.push_back(d);
  return data;
}

}  // namespace vspinn
