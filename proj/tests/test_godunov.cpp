#include <cmath>
#include <cstdio>
#include <filesystem>

#include "doctest.h"
#include "vspinn/godunov.hpp"

using vspinn::BoundaryTrace;
using vspinn::DensityField;
using vspinn::GreenshieldsFlux;
using vspinn::GridSpec;

namespace {
double exact_flux(const GreenshieldsFlux& f, double ul, double ur) {
  // Brute-force Godunov flux for a concave flux: extremize f over the
  // interval between the states on a fine grid.
  const double lo = std::min(ul, ur), hi = std::max(ul, ur);
  double best = f.flux(lo);
  for (int k = 0; k <= 10000; ++k) {
    const double u = lo + (hi - lo) * k / 10000.0;
    const double fu = f.flux(u);
    best = ul <= ur ? std::min(best, fu) : std::max(best, fu);
  }
  return best;
}
}  // namespace

TEST_CASE("godunov flux matches brute-force extremization") {
  const GreenshieldsFlux f{1.0};
  for (double ul : {0.0, 0.2, 0.45, 0.5, 0.8, 1.0}) {
    for (double ur : {0.0, 0.3, 0.5, 0.7, 1.0}) {
      CHECK(vspinn::godunov_flux(ul, ur, f) ==
            doctest::Approx(exact_flux(f, ul, ur)).epsilon(1e-7));
    }
  }
  // Sonic case: the critical density sits strictly between the states.
  CHECK(vspinn::godunov_flux(0.9, 0.1, f) == doctest::Approx(f.flux(0.5)));
  CHECK_THROWS(vspinn::godunov_flux(-0.1, 0.5, f));
  CHECK_THROWS(vspinn::godunov_flux(0.5, 1.2, f));
}

TEST_CASE("constant data stays constant") {
  const GridSpec grid{1.0, 0.5, 100, 0.9};
  std::vector<double> u0(100, 0.4);
  const DensityField field =
      vspinn::simulate(u0, BoundaryTrace::constants(0.4, 0.4), grid, GreenshieldsFlux{1.0});
  for (int k = 0; k <= field.nt(); ++k) {
    for (int j = 0; j < 100; ++j) CHECK(field.values(k, j) == doctest::Approx(0.4));
  }
}

TEST_CASE("shock position matches Rankine-Hugoniot") {
  // Riemann data u_l = 0.1 < u_r = 0.6 gives a shock with speed
  // s = v_f (1 - u_l - u_r) = 0.3.
  const double ul = 0.1, ur = 0.6;
  const GridSpec grid{1.0, 0.8, 400, 0.9};
  std::vector<double> u0(400);
  for (int j = 0; j < 400; ++j) u0[j] = grid.cell_center(j) < 0.3 ? ul : ur;
  const DensityField field =
      vspinn::simulate(u0, BoundaryTrace::constants(ul, ur), grid, GreenshieldsFlux{1.0});
  const double s = 1.0 - (ul + ur);
  const int k = field.nt();
  const double t = field.time_at(k);
  const double x_shock = 0.3 + s * t;
  // Find the numerical jump location as the midpoint crossing.
  int jcross = -1;
  for (int j = 0; j + 1 < 400; ++j) {
    if (field.values(k, j) < 0.35 && field.values(k, j + 1) >= 0.35) jcross = j;
  }
  REQUIRE(jcross >= 0);
  CHECK(std::abs(grid.cell_center(jcross) - x_shock) < 0.02);
  // Away from the shock the states are intact.
  CHECK(field.values(k, 20) == doctest::Approx(ul).epsilon(1e-6));
  CHECK(field.values(k, 380) == doctest::Approx(ur).epsilon(1e-6));
}

TEST_CASE("rarefaction spreads between characteristic speeds") {
  // u_l = 0.8 > u_r = 0.2: a rarefaction fan between speeds
  // f'(0.8) = -0.6 and f'(0.2) = 0.6 centered at x = 0.5.
  const double ul = 0.8, ur = 0.2;
  const GridSpec grid{1.0, 0.3, 400, 0.9};
  std::vector<double> u0(400);
  for (int j = 0; j < 400; ++j) u0[j] = grid.cell_center(j) < 0.5 ? ul : ur;
  const DensityField field =
      vspinn::simulate(u0, BoundaryTrace::constants(ul, ur), grid, GreenshieldsFlux{1.0});
  const int k = field.nt();
  const double t = field.time_at(k);
  for (int j = 0; j < 400; ++j) {
    const double xi = (grid.cell_center(j) - 0.5) / t;
    const double exact = xi <= -0.6 ? ul : (xi >= 0.6 ? ur : 0.5 * (1.0 - xi));
    CHECK(std::abs(field.values(k, j) - exact) < 0.05);
  }
  // Monotone decreasing profile, no entropy-violating expansion shock.
  for (int j = 0; j + 1 < 400; ++j) {
    CHECK(field.values(k, j + 1) <= field.values(k, j) + 1e-12);
  }
}

TEST_CASE("discrete conservation balances boundary fluxes") {
  const GreenshieldsFlux f{1.0};
  const GridSpec grid{1.0, 0.6, 200, 0.9};
  std::vector<double> u0(200);
  for (int j = 0; j < 200; ++j) {
    const double x = grid.cell_center(j);
    u0[j] = x < 1.0 / 3.0 ? 0.8 : (x < 2.0 / 3.0 ? 0.2 : 0.6);
  }
  const DensityField field =
      vspinn::simulate(u0, BoundaryTrace::constants(0.8, 0.6), grid, f);
  const double dx = grid.dx();
  double mass0 = 0.0, massT = 0.0;
  for (int j = 0; j < 200; ++j) {
    mass0 += dx * field.values(0, j);
    massT += dx * field.values(field.nt(), j);
  }
  // Recompute the boundary flux bookkeeping step by step.
  double net_in = 0.0;
  for (int k = 0; k < field.nt(); ++k) {
    const double fl = vspinn::godunov_flux(0.8, field.values(k, 0), f);
    const double fr = vspinn::godunov_flux(field.values(k, 199), 0.6, f);
    net_in += field.dt * (fl - fr);
  }
  CHECK(massT - mass0 == doctest::Approx(net_in).epsilon(1e-10));
}

TEST_CASE("solution stays within the invariant region [0, 1]") {
  const GridSpec grid{1.0, 1.0, 150, 0.9};
  std::vector<double> u0(150);
  for (int j = 0; j < 150; ++j) u0[j] = j % 2 == 0 ? 0.0 : 1.0;
  const DensityField field =
      vspinn::simulate(u0, BoundaryTrace::constants(0.0, 1.0), grid, GreenshieldsFlux{1.0});
  for (int k = 0; k <= field.nt(); ++k) {
    for (int j = 0; j < 150; ++j) {
      CHECK(field.values(k, j) >= -1e-14);
      CHECK(field.values(k, j) <= 1.0 + 1e-14);
    }
  }
}

TEST_CASE("time step count honors the CFL constraint") {
  const GridSpec grid{1.0, 1.0, 200, 0.9};
  std::vector<double> u0(200, 0.5);
  const DensityField field =
      vspinn::simulate(u0, BoundaryTrace::constants(0.5, 0.5), grid, GreenshieldsFlux{1.0});
  CHECK(field.dt * field.nt() == doctest::Approx(1.0));
  CHECK(field.dt <= 0.9 * grid.dx() / 1.0 + 1e-15);
  CHECK(field.nt() == 223);
}

TEST_CASE("measurement sampling covers the initial row and boundaries") {
  const GridSpec grid{1.0, 0.4, 50, 0.9};
  std::vector<double> u0(50, 0.3);
  const DensityField field =
      vspinn::simulate(u0, BoundaryTrace::constants(0.3, 0.3), grid, GreenshieldsFlux{1.0});
  const auto pts = vspinn::sample_measurements(field, 0.0, 0);
  CHECK(static_cast<int>(pts.size()) == 50 + 2 * (field.nt() + 1));
  // Initial row at t = 0 across all cells.
  for (int j = 0; j < 50; ++j) {
    CHECK(pts[j].t == 0.0);
    CHECK(pts[j].x == doctest::Approx(grid.cell_center(j)));
    CHECK(pts[j].u == doctest::Approx(0.3));
  }
  // Boundary columns at the first and last cell centers.
  bool saw_left = false, saw_right = false;
  for (std::size_t i = 50; i < pts.size(); ++i) {
    if (pts[i].x == doctest::Approx(grid.cell_center(0))) saw_left = true;
    if (pts[i].x == doctest::Approx(grid.cell_center(49))) saw_right = true;
  }
  CHECK(saw_left);
  CHECK(saw_right);
}

TEST_CASE("noisy sampling is seed-deterministic") {
  const GridSpec grid{1.0, 0.2, 40, 0.9};
  std::vector<double> u0(40, 0.5);
  const DensityField field =
      vspinn::simulate(u0, BoundaryTrace::constants(0.5, 0.5), grid, GreenshieldsFlux{1.0});
  const auto a = vspinn::sample_measurements(field, 0.02, 7);
  const auto b = vspinn::sample_measurements(field, 0.02, 7);
  const auto c = vspinn::sample_measurements(field, 0.02, 8);
  REQUIRE(a.size() == b.size());
  bool all_equal = true, any_diff_seed = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].u != b[i].u) all_equal = false;
    if (a[i].u != c[i].u) any_diff_seed = true;
  }
  CHECK(all_equal);
  CHECK(any_diff_seed);
}

TEST_CASE("field and dataset files round-trip") {
  const GridSpec grid{1.0, 0.25, 30, 0.9};
  std::vector<double> u0(30);
  for (int j = 0; j < 30; ++j) u0[j] = 0.2 + 0.5 * grid.cell_center(j);
  const DensityField field = vspinn::simulate(
      u0, BoundaryTrace::constants(u0.front(), u0.back()), grid, GreenshieldsFlux{1.0});
  const auto dir = std::filesystem::temp_directory_path();
  const std::filesystem::path fpath = dir / "vspinn_field_test.txt";
  const std::filesystem::path dpath = dir / "vspinn_data_test.txt";
  vspinn::save_field(field, fpath);
  const DensityField loaded = vspinn::load_field(fpath);
  CHECK(loaded.grid.nx == 30);
  CHECK(loaded.nt() == field.nt());
  CHECK(loaded.dt == field.dt);
  for (int k = 0; k <= field.nt(); ++k) {
    for (int j = 0; j < 30; ++j) CHECK(loaded.values(k, j) == field.values(k, j));
  }
  const auto pts = vspinn::sample_measurements(field, 0.0, 0);
  vspinn::save_dataset(pts, dpath);
  const auto back = vspinn::load_dataset(dpath);
  REQUIRE(back.size() == pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    CHECK(back[i].t == pts[i].t);
    CHECK(back[i].x == pts[i].x);
    CHECK(back[i].u == pts[i].u);
  }
  std::filesystem::remove(fpath);
  std::filesystem::remove(dpath);
}
