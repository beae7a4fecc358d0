#pragma once

#include <cmath>
#include <stdexcept>

#include "vspinn/jet.hpp"

namespace vspinn {

// Concave fundamental diagram f(u) = v_f u (1 - u): zero at u = 0 and
// u = 1, maximum v_f / 4 at u = 1/2.
struct GreenshieldsFlux {
  double v_f = 1.0;

  template <typename S>
  S flux(const S& u) const {
    return v_f * (u * (S(1) - u));
  }

  template <typename S>
  S flux_prime(const S& u) const {
    return v_f * (S(1) - S(2) * u);
  }

  double flux_second() const { return -2.0 * v_f; }

  double critical_density() const { return 0.5; }
  double max_wave_speed() const { return v_f; }
};

// Pointwise viscous residual r_gamma(u) = u_t + f'(u) u_x - gamma u_xx,
// in the non-conservative chain-rule form (f and u are smooth here).
template <typename S>
S residual(const Jet2<S>& u, const GreenshieldsFlux& m, double gamma) {
  return u.dt + m.flux_prime(u.v) * u.dx - gamma * u.dxx;
}

// Per-stage viscosities gamma_i = gamma_init (1 - (i/n)^p): starts at
// gamma_init, strictly decreasing, exactly zero at the last stage.
struct ViscositySchedule {
  double gamma_init = 0.1;
  double p = 2.0;
  int n = 0;

  double at(int i) const {
    if (n < 1) throw std::out_of_range("ViscositySchedule: requires n >= 1");
    if (i < 0 || i > n) throw std::out_of_range("ViscositySchedule: stage out of range");
    if (i == n) return 0.0;
    return gamma_init * (1.0 - std::pow(static_cast<double>(i) / n, p));
  }
};

}  // namespace vspinn
