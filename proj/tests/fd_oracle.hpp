#pragma once

// Central finite-difference oracles used to check the jet and gradient
// engines through an independent route.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

namespace fd {

inline double first(const std::function<double(double)>& f, double x, double h = 1e-4) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

inline double second(const std::function<double(double)>& f, double x, double h = 1e-4) {
  return (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h);
}

struct JetFd {
  double v, dt, dx, dxx;
};

inline JetFd jet(const std::function<double(double, double)>& f, double t, double x,
                 double h = 1e-4) {
  JetFd out;
  out.v = f(t, x);
  out.dt = first([&](double s) { return f(s, x); }, t, h);
  out.dx = first([&](double s) { return f(t, s); }, x, h);
  out.dxx = second([&](double s) { return f(t, s); }, x, h);
  return out;
}

inline std::vector<double> grad(const std::function<double(const std::vector<double>&)>& f,
                                std::vector<double> params, double h = 1e-4) {
  std::vector<double> g(params.size());
  for (std::size_t k = 0; k < params.size(); ++k) {
    const double save = params[k];
    params[k] = save + h;
    const double fp = f(params);
    params[k] = save - h;
    const double fm = f(params);
    params[k] = save;
    g[k] = (fp - fm) / (2.0 * h);
  }
  return g;
}

inline double rel_err(double got, double want, double floor = 1e-8) {
  const double denom = std::max(std::fabs(want), floor);
  return std::fabs(got - want) / denom;
}

}  // namespace fd
