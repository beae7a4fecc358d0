#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace vspinn {

// Smooth activations only: the jet chain rule needs phi in C^2.
enum class Activation { Tanh };

inline Activation activation_from_string(const std::string& s) {
  if (s == "tanh") return Activation::Tanh;
  throw std::invalid_argument("unsupported activation (C^2 required): " + s);
}

inline const char* to_string(Activation a) {
  switch (a) {
    case Activation::Tanh: return "tanh";
  }
  return "?";
}

// Second-order Taylor jet: value plus (d/dt, d/dx, d2/dx2).
// These four slots are exactly what the viscous residual
// r = u_t + f'(u) u_x - gamma u_xx consumes; no cross or tt terms.
template <typename S>
struct Jet2 {
  S v{};
  S dt{};
  S dx{};
  S dxx{};

  static Jet2 constant(const S& c) { return {c, S(0), S(0), S(0)}; }
  static Jet2 time_coord(const S& t) { return {t, S(1), S(0), S(0)}; }
  static Jet2 space_coord(const S& x) { return {x, S(0), S(1), S(0)}; }
};

using Jet2d = Jet2<double>;

template <typename S>
Jet2<S> operator+(const Jet2<S>& a, const Jet2<S>& b) {
  return {a.v + b.v, a.dt + b.dt, a.dx + b.dx, a.dxx + b.dxx};
}

template <typename S>
Jet2<S> operator-(const Jet2<S>& a, const Jet2<S>& b) {
  return {a.v - b.v, a.dt - b.dt, a.dx - b.dx, a.dxx - b.dxx};
}

// Leibniz rule truncated at second order in x.
template <typename S>
Jet2<S> operator*(const Jet2<S>& a, const Jet2<S>& b) {
  return {a.v * b.v,
          a.v * b.dt + a.dt * b.v,
          a.v * b.dx + a.dx * b.v,
          a.v * b.dxx + S(2) * a.dx * b.dx + a.dxx * b.v};
}

template <typename S, typename C>
Jet2<S> operator*(const C& c, const Jet2<S>& a) {
  return {c * a.v, c * a.dt, c * a.dx, c * a.dxx};
}

template <typename S, typename C>
Jet2<S> operator+(const Jet2<S>& a, const C& c) {
  return {a.v + c, a.dt, a.dx, a.dxx};
}

// Chain rule through an elementwise C^2 activation:
//   h   = phi(a.v)
//   h_t = phi'(a.v) a_t,  h_x analogous
//   h_xx = phi''(a.v) a_x^2 + phi'(a.v) a_xx
template <typename S>
Jet2<S> jet_activate(const Jet2<S>& a, Activation act) {
  switch (act) {
    case Activation::Tanh: {
      using std::tanh;
      const S h = tanh(a.v);
      const S p1 = S(1) - h * h;
      const S p2 = S(-2) * h * p1;
      return {h, p1 * a.dt, p1 * a.dx, p2 * a.dx * a.dx + p1 * a.dxx};
    }
  }
  throw std::invalid_argument("jet_activate: unknown activation");
}

}  // namespace vspinn
