#pragma once

#include <cmath>
#include <functional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace vspinn {

// Reverse-mode scalar tape. Each recorded node keeps at most two parents
// together with the local partials; backward() runs one pass in reverse
// insertion order, which fixes the accumulation order and makes gradients
// bit-reproducible.
class Tape {
 public:
  struct Node {
    int a = -1;
    int b = -1;
    double wa = 0.0;
    double wb = 0.0;
  };

  int push(int a, double wa, int b, double wb) {
    nodes_.push_back({a, b, wa, wb});
    return static_cast<int>(nodes_.size()) - 1;
  }

  int push_leaf() { return push(-1, 0.0, -1, 0.0); }

  std::size_t size() const { return nodes_.size(); }

  // Adjoints of every node with respect to the node `root`.
  std::vector<double> backward(int root) const {
    std::vector<double> adj(nodes_.size(), 0.0);
    adj.at(static_cast<std::size_t>(root)) = 1.0;
    for (int i = static_cast<int>(nodes_.size()) - 1; i >= 0; --i) {
      const double g = adj[static_cast<std::size_t>(i)];
      if (g == 0.0) continue;
      const Node& n = nodes_[static_cast<std::size_t>(i)];
      if (n.a >= 0) adj[static_cast<std::size_t>(n.a)] += n.wa * g;
      if (n.b >= 0) adj[static_cast<std::size_t>(n.b)] += n.wb * g;
    }
    return adj;
  }

 private:
  std::vector<Node> nodes_;
};

// A value recorded on a tape. A Var with no tape behaves as a constant,
// so literals mix freely with recorded values.
struct Var {
  Tape* tape = nullptr;
  int idx = -1;
  double v = 0.0;

  Var() = default;
  Var(double value) : v(value) {}  // NOLINT: implicit constant lift
  Var(Tape& t, double value) : tape(&t), idx(t.push_leaf()), v(value) {}
};

namespace detail {

inline Var record(Tape* tape, double value, const Var& a, double wa,
                  const Var& b, double wb) {
  Var out;
  out.v = value;
  out.tape = tape;
  if (tape != nullptr) {
    out.idx = tape->push(a.tape ? a.idx : -1, wa, b.tape ? b.idx : -1, wb);
  }
  return out;
}

inline Tape* joint_tape(const Var& a, const Var& b) {
  return a.tape != nullptr ? a.tape : b.tape;
}

}  // namespace detail

inline Var operator+(const Var& a, const Var& b) {
  return detail::record(detail::joint_tape(a, b), a.v + b.v, a, 1.0, b, 1.0);
}
inline Var operator-(const Var& a, const Var& b) {
  return detail::record(detail::joint_tape(a, b), a.v - b.v, a, 1.0, b, -1.0);
}
inline Var operator*(const Var& a, const Var& b) {
  return detail::record(detail::joint_tape(a, b), a.v * b.v, a, b.v, b, a.v);
}
inline Var operator-(const Var& a) {
  return detail::record(a.tape, -a.v, a, -1.0, a, 0.0);
}
inline Var& operator+=(Var& a, const Var& b) { return a = a + b; }

inline Var tanh(const Var& a) {
  const double h = std::tanh(a.v);
  return detail::record(a.tape, h, a, 1.0 - h * h, a, 0.0);
}

// |x| with the subgradient at 0 taken as 0.
inline Var abs(const Var& a) {
  const double s = a.v > 0.0 ? 1.0 : (a.v < 0.0 ? -1.0 : 0.0);
  return detail::record(a.tape, std::fabs(a.v), a, s, a, 0.0);
}

// Evaluates `loss` on a fresh tape with one leaf per parameter and returns
// the loss value together with d(loss)/d(param) in parameter order.
// Throws on a non-finite loss or gradient (training divergence).
inline std::pair<double, std::vector<double>> grad_params(
    const std::function<Var(std::span<const Var>)>& loss,
    std::span<const double> params) {
  Tape tape;
  std::vector<Var> leaves;
  leaves.reserve(params.size());
  for (double p : params) leaves.emplace_back(tape, p);
  const Var root = loss(leaves);
  if (!std::isfinite(root.v)) {
    throw std::runtime_error("grad_params: non-finite loss");
  }
  std::vector<double> grad(params.size(), 0.0);
  if (root.tape != nullptr) {
    const std::vector<double> adj = tape.backward(root.idx);
    for (std::size_t k = 0; k < leaves.size(); ++k) {
      grad[k] = adj[static_cast<std::size_t>(leaves[k].idx)];
      if (!std::isfinite(grad[k])) {
        throw std::runtime_error("grad_params: non-finite gradient");
      }
    }
  }
  return {root.v, std::move(grad)};
}

}  // namespace vspinn
