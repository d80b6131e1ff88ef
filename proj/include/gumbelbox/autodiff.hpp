#pragma once

#include <cassert>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "gumbelbox/math.hpp"

// Scalar reverse-mode autodiff on a tape. Nodes are appended in evaluation
// order, so the tape is already topologically sorted and the backward pass is
// a single reverse loop. Each node stores at most two parents with local
// partial derivatives; values and adjoints live in parallel arrays.

namespace gumbelbox {

class Tape;

struct Var {
  Tape* tape = nullptr;
  std::uint32_t id = 0;
  double v = 0.0;

  double value() const { return v; }
};

class Tape {
 public:
  static constexpr std::uint32_t no_parent = 0xffffffffu;

  void reset() {
    da_.clear();
    db_.clear();
    pa_.clear();
    pb_.clear();
    vals_.clear();
    adj_.clear();
  }

  std::size_t size() const { return vals_.size(); }

  Var leaf(double v) {
    const std::uint32_t id = push(v, 0.0, 0.0, no_parent, no_parent);
    return Var{this, id, v};
  }

  Var unary(double v, double da, std::uint32_t a) {
    return Var{this, push(v, da, 0.0, a, no_parent), v};
  }

  Var binary(double v, double da, std::uint32_t a, double db, std::uint32_t b) {
    return Var{this, push(v, da, db, a, b), v};
  }

  // Seeds d(output)/d(output) = 1 and accumulates adjoints into every node.
  void backward(const Var& output) {
    assert(output.tape == this);
    adj_.assign(vals_.size(), 0.0);
    adj_[output.id] = 1.0;
    for (std::uint32_t i = static_cast<std::uint32_t>(vals_.size()); i-- > 0;) {
      const double a = adj_[i];
      if (a == 0.0) continue;
      if (pa_[i] != no_parent) adj_[pa_[i]] += a * da_[i];
      if (pb_[i] != no_parent) adj_[pb_[i]] += a * db_[i];
    }
  }

  double adjoint(const Var& x) const {
    assert(x.tape == this && x.id < adj_.size());
    return adj_[x.id];
  }

 private:
  std::uint32_t push(double v, double da, double db, std::uint32_t a, std::uint32_t b) {
    const std::uint32_t id = static_cast<std::uint32_t>(vals_.size());
    vals_.push_back(v);
    da_.push_back(da);
    db_.push_back(db);
    pa_.push_back(a);
    pb_.push_back(b);
    return id;
  }

  std::vector<double> da_, db_, vals_, adj_;
  std::vector<std::uint32_t> pa_, pb_;
};

inline Var operator+(const Var& x, const Var& y) {
  return x.tape->binary(x.v + y.v, 1.0, x.id, 1.0, y.id);
}
inline Var operator+(const Var& x, double c) { return x.tape->unary(x.v + c, 1.0, x.id); }
inline Var operator+(double c, const Var& x) { return x + c; }

inline Var operator-(const Var& x, const Var& y) {
  return x.tape->binary(x.v - y.v, 1.0, x.id, -1.0, y.id);
}
inline Var operator-(const Var& x, double c) { return x.tape->unary(x.v - c, 1.0, x.id); }
inline Var operator-(double c, const Var& x) { return x.tape->unary(c - x.v, -1.0, x.id); }
inline Var operator-(const Var& x) { return x.tape->unary(-x.v, -1.0, x.id); }

inline Var operator*(const Var& x, const Var& y) {
  return x.tape->binary(x.v * y.v, y.v, x.id, x.v, y.id);
}
inline Var operator*(const Var& x, double c) { return x.tape->unary(x.v * c, c, x.id); }
inline Var operator*(double c, const Var& x) { return x * c; }

// Division values use true division so the Var path reproduces the plain
// double path exactly; only the partials go through the reciprocal.
inline Var operator/(const Var& x, const Var& y) {
  const double inv = 1.0 / y.v;
  return x.tape->binary(x.v / y.v, inv, x.id, -x.v * inv * inv, y.id);
}
inline Var operator/(const Var& x, double c) {
  return x.tape->unary(x.v / c, 1.0 / c, x.id);
}
inline Var operator/(double c, const Var& x) {
  const double inv = 1.0 / x.v;
  return x.tape->unary(c / x.v, -c * inv * inv, x.id);
}

inline Var exp(const Var& x) {
  const double e = std::exp(x.v);
  return x.tape->unary(e, e, x.id);
}

inline Var log(const Var& x) { return x.tape->unary(std::log(x.v), 1.0 / x.v, x.id); }

inline Var log1p(const Var& x) {
  return x.tape->unary(std::log1p(x.v), 1.0 / (1.0 + x.v), x.id);
}

inline Var sigmoid(const Var& x) {
  const double s = sigmoid(x.v);
  return x.tape->unary(s, s * (1.0 - s), x.id);
}

inline Var softplus(const Var& x) {
  return x.tape->unary(softplus(x.v), sigmoid(x.v), x.id);
}

// log(e^a + e^b) with softmax-weight partials.
inline Var lse2(const Var& a, const Var& b) {
  const double v = lse2(a.v, b.v);
  const double wa = sigmoid(a.v - b.v);
  return a.tape->binary(v, wa, a.id, 1.0 - wa, b.id);
}

// max(x, 0) with the subgradient convention d/dx = 0 at x = 0.
inline Var max0(const Var& x) {
  return x.tape->unary(x.v > 0.0 ? x.v : 0.0, x.v > 0.0 ? 1.0 : 0.0, x.id);
}

// Hard max/min: gradient flows to the selected argument (first wins ties).
inline Var vmax(const Var& a, const Var& b) {
  const bool first = a.v >= b.v;
  return a.tape->binary(first ? a.v : b.v, first ? 1.0 : 0.0, a.id, first ? 0.0 : 1.0, b.id);
}
inline Var vmin(const Var& a, const Var& b) {
  const bool first = a.v <= b.v;
  return a.tape->binary(first ? a.v : b.v, first ? 1.0 : 0.0, a.id, first ? 0.0 : 1.0, b.id);
}

// Clamp with zero gradient outside [lo, hi].
inline Var clamp(const Var& x, double lo, double hi) {
  if (x.v < lo) return x.tape->unary(lo, 0.0, x.id);
  if (x.v > hi) return x.tape->unary(hi, 0.0, x.id);
  return x.tape->unary(x.v, 1.0, x.id);
}

// Expected overlap length of a Gumbel corner pair as a custom tape node:
// value 2*beta*K0(2*exp(-x/(2*beta))), derivative z*K1(z).
inline Var expected_length_gap_exact(const Var& x, double beta) {
  return x.tape->unary(expected_length_gap_exact(x.v, beta),
                       expected_length_gap_exact_dx(x.v, beta), x.id);
}

inline Var expected_length_gap_softplus(const Var& x, double beta) {
  const double t = x.v / beta - 2.0 * euler_gamma;
  return x.tape->unary(expected_length_gap_softplus(x.v, beta), sigmoid(t), x.id);
}

// Double counterparts of the Var primitives so numeric kernels can be written
// once, templated on the scalar type. Unqualified calls inside namespace
// gumbelbox would otherwise stop at the Var overloads.
inline double exp(double x) { return std::exp(x); }
inline double log(double x) { return std::log(x); }
inline double log1p(double x) { return std::log1p(x); }
inline double max0(double x) { return x > 0.0 ? x : 0.0; }
inline double vmax(double a, double b) { return a >= b ? a : b; }
inline double vmin(double a, double b) { return a <= b ? a : b; }
inline double clamp(double x, double lo, double hi) {
  return x < lo ? lo : (x > hi ? hi : x);
}

inline double value_of(double x) { return x; }
inline double value_of(const Var& x) { return x.v; }

}  // namespace gumbelbox
