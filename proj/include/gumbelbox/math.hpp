#pragma once

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <limits>
#include <span>
#include <stdexcept>

#include "gumbelbox/bessel.hpp"
#include "gumbelbox/common.hpp"

// Scalar kernels: stable LogSumExp, soft min/max locations, Gumbel
// distributions, and the exact / softplus expected side lengths of a Gumbel
// interval with location gap x.

namespace gumbelbox {

inline double log_sum_exp(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("log_sum_exp: empty input");
  double m = -std::numeric_limits<double>::infinity();
  for (double v : values) m = std::max(m, v);
  if (!std::isfinite(m)) return m; // all -inf, or a +inf/nan to propagate
  double s = 0.0;
  for (double v : values) s += std::exp(v - m);
  return m + std::log(s);
}

inline double log_sum_exp(std::initializer_list<double> values) {
  return log_sum_exp(std::span<const double>(values.begin(), values.size()));
}

// Two-argument LogSumExp without the span plumbing; used in inner loops.
inline double lse2(double a, double b) {
  const double m = std::max(a, b);
  if (!std::isfinite(m)) return m;
  return m + std::log1p(std::exp(-std::abs(a - b)));
}

// Location of the max-stable combination of MaxGumbel variables with
// locations mus and shared scale beta: beta * LSE(mu_i / beta). One max
// instance is pulled out of the sum and folded back via log1p so equal
// inputs shift by exactly beta*ln2 and the two-element case matches the
// pairwise kernel bit for bit.
inline double soft_max_location(std::span<const double> mus, double beta) {
  if (!(beta > 0.0)) throw std::invalid_argument("soft_max_location: beta must be > 0");
  if (mus.empty()) throw std::invalid_argument("soft_max_location: empty input");
  std::size_t arg = 0;
  for (std::size_t i = 1; i < mus.size(); ++i)
    if (mus[i] > mus[arg]) arg = i;
  const double m = mus[arg];
  if (!std::isfinite(m)) return m;
  const double inv = 1.0 / beta;
  double s = 0.0;
  for (std::size_t i = 0; i < mus.size(); ++i)
    if (i != arg) s += std::exp((mus[i] - m) * inv);
  return m + beta * std::log1p(s);
}

// Dual form for MinGumbel variables: -beta * LSE(-mu_i / beta).
inline double soft_min_location(std::span<const double> mus, double beta) {
  if (!(beta > 0.0)) throw std::invalid_argument("soft_min_location: beta must be > 0");
  if (mus.empty()) throw std::invalid_argument("soft_min_location: empty input");
  std::size_t arg = 0;
  for (std::size_t i = 1; i < mus.size(); ++i)
    if (mus[i] < mus[arg]) arg = i;
  const double m = mus[arg];
  if (!std::isfinite(m)) return m;
  const double inv = 1.0 / beta;
  double s = 0.0;
  for (std::size_t i = 0; i < mus.size(); ++i)
    if (i != arg) s += std::exp((m - mus[i]) * inv);
  return m - beta * std::log1p(s);
}

inline double soft_max_location(std::initializer_list<double> mus, double beta) {
  return soft_max_location(std::span<const double>(mus.begin(), mus.size()), beta);
}
inline double soft_min_location(std::initializer_list<double> mus, double beta) {
  return soft_min_location(std::span<const double>(mus.begin(), mus.size()), beta);
}

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline double softplus(double t) {
  return t > softplus_linear_arg ? t : std::log1p(std::exp(t));
}

// ---- Gumbel distributions ----

enum class GumbelVariant { MaxGumbel, MinGumbel };

struct GumbelParams {
  double mu = 0.0;
  double beta = 1.0;
  GumbelVariant variant = GumbelVariant::MaxGumbel;
};

// Inverse-CDF style sampling, deterministic given u. The MinGumbel branch
// feeds u through the upper tail so that u = 1/e maps to mu for both
// variants.
inline double sample_gumbel(const GumbelParams& g, double u) {
  if (!(g.beta > 0.0)) throw std::invalid_argument("sample_gumbel: beta must be > 0");
  if (!(u > 0.0 && u < 1.0)) throw std::invalid_argument("sample_gumbel: u must lie in (0,1)");
  const double t = std::log(-std::log(u));
  return g.variant == GumbelVariant::MaxGumbel ? g.mu - g.beta * t : g.mu + g.beta * t;
}

inline double gumbel_cdf(const GumbelParams& g, double y) {
  if (!(g.beta > 0.0)) throw std::invalid_argument("gumbel_cdf: beta must be > 0");
  const double t = (y - g.mu) / g.beta;
  if (g.variant == GumbelVariant::MaxGumbel) return std::exp(-std::exp(-t));
  return 1.0 - std::exp(-std::exp(t));
}

inline double gumbel_pdf(const GumbelParams& g, double y) {
  if (!(g.beta > 0.0)) throw std::invalid_argument("gumbel_pdf: beta must be > 0");
  const double t = (y - g.mu) / g.beta;
  if (g.variant == GumbelVariant::MaxGumbel) return std::exp(-(t + std::exp(-t))) / g.beta;
  return std::exp(t - std::exp(t)) / g.beta;
}

// ---- Expected side lengths ----

// m(x) = 2*beta*K0(2*exp(-x/(2*beta))): the expected length of the interval
// [X, Y], X ~ MaxGumbel(mu_min, beta), Y ~ MinGumbel(mu_max, beta), clipped
// at zero, as a function of the location gap x = mu_max - mu_min.
inline double expected_length_gap_exact(double x, double beta) {
  if (!(beta > 0.0)) throw std::invalid_argument("expected_length_gap_exact: beta must be > 0");
  const double u = -x / (2.0 * beta);
  // Deeply negative gap: K0's argument overflows and the true value is below
  // the smallest normal double, so report exactly 0.
  if (u > 700.0) return 0.0;
  const double z = 2.0 * std::exp(u);
  // Deeply positive gap: z underflows to 0; use K0(z) -> -log(z/2) - gamma.
  if (z == 0.0) return x - 2.0 * beta * euler_gamma;
  return 2.0 * beta * bessel_k0(z);
}

// d/dx of the above: z*K1(z) with z = 2*exp(-x/(2*beta)).
inline double expected_length_gap_exact_dx(double x, double beta) {
  if (!(beta > 0.0)) throw std::invalid_argument("expected_length_gap_exact_dx: beta must be > 0");
  const double u = -x / (2.0 * beta);
  if (u > 690.0) return 0.0; // z*K1(z) ~ sqrt(pi*z/2)*exp(-z), deep underflow
  const double z = 2.0 * std::exp(u);
  if (z < 1e-8) return 1.0; // z*K1(z) = 1 + O(z^2 log z)
  return z * bessel_k1(z);
}

// Softplus approximation of m(x): beta * log(1 + exp(x/beta - 2*gamma)).
inline double expected_length_gap_softplus(double x, double beta) {
  if (!(beta > 0.0)) throw std::invalid_argument("expected_length_gap_softplus: beta must be > 0");
  return beta * softplus(x / beta - 2.0 * euler_gamma);
}

inline double expected_length_exact(double mu_min, double mu_max, double beta) {
  return expected_length_gap_exact(mu_max - mu_min, beta);
}

inline double expected_length_softplus(double mu_min, double mu_max, double beta) {
  return expected_length_gap_softplus(mu_max - mu_min, beta);
}

} // namespace gumbelbox
