#pragma once

#include <algorithm>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "gumbelbox/autodiff.hpp"
#include "gumbelbox/common.hpp"
#include "gumbelbox/math.hpp"
#include "gumbelbox/rng.hpp"

// Box parameter storage with a constrained-to-[0,1] parameterization and the
// four scoring backends (hard, smooth, gumbel, gaussian) mapping entity pairs
// and sets to expected volumes and conditional probabilities.
//
// The numeric kernels are templated on the scalar type: instantiated with
// double they are the allocation-free scoring fast path, instantiated with
// Var they build the gradient tape. Both paths evaluate the same expressions
// in the same order, so forward values agree bit for bit.

namespace gumbelbox {

enum class ModelKind { Hard, Smooth, Gumbel, Gaussian };
enum class VolumeMode { ExactBessel, Softplus };

struct Temperatures {
  double beta = 1.0; // intersection LogSumExp scale
  double tau = 1.0;  // volume softplus temperature
};

inline Temperatures coupled_temperatures(double beta) { return Temperatures{beta, beta}; }

// Unconstrained parameters per entity and dimension. Decoding guarantees
// 0 < mu_min < mu_max < 1: mu_min = sigmoid(raw_min) and the width is a
// sigmoid-scaled fraction of the room remaining above mu_min.
struct BoxParams {
  std::size_t n_entities = 0;
  std::size_t dim = 0;
  std::vector<double> raw_min;   // n_entities x dim, row-major
  std::vector<double> raw_delta; // n_entities x dim, row-major
  Temperatures temps;

  void resize(std::size_t n, std::size_t d) {
    n_entities = n;
    dim = d;
    raw_min.assign(n * d, 0.0);
    raw_delta.assign(n * d, 0.0);
  }
};

// Gaussian-center boxes: C = mu + sigma * eps with sigma = softplus(raw_sigma),
// box = [C - r, C + r] with r = softplus(raw_radius). Volumes are Monte-Carlo
// means of smooth-length volumes over n_samples reparameterized draws.
struct GaussianBoxParams {
  std::size_t n_entities = 0;
  std::size_t dim = 0;
  std::vector<double> mu_center;  // n_entities x dim
  std::vector<double> raw_sigma;  // n_entities x dim
  std::vector<double> raw_radius; // n_entities x dim
  std::size_t n_samples = 32;
  Temperatures temps;

  void resize(std::size_t n, std::size_t d) {
    n_entities = n;
    dim = d;
    mu_center.assign(n * d, 0.5);
    raw_sigma.assign(n * d, 0.0);
    raw_radius.assign(n * d, 0.0);
  }
};

// Entities required inside (true) and outside (false) for a joint query.
struct QuerySets {
  std::vector<std::uint32_t> required_true;
  std::vector<std::uint32_t> required_false;
};

struct Model {
  ModelKind kind = ModelKind::Gumbel;
  VolumeMode mode = VolumeMode::Softplus;
  BoxParams box;
  GaussianBoxParams gauss;
  std::uint64_t noise_seed = 0; // gaussian per-pair noise stream root

  std::size_t n_entities() const {
    return kind == ModelKind::Gaussian ? gauss.n_entities : box.n_entities;
  }
  std::size_t dim() const { return kind == ModelKind::Gaussian ? gauss.dim : box.dim; }
  const Temperatures& temps() const {
    return kind == ModelKind::Gaussian ? gauss.temps : box.temps;
  }
};

// ---- elementwise kernels, templated on the scalar type ----

template <class S>
inline void decode_corners(const S& raw_min, const S& raw_delta, S& mu_min, S& mu_max) {
  mu_min = sigmoid(raw_min);
  mu_max = mu_min + sigmoid(raw_delta) * (1.0 - mu_min);
}

// Soft max/min locations of a pair at scale beta, in the max-shifted log1p
// form: equal inputs shift by exactly +-beta*ln2.
template <class S>
inline S soft_max_pair(const S& a, const S& b, double beta, double inv_beta) {
  S mx = vmax(a, b);
  S mn = vmin(a, b);
  return mx + beta * log1p(exp((mn - mx) * inv_beta));
}

template <class S>
inline S soft_min_pair(const S& a, const S& b, double beta, double inv_beta) {
  S mn = vmin(a, b);
  S mx = vmax(a, b);
  return mn - beta * log1p(exp((mn - mx) * inv_beta));
}

// Per-dimension expected side length for a location gap under one backend.
template <class S>
inline S side_length(const S& gap, ModelKind kind, VolumeMode mode, const Temperatures& t,
                     double inv_tau) {
  switch (kind) {
    case ModelKind::Hard:
      return max0(gap);
    case ModelKind::Smooth:
    case ModelKind::Gaussian: // per-sample boxes are smooth-length boxes
      return t.tau * softplus(gap * inv_tau);
    case ModelKind::Gumbel:
      if (mode == VolumeMode::ExactBessel) return expected_length_gap_exact(gap, t.beta);
      return expected_length_gap_softplus(gap, t.tau);
  }
  throw std::logic_error("side_length: unhandled kind");
}

// Expected volume of a single decoded box (the conditional denominator).
template <class S>
inline S box_expected_volume_t(ModelKind kind, VolumeMode mode, const Temperatures& t,
                               const S* mn, const S* mx, std::size_t d) {
  const double inv_tau = 1.0 / t.tau;
  S vol = side_length(mx[0] - mn[0], kind, mode, t, inv_tau);
  for (std::size_t j = 1; j < d; ++j)
    vol = vol * side_length(mx[j] - mn[j], kind, mode, t, inv_tau);
  return vol;
}

// Expected volume of the intersection of two decoded boxes (the numerator).
// Hard and smooth backends intersect with hard per-dimension max/min; the
// gumbel backend uses the soft locations at scale beta.
template <class S>
inline S pair_intersection_volume_t(ModelKind kind, VolumeMode mode, const Temperatures& t,
                                    const S* amn, const S* amx, const S* bmn, const S* bmx,
                                    std::size_t d) {
  const double inv_beta = 1.0 / t.beta;
  const double inv_tau = 1.0 / t.tau;
  auto dim_length = [&](std::size_t j) {
    S lo = kind == ModelKind::Gumbel ? soft_max_pair(amn[j], bmn[j], t.beta, inv_beta)
                                     : vmax(amn[j], bmn[j]);
    S hi = kind == ModelKind::Gumbel ? soft_min_pair(amx[j], bmx[j], t.beta, inv_beta)
                                     : vmin(amx[j], bmx[j]);
    return side_length(hi - lo, kind, mode, t, inv_tau);
  };
  S vol = dim_length(0);
  for (std::size_t j = 1; j < d; ++j) vol = vol * dim_length(j);
  return vol;
}

namespace detail {
inline double make_const(double, double v) { return v; }
inline Var make_const(const Var& like, double v) { return like.tape->leaf(v); }

inline void validate_temps(ModelKind kind, VolumeMode mode, const Temperatures& t) {
  if (kind == ModelKind::Gumbel && !(t.beta > 0.0))
    throw std::invalid_argument("temperatures: beta must be > 0");
  const bool needs_tau = kind == ModelKind::Smooth || kind == ModelKind::Gaussian ||
                         (kind == ModelKind::Gumbel && mode == VolumeMode::Softplus);
  if (needs_tau && !(t.tau > 0.0))
    throw std::invalid_argument("temperatures: tau must be > 0");
}
} // namespace detail

// P(a|b) = E[vol(a and b)] / E[vol(b)], clamped into (0,1). A denominator
// that underflows to zero (boxes degenerate beyond double range) reports the
// probability floor rather than 0/0.
template <class S>
inline S pair_conditional_t(ModelKind kind, VolumeMode mode, const Temperatures& t,
                            const S* amn, const S* amx, const S* bmn, const S* bmx,
                            std::size_t d) {
  S num = pair_intersection_volume_t(kind, mode, t, amn, amx, bmn, bmx, d);
  S den = box_expected_volume_t(kind, mode, t, bmn, bmx, d);
  if (!(value_of(den) > 0.0)) return detail::make_const(num, prob_floor);
  return clamp(num / den, prob_floor, prob_ceil);
}

// Gaussian-backend conditional with draws shared between numerator and
// denominator: per sample the same eps realizes both vol(a and b) and vol(b).
// noise holds n_samples blocks of [eps_a (d), eps_b (d)].
template <class S>
inline S gaussian_pair_conditional_t(const Temperatures& t,
                                     const S* mu_a, const S* sig_a, const S* rad_a,
                                     const S* mu_b, const S* sig_b, const S* rad_b,
                                     std::size_t d, const double* noise,
                                     std::size_t n_samples) {
  if (n_samples == 0) throw std::invalid_argument("gaussian conditional: n_samples must be >= 1");
  const double inv_tau = 1.0 / t.tau;
  S num = detail::make_const(mu_a[0], 0.0);
  S den = num;
  for (std::size_t s = 0; s < n_samples; ++s) {
    const double* ea = noise + s * 2 * d;
    const double* eb = ea + d;
    S vol_ab = detail::make_const(mu_a[0], 1.0);
    S vol_b = vol_ab;
    for (std::size_t j = 0; j < d; ++j) {
      S ca = mu_a[j] + sig_a[j] * ea[j];
      S cb = mu_b[j] + sig_b[j] * eb[j];
      S lo_b = cb - rad_b[j];
      S hi_b = cb + rad_b[j];
      S lo = vmax(ca - rad_a[j], lo_b);
      S hi = vmin(ca + rad_a[j], hi_b);
      vol_ab = vol_ab * (t.tau * softplus((hi - lo) * inv_tau));
      vol_b = vol_b * (t.tau * softplus((hi_b - lo_b) * inv_tau));
    }
    num = num + vol_ab;
    den = den + vol_b;
  }
  if (!(value_of(den) > 0.0)) return detail::make_const(num, prob_floor);
  return clamp(num / den, prob_floor, prob_ceil);
}

// ---- plain-double convenience API ----

struct BoxCorners {
  std::vector<double> mn, mx;
};

struct DecodedBoxes {
  std::size_t n = 0, d = 0;
  std::vector<double> mn, mx; // n x d, row-major

  std::span<const double> mins(std::size_t e) const { return {mn.data() + e * d, d}; }
  std::span<const double> maxes(std::size_t e) const { return {mx.data() + e * d, d}; }
};

inline BoxCorners decode_box(const BoxParams& p, std::uint32_t entity) {
  if (entity >= p.n_entities) throw std::out_of_range("decode_box: entity index out of range");
  BoxCorners out;
  out.mn.resize(p.dim);
  out.mx.resize(p.dim);
  for (std::size_t j = 0; j < p.dim; ++j) {
    decode_corners(p.raw_min[entity * p.dim + j], p.raw_delta[entity * p.dim + j],
                   out.mn[j], out.mx[j]);
  }
  return out;
}

inline DecodedBoxes decode_all(const BoxParams& p) {
  DecodedBoxes out;
  out.n = p.n_entities;
  out.d = p.dim;
  out.mn.resize(p.n_entities * p.dim);
  out.mx.resize(p.n_entities * p.dim);
  for (std::size_t i = 0; i < p.n_entities * p.dim; ++i)
    decode_corners(p.raw_min[i], p.raw_delta[i], out.mn[i], out.mx[i]);
  return out;
}

// Location-level intersection of a list of boxes at scale beta. A singleton
// list returns the box unchanged; equal inputs shift by exactly +-beta*ln2.
inline BoxCorners gumbel_intersection(std::span<const BoxCorners> boxes, double beta) {
  if (boxes.empty()) throw std::invalid_argument("gumbel_intersection: empty box list");
  if (!(beta > 0.0)) throw std::invalid_argument("gumbel_intersection: beta must be > 0");
  const std::size_t d = boxes[0].mn.size();
  for (const BoxCorners& b : boxes)
    if (b.mn.size() != d || b.mx.size() != d)
      throw std::invalid_argument("gumbel_intersection: dimension mismatch");
  if (boxes.size() == 1) return boxes[0];
  BoxCorners out;
  out.mn.resize(d);
  out.mx.resize(d);
  std::vector<double> buf(boxes.size());
  for (std::size_t j = 0; j < d; ++j) {
    for (std::size_t i = 0; i < boxes.size(); ++i) buf[i] = boxes[i].mn[j];
    out.mn[j] = soft_max_location(std::span<const double>(buf), beta);
    for (std::size_t i = 0; i < boxes.size(); ++i) buf[i] = boxes[i].mx[j];
    out.mx[j] = soft_min_location(std::span<const double>(buf), beta);
  }
  return out;
}

inline BoxCorners gumbel_intersection(const std::vector<BoxCorners>& boxes, double beta) {
  return gumbel_intersection(std::span<const BoxCorners>(boxes), beta);
}

// Product over dimensions of the expected side length of one box.
inline double expected_volume(std::span<const double> mu_min, std::span<const double> mu_max,
                              const Temperatures& t, VolumeMode mode) {
  if (mu_min.size() != mu_max.size() || mu_min.empty())
    throw std::invalid_argument("expected_volume: corner vectors must match and be non-empty");
  return box_expected_volume_t(ModelKind::Gumbel, mode, t, mu_min.data(), mu_max.data(),
                               mu_min.size());
}

inline double hard_volume(std::span<const double> mu_min, std::span<const double> mu_max) {
  if (mu_min.size() != mu_max.size())
    throw std::invalid_argument("hard_volume: corner vectors must match");
  double vol = 1.0;
  for (std::size_t j = 0; j < mu_min.size(); ++j) vol *= max0(mu_max[j] - mu_min[j]);
  return vol;
}

// Hard-location intersection with smooth side lengths (no mean-shift offset):
// the zero-intersection-variance limit of the gumbel backend.
inline double smoothbox_volume(std::span<const BoxCorners> boxes, const Temperatures& t) {
  if (boxes.empty()) throw std::invalid_argument("smoothbox_volume: empty box list");
  if (!(t.tau > 0.0)) throw std::invalid_argument("smoothbox_volume: tau must be > 0");
  const std::size_t d = boxes[0].mn.size();
  const double inv_tau = 1.0 / t.tau;
  double vol = 1.0;
  for (std::size_t j = 0; j < d; ++j) {
    double lo = boxes[0].mn[j], hi = boxes[0].mx[j];
    for (std::size_t i = 1; i < boxes.size(); ++i) {
      if (boxes[i].mn.size() != d) throw std::invalid_argument("smoothbox_volume: dimension mismatch");
      lo = vmax(lo, boxes[i].mn[j]);
      hi = vmin(hi, boxes[i].mx[j]);
    }
    vol *= t.tau * softplus((hi - lo) * inv_tau);
  }
  return vol;
}

inline double smoothbox_volume(const std::vector<BoxCorners>& boxes, const Temperatures& t) {
  return smoothbox_volume(std::span<const BoxCorners>(boxes), t);
}

// Monte-Carlo expected volume of the intersection of a set of gaussian-center
// boxes; eps draws come from the supplied stream, per entity in list order
// within each sample.
inline double gaussianbox_expected_volume(const GaussianBoxParams& p,
                                          std::span<const std::uint32_t> entities, Rng& rng) {
  if (p.n_samples == 0)
    throw std::invalid_argument("gaussianbox_expected_volume: n_samples must be >= 1");
  if (!(p.temps.tau > 0.0))
    throw std::invalid_argument("gaussianbox_expected_volume: tau must be > 0");
  if (entities.empty())
    throw std::invalid_argument("gaussianbox_expected_volume: empty entity set");
  for (std::uint32_t e : entities)
    if (e >= p.n_entities)
      throw std::out_of_range("gaussianbox_expected_volume: entity index out of range");
  const std::size_t d = p.dim;
  const double inv_tau = 1.0 / p.temps.tau;
  std::vector<double> lo(d), hi(d);
  double total = 0.0;
  for (std::size_t s = 0; s < p.n_samples; ++s) {
    bool first = true;
    for (std::uint32_t e : entities) {
      for (std::size_t j = 0; j < d; ++j) {
        const double sig = softplus(p.raw_sigma[e * d + j]);
        const double rad = softplus(p.raw_radius[e * d + j]);
        const double c = p.mu_center[e * d + j] + sig * rng.normal();
        if (first) {
          lo[j] = c - rad;
          hi[j] = c + rad;
        } else {
          lo[j] = vmax(lo[j], c - rad);
          hi[j] = vmin(hi[j], c + rad);
        }
      }
      first = false;
    }
    double vol = 1.0;
    for (std::size_t j = 0; j < d; ++j) vol *= p.temps.tau * softplus((hi[j] - lo[j]) * inv_tau);
    total += vol;
  }
  return total / static_cast<double>(p.n_samples);
}

namespace detail {

inline std::uint64_t pair_noise_seed(const Model& m, std::uint32_t a, std::uint32_t b) {
  return mix_seed(m.noise_seed,
                  static_cast<std::uint64_t>(a) * m.gauss.n_entities + b);
}

// n_samples blocks of [eps_a (d), eps_b (d)], frozen per (noise_seed, a, b).
inline void fill_pair_noise(const Model& m, std::uint32_t a, std::uint32_t b,
                            std::vector<double>& noise) {
  Rng stream(pair_noise_seed(m, a, b));
  noise.resize(m.gauss.n_samples * 2 * m.gauss.dim);
  for (double& x : noise) x = stream.normal();
}

inline void decode_gaussian_entity(const GaussianBoxParams& p, std::uint32_t e,
                                   std::vector<double>& sig, std::vector<double>& rad) {
  sig.resize(p.dim);
  rad.resize(p.dim);
  for (std::size_t j = 0; j < p.dim; ++j) {
    sig[j] = softplus(p.raw_sigma[e * p.dim + j]);
    rad[j] = softplus(p.raw_radius[e * p.dim + j]);
  }
}

} // namespace detail

inline double conditional_probability(const Model& m, std::uint32_t a, std::uint32_t b) {
  const std::size_t n = m.n_entities();
  if (a >= n || b >= n) throw std::out_of_range("conditional_probability: entity out of range");
  detail::validate_temps(m.kind, m.mode, m.temps());
  if (a == b) return 1.0; // a box intersected with itself is itself
  if (m.kind == ModelKind::Gaussian) {
    std::vector<double> noise;
    detail::fill_pair_noise(m, a, b, noise);
    std::vector<double> sig_a, rad_a, sig_b, rad_b;
    detail::decode_gaussian_entity(m.gauss, a, sig_a, rad_a);
    detail::decode_gaussian_entity(m.gauss, b, sig_b, rad_b);
    return gaussian_pair_conditional_t(m.gauss.temps,
                                       m.gauss.mu_center.data() + a * m.gauss.dim,
                                       sig_a.data(), rad_a.data(),
                                       m.gauss.mu_center.data() + b * m.gauss.dim,
                                       sig_b.data(), rad_b.data(), m.gauss.dim,
                                       noise.data(), m.gauss.n_samples);
  }
  const BoxCorners ca = decode_box(m.box, a);
  const BoxCorners cb = decode_box(m.box, b);
  return pair_conditional_t(m.kind, m.mode, m.box.temps, ca.mn.data(), ca.mx.data(),
                            cb.mn.data(), cb.mx.data(), m.box.dim);
}

// Inclusion-exclusion joint: sum over subsets s of the false-set of
// (-1)^|s| E[vol of the intersection of required_true and s], clamped at 0.
inline double joint_with_negations(const Model& m, const QuerySets& q) {
  const std::size_t n = m.n_entities();
  detail::validate_temps(m.kind, m.mode, m.temps());
  if (q.required_true.empty())
    throw std::invalid_argument("joint_with_negations: required_true must be non-empty");
  if (q.required_true.size() + q.required_false.size() > 20)
    throw std::length_error("joint_with_negations: |T| + |F| exceeds the capacity of 20");
  for (std::uint32_t e : q.required_true)
    if (e >= n) throw std::out_of_range("joint_with_negations: entity out of range");
  for (std::uint32_t e : q.required_false) {
    if (e >= n) throw std::out_of_range("joint_with_negations: entity out of range");
    for (std::uint32_t t : q.required_true)
      if (t == e) throw std::invalid_argument("joint_with_negations: sets must be disjoint");
  }
  // inclusion-exclusion is over sets; repeated members would double-count
  for (const auto* set : {&q.required_true, &q.required_false}) {
    std::vector<std::uint32_t> ids(*set);
    std::sort(ids.begin(), ids.end());
    if (std::adjacent_find(ids.begin(), ids.end()) != ids.end())
      throw std::invalid_argument("joint_with_negations: duplicate entity in a query set");
  }
  const std::size_t nf = q.required_false.size();
  const std::size_t d = m.dim();

  if (m.kind == ModelKind::Gaussian) {
    if (m.gauss.n_samples == 0)
      throw std::invalid_argument("joint_with_negations: n_samples must be >= 1");
    // One noise draw per (sample, member of T union F); every subset reuses
    // the same draws so the signed per-sample volumes telescope.
    std::vector<std::uint32_t> members(q.required_true);
    members.insert(members.end(), q.required_false.begin(), q.required_false.end());
    std::vector<std::uint32_t> sorted = members;
    std::sort(sorted.begin(), sorted.end());
    std::uint64_t seed = m.noise_seed;
    for (std::uint32_t e : sorted) seed = mix_seed(seed, e + 1);
    Rng stream(seed);

    const std::size_t k = members.size();
    const double inv_tau = 1.0 / m.gauss.temps.tau;
    std::vector<double> lo(k * d), hi(k * d);
    std::vector<double> ilo(d), ihi(d);
    double total = 0.0;
    for (std::size_t s = 0; s < m.gauss.n_samples; ++s) {
      for (std::size_t i = 0; i < k; ++i) {
        const std::uint32_t e = members[i];
        for (std::size_t j = 0; j < d; ++j) {
          const double sig = softplus(m.gauss.raw_sigma[e * d + j]);
          const double rad = softplus(m.gauss.raw_radius[e * d + j]);
          const double c = m.gauss.mu_center[e * d + j] + sig * stream.normal();
          lo[i * d + j] = c - rad;
          hi[i * d + j] = c + rad;
        }
      }
      for (std::size_t mask = 0; mask < (std::size_t{1} << nf); ++mask) {
        for (std::size_t j = 0; j < d; ++j) {
          ilo[j] = lo[j];
          ihi[j] = hi[j];
        }
        for (std::size_t i = 1; i < q.required_true.size(); ++i)
          for (std::size_t j = 0; j < d; ++j) {
            ilo[j] = vmax(ilo[j], lo[i * d + j]);
            ihi[j] = vmin(ihi[j], hi[i * d + j]);
          }
        for (std::size_t i = 0; i < nf; ++i)
          if (mask & (std::size_t{1} << i)) {
            const std::size_t row = q.required_true.size() + i;
            for (std::size_t j = 0; j < d; ++j) {
              ilo[j] = vmax(ilo[j], lo[row * d + j]);
              ihi[j] = vmin(ihi[j], hi[row * d + j]);
            }
          }
        double vol = 1.0;
        for (std::size_t j = 0; j < d; ++j)
          vol *= m.gauss.temps.tau * softplus((ihi[j] - ilo[j]) * inv_tau);
        total += std::popcount(mask) % 2 == 0 ? vol : -vol;
      }
    }
    return max0(total / static_cast<double>(m.gauss.n_samples));
  }

  std::vector<BoxCorners> corners;
  corners.reserve(q.required_true.size() + nf);
  for (std::uint32_t e : q.required_true) corners.push_back(decode_box(m.box, e));
  for (std::uint32_t e : q.required_false) corners.push_back(decode_box(m.box, e));

  const Temperatures& t = m.box.temps;
  const double inv_tau = 1.0 / t.tau;
  std::vector<double> mins, maxes;
  double total = 0.0;
  for (std::size_t mask = 0; mask < (std::size_t{1} << nf); ++mask) {
    double vol = 1.0;
    for (std::size_t j = 0; j < d; ++j) {
      mins.clear();
      maxes.clear();
      for (std::size_t i = 0; i < q.required_true.size(); ++i) {
        mins.push_back(corners[i].mn[j]);
        maxes.push_back(corners[i].mx[j]);
      }
      for (std::size_t i = 0; i < nf; ++i)
        if (mask & (std::size_t{1} << i)) {
          mins.push_back(corners[q.required_true.size() + i].mn[j]);
          maxes.push_back(corners[q.required_true.size() + i].mx[j]);
        }
      double lo, hi;
      if (m.kind == ModelKind::Gumbel && mins.size() > 1) {
        lo = soft_max_location(std::span<const double>(mins), t.beta);
        hi = soft_min_location(std::span<const double>(maxes), t.beta);
      } else {
        lo = mins[0];
        hi = maxes[0];
        for (std::size_t i = 1; i < mins.size(); ++i) {
          lo = vmax(lo, mins[i]);
          hi = vmin(hi, maxes[i]);
        }
      }
      vol *= side_length(hi - lo, m.kind, m.mode, t, inv_tau);
    }
    total += std::popcount(mask) % 2 == 0 ? vol : -vol;
  }
  return max0(total);
}

// Batched scoring over a decoded parameter snapshot. Per-entity volumes are
// hoisted so ranking a query against all n candidates is O(n * d).
class Scorer {
 public:
  explicit Scorer(const Model& m) : m_(&m) {
    detail::validate_temps(m.kind, m.mode, m.temps());
    if (m.kind != ModelKind::Gaussian) {
      db_ = decode_all(m.box);
      vols_.resize(db_.n);
      for (std::size_t e = 0; e < db_.n; ++e)
        vols_[e] = box_expected_volume_t(m.kind, m.mode, m.box.temps,
                                         db_.mn.data() + e * db_.d, db_.mx.data() + e * db_.d,
                                         db_.d);
    }
  }

  std::size_t n_entities() const { return m_->n_entities(); }

  // P(a|b), identical to conditional_probability on the same snapshot.
  double conditional(std::uint32_t a, std::uint32_t b) const {
    if (a == b) return 1.0;
    if (m_->kind == ModelKind::Gaussian) return conditional_probability(*m_, a, b);
    const double num =
        pair_intersection_volume_t(m_->kind, m_->mode, m_->box.temps, db_.mn.data() + a * db_.d,
                                   db_.mx.data() + a * db_.d, db_.mn.data() + b * db_.d,
                                   db_.mx.data() + b * db_.d, db_.d);
    const double den = vols_[b];
    if (!(den > 0.0)) return prob_floor;
    return clamp(num / den, prob_floor, prob_ceil);
  }

  // out[x] = P(x|b) for every entity x; out[b] = 1.
  void conditionals_given(std::uint32_t b, std::span<double> out) const {
    for (std::uint32_t x = 0; x < out.size(); ++x) out[x] = conditional(x, b);
  }

  // out[x] = P(a|x) for every entity x; out[a] = 1.
  void conditionals_of(std::uint32_t a, std::span<double> out) const {
    for (std::uint32_t x = 0; x < out.size(); ++x) out[x] = conditional(a, x);
  }

 private:
  const Model* m_;
  DecodedBoxes db_;
  std::vector<double> vols_;
};

} // namespace gumbelbox
