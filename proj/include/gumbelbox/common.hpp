#pragma once

namespace gumbelbox {

// Euler-Mascheroni constant, enough digits to round to the nearest double.
// It appears in both the exact expected-length asymptotics and the softplus
// approximation, so everything must share these exact bits.
inline constexpr double euler_gamma = 0.5772156649015329;

// softplus(t) switches to the identity above this argument: exp(-30) is far
// below rounding noise relative to the linear term.
inline constexpr double softplus_linear_arg = 30.0;

// Conditional probabilities are clamped to [prob_floor, prob_ceil] before
// entering any log loss. The floor is far below any probability the models
// can meaningfully distinguish; the ceiling keeps log(1-q) finite.
inline constexpr double prob_floor = 1e-38;
inline constexpr double prob_ceil = 1.0 - 1e-7;

} // namespace gumbelbox
