#pragma once

#include "spikenn/types.hpp"

#include <cmath>
#include <cstdint>

namespace spikenn {

// How an accumulated potential is condensed into a whole spike count.
// kHalfAway rounds ties away from zero and is the default for both the
// forward and the backward pass; kFloor and kCeil exist so the two engines
// can be checked against each other under every supported convention.
enum class RoundingMode { kHalfAway, kFloor, kCeil };

// Accumulators above 2^33 have already lost the 2^-20 grid (2^33 * 2^20 =
// 2^53), so counts derived from them would be garbage, and the quotient
// below would overflow the int64 count domain. No sane run gets anywhere
// near this bound; crossing it means training diverged.
inline constexpr Real kMaxExactPotential = 0x1p33;

inline void check_potential(Real v, const char* what) {
  if (!(std::fabs(v) <= kMaxExactPotential))
    throw DivergenceError(std::string(what) + " " + std::to_string(v) +
                          " is outside the exact accumulation range");
}

// Integer quotient round(numerator / theta) under the given mode.
// Both operands must be exact multiples of kGrid (or of a finer dyadic grid),
// so the residue numerator - q * theta is computed exactly and tie decisions
// never depend on floating-point noise.
inline std::int64_t round_ratio(Real numerator, Real theta, RoundingMode mode) {
  check_potential(numerator, "potential");
  std::int64_t q = std::llround(numerator / theta);
  Real r = std::fma(static_cast<Real>(-q), theta, numerator);
  const Real half = 0.5 * theta;
  while (r > half) {
    q += 1;
    r -= theta;
  }
  while (r < -half) {
    q -= 1;
    r += theta;
  }
  switch (mode) {
    case RoundingMode::kHalfAway:
      if (r == half && q >= 0) q += 1;
      if (r == -half && q <= 0) q -= 1;
      break;
    case RoundingMode::kFloor:
      if (r < 0.0) q -= 1;
      break;
    case RoundingMode::kCeil:
      if (r > 0.0) q += 1;
      break;
  }
  return q;
}

// Final spike emitted when a neuron's leftover potential is flushed at the
// end of a pass. `count` is the number of whole spikes already emitted;
// rounding-to-nearest breaks the |v| == theta/2 tie toward the side the
// accumulated count already points to, which keeps the decision independent
// of the order events arrived in.
inline int residual_spike(Real v, std::int64_t count, Real theta,
                          RoundingMode mode) {
  const Real half = 0.5 * theta;
  switch (mode) {
    case RoundingMode::kHalfAway:
      if (v > half || (v == half && count >= 0)) return +1;
      if (v < -half || (v == -half && count <= 0)) return -1;
      return 0;
    case RoundingMode::kFloor:
      return v < 0.0 ? -1 : 0;
    case RoundingMode::kCeil:
      return v > 0.0 ? +1 : 0;
  }
  return 0;
}

}  // namespace spikenn
