#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "spikenn/rounding.hpp"
#include "spikenn/types.hpp"

#include <cstdint>
#include <limits>
#include <vector>

using namespace spikenn;

namespace {

std::int64_t floordiv(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) q -= 1;
  return q;
}

// Reference rounding of the rational a/b computed purely in integers.
std::int64_t rational_round(std::int64_t a, std::int64_t b, RoundingMode mode) {
  switch (mode) {
    case RoundingMode::kFloor:
      return floordiv(a, b);
    case RoundingMode::kCeil:
      return -floordiv(-a, b);
    case RoundingMode::kHalfAway: {
      const std::int64_t q = floordiv(a, b);
      const std::int64_t rem = a - q * b;  // in [0, b)
      if (2 * rem > b) return q + 1;
      if (2 * rem < b) return q;
      // Exact tie at q + 1/2; away from zero.
      return (2 * a > 0) ? q + 1 : q;
    }
  }
  return 0;
}

}  // namespace

TEST_CASE("grid snapping") {
  CHECK(snap_to_grid(0.0) == 0.0);
  CHECK(on_grid(snap_to_grid(0.3)));
  CHECK(snap_to_grid(0.3) == doctest::Approx(0.3).epsilon(1e-6));
  CHECK(std::abs(snap_to_grid(0.12345) - 0.12345) <= kGrid / 2);
  // Idempotent and sign-symmetric.
  CHECK(snap_to_grid(snap_to_grid(0.7071)) == snap_to_grid(0.7071));
  CHECK(snap_to_grid(-0.7071) == -snap_to_grid(0.7071));
  CHECK(on_grid(1.0));
  CHECK(on_grid(0.75));
  CHECK_FALSE(on_grid(0.3));
}

TEST_CASE("round_ratio matches the spelled-out cases") {
  CHECK(round_ratio(2.2, 1.0, RoundingMode::kHalfAway) == 2);
  CHECK(round_ratio(2.5, 1.0, RoundingMode::kHalfAway) == 3);
  CHECK(round_ratio(-2.5, 1.0, RoundingMode::kHalfAway) == -3);
  CHECK(round_ratio(2.5, 1.0, RoundingMode::kFloor) == 2);
  CHECK(round_ratio(-2.5, 1.0, RoundingMode::kFloor) == -3);
  CHECK(round_ratio(2.5, 1.0, RoundingMode::kCeil) == 3);
  CHECK(round_ratio(-2.5, 1.0, RoundingMode::kCeil) == -2);
  CHECK(round_ratio(0.0, 1.0, RoundingMode::kHalfAway) == 0);
  CHECK(round_ratio(1.1, 0.5, RoundingMode::kHalfAway) == 2);
  CHECK(round_ratio(0.75, 0.5, RoundingMode::kHalfAway) == 2);
  CHECK(round_ratio(-0.75, 0.5, RoundingMode::kHalfAway) == -2);
  CHECK(round_ratio(1.0, 0.5, RoundingMode::kFloor) == 2);
  CHECK(round_ratio(1.0, 0.5, RoundingMode::kCeil) == 2);
}

TEST_CASE("round_ratio equals integer rational rounding on the grid") {
  const std::vector<RoundingMode> modes = {
      RoundingMode::kHalfAway, RoundingMode::kFloor, RoundingMode::kCeil};
  // Small thresholds: theta = t * kGrid, numerator = i * kGrid.
  for (std::int64_t t : {1, 2, 3, 5, 8}) {
    for (std::int64_t i = -400; i <= 400; ++i) {
      for (RoundingMode m : modes) {
        CAPTURE(t);
        CAPTURE(i);
        REQUIRE(round_ratio(static_cast<Real>(i) * kGrid,
                            static_cast<Real>(t) * kGrid,
                            m) == rational_round(i, t, m));
      }
    }
  }
}

TEST_CASE("round_ratio at unit threshold, boundary scan") {
  const std::int64_t t = 1 << 20;  // theta = 1.0 in grid units
  const std::vector<RoundingMode> modes = {
      RoundingMode::kHalfAway, RoundingMode::kFloor, RoundingMode::kCeil};
  std::vector<std::int64_t> samples;
  for (std::int64_t q = -3; q <= 3; ++q) {
    for (std::int64_t d : {-1, 0, 1}) {
      samples.push_back(q * t + d);
      samples.push_back(q * t + t / 2 + d);
      samples.push_back(q * t - t / 2 + d);
    }
  }
  for (std::int64_t i = -3 * t; i <= 3 * t; i += 7777) samples.push_back(i);
  for (std::int64_t i : samples) {
    for (RoundingMode m : modes) {
      CAPTURE(i);
      REQUIRE(round_ratio(static_cast<Real>(i) * kGrid, 1.0, m) ==
              rational_round(i, t, m));
    }
  }
}

TEST_CASE("residual spike: worked cases") {
  // Count 3, half a threshold left: rounds up with the count's sign.
  CHECK(residual_spike(0.5, 3, 1.0, RoundingMode::kHalfAway) == +1);
  // Count -1, -0.6 thresholds left: clearly past the half boundary.
  CHECK(residual_spike(-0.6, -1, 1.0, RoundingMode::kHalfAway) == -1);
  // Tie against the count's sign resolves to no spike.
  CHECK(residual_spike(0.5, -3, 1.0, RoundingMode::kHalfAway) == 0);
  CHECK(residual_spike(-0.5, 3, 1.0, RoundingMode::kHalfAway) == 0);
  CHECK(residual_spike(0.2, 1, 1.0, RoundingMode::kHalfAway) == 0);
  CHECK(residual_spike(-0.3, 0, 1.0, RoundingMode::kFloor) == -1);
  CHECK(residual_spike(0.9, 0, 1.0, RoundingMode::kFloor) == 0);
  CHECK(residual_spike(0.3, 0, 1.0, RoundingMode::kCeil) == +1);
  CHECK(residual_spike(-0.9, 0, 1.0, RoundingMode::kCeil) == 0);
}

TEST_CASE("residual spike completes the count to the rounded total") {
  // For any in-band leftover v and emitted count S, the flushed count must
  // equal round((S*theta + v)/theta). This is the identity that makes the
  // event engine land exactly on the integer network's outputs.
  const std::vector<RoundingMode> modes = {
      RoundingMode::kHalfAway, RoundingMode::kFloor, RoundingMode::kCeil};
  for (Real theta : {1.0, 0.5, 0.75}) {
    for (std::int64_t count = -5; count <= 5; ++count) {
      for (int j = -7; j <= 7; ++j) {
        const Real v = static_cast<Real>(j) * theta / 8.0;
        for (RoundingMode m : modes) {
          CAPTURE(theta);
          CAPTURE(count);
          CAPTURE(v);
          const std::int64_t flushed =
              count + residual_spike(v, count, theta, m);
          REQUIRE(flushed ==
                  round_ratio(static_cast<Real>(count) * theta + v, theta, m));
        }
      }
    }
  }
}

TEST_CASE("potentials outside the exact accumulation range are rejected") {
  // Beyond 2^33 the 2^-20 grid no longer fits in a double's mantissa and the
  // count would not even fit the quotient domain; a diverged run must fail
  // loudly instead of spinning in the correction loop.
  CHECK(round_ratio(kMaxExactPotential, 1.0, RoundingMode::kHalfAway) ==
        static_cast<std::int64_t>(kMaxExactPotential));
  CHECK_THROWS_AS(round_ratio(1.2e20, 1.0, RoundingMode::kHalfAway),
                  DivergenceError);
  CHECK_THROWS_AS(round_ratio(-1.2e20, 1.0, RoundingMode::kFloor),
                  DivergenceError);
  CHECK_THROWS_AS(
      round_ratio(std::numeric_limits<Real>::quiet_NaN(), 1.0,
                  RoundingMode::kHalfAway),
      DivergenceError);
  CHECK_THROWS_AS(
      round_ratio(std::numeric_limits<Real>::infinity(), 1.0,
                  RoundingMode::kCeil),
      DivergenceError);
}
