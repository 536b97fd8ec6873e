#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace spikenn {

using Real = double;
using Index = Eigen::Index;
using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using VecI = Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1>;

// Every additively accumulated quantity (weights, biases, thresholds, traces,
// injected errors) lives on a fixed dyadic grid of spacing 2^-20. Sums of
// grid values are exact in double as long as |sum| * 2^20 stays below 2^53,
// which holds by orders of magnitude for every tensor in this code base.
// Exact sums are what make the event-driven and matrix engines agree down to
// the last bit regardless of accumulation order.
inline constexpr Real kGrid = 0x1p-20;
inline constexpr Real kGridInv = 0x1p+20;

inline Real snap_to_grid(Real v) {
  return std::nearbyint(v * kGridInv) * kGrid;
}

inline bool on_grid(Real v) { return v == snap_to_grid(v); }

// Exit-code contract: 2 config, 3 I/O, 4 shape, 5 divergence. Verification
// failures are reported through return values, not exceptions.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

class ShapeError : public std::runtime_error {
 public:
  explicit ShapeError(const std::string& msg) : std::runtime_error(msg) {}
};

class InternalError : public std::logic_error {
 public:
  explicit InternalError(const std::string& msg) : std::logic_error(msg) {}
};

// A potential or error accumulator left the range where grid sums are exact.
// Only reachable when training blows up; raised instead of emitting counts
// that no longer mean anything.
class DivergenceError : public std::runtime_error {
 public:
  explicit DivergenceError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace spikenn
