#pragma once

#include "spikenn/types.hpp"

#include <cstdint>

namespace spikenn {

enum class Activation { kLinear, kRelu };

// Ternary spike decision for a linear integrate-and-fire neuron. Returns the
// sign of the spike to emit now, or 0 while the potential is inside the band.
template <typename Scalar>
inline int spike_activation_linear(Scalar v, Scalar theta) {
  if (v >= theta) return +1;
  if (v <= -theta) return -1;
  return 0;
}

// Rectified variant: negative spikes are only allowed while the trace is
// positive (the neuron has emitted output to take back), so the cumulative
// activation never drops below zero.
template <typename Scalar>
inline int spike_activation_relu(Scalar v, Scalar x, Scalar theta) {
  if (v >= theta) return +1;
  if (v <= -theta && x > Scalar(0)) return -1;
  return 0;
}

inline int spike_activation(Activation act, Real v, Real x, Real theta) {
  return act == Activation::kRelu ? spike_activation_relu(v, x, theta)
                                  : spike_activation_linear(v, theta);
}

// Error-compartment spike decision; both signs always allowed.
template <typename Scalar>
inline int error_spike_activation(Scalar u, Scalar theta_bp) {
  return spike_activation_linear(u, theta_bp);
}

// Spike-count derivative surrogate, frozen once per example after the forward
// pass settles. `v_final` is the membrane potential after the residual flush
// and `x_final` the trace; for ReLU both being non-positive means the neuron
// sat at or below zero drive the whole pass.
inline int surrogate_derivative(Activation act, Real v_final, Real x_final) {
  if (act == Activation::kLinear) return 1;
  return (v_final > 0.0 || x_final > 0.0) ? 1 : 0;
}

}  // namespace spikenn
