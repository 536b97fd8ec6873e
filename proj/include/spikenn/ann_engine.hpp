#pragma once

#include "spikenn/layer_ops.hpp"
#include "spikenn/network.hpp"
#include "spikenn/types.hpp"

#include <utility>
#include <vector>

namespace spikenn {

// Accumulated-count forward results. numer[l] is the exact weighted sum
// w*S+b entering layer l's threshold; counts[l] the rounded spike counts.
// The last layer never spikes: counts/sprime stay empty there and
// numer.back() holds the raw logits.
struct IntegerActivations {
  Vec input;               // pixels (analog) or integer counts, grid-aligned
  std::vector<Vec> numer;
  std::vector<VecI> counts;
  std::vector<VecI> sprime;  // frozen {0,1} derivative per hidden layer

  const Vec& logits() const { return numer.back(); }
  // Pre-activation in threshold units for hidden layer l.
  Vec preact(Index l, Real theta_ff) const { return numer[l] / theta_ff; }
};

// Backward counterparts, indexed by the layer whose outputs carry the error.
// numer[L-1] is the injected top error; numer[l] = w^{l+1,T} * E^{l+1}.
struct IntegerErrors {
  std::vector<Vec> numer;
  std::vector<VecI> z;  // rounded counts
  std::vector<VecI> e;  // gated: e = sprime .* z (top layer: e = z)
};

// Quantized top-layer error alpha*(softmax(logits) - onehot(label)), snapped
// to the weight grid. Single code path for both engines so they integrate
// bit-identical values.
Vec top_error(const Vec& logits, int label, Real alpha);

// What the first weight layer actually sees: the image itself in analog mode,
// signed spike counts round(pixel * scale) otherwise. Shared by both engines.
Vec encode_input(const Vec& image, InputMode mode, int input_scale);

std::pair<Real, Vec> softmax_cross_entropy(const Vec& logits, int label);

IntegerActivations ann_forward_integer(const Network& net, const Vec& input,
                                       RoundingMode mode);

// Returns errors plus ready-to-apply weight increments -eta_eff * E (x) S.
std::pair<IntegerErrors, GradientAccumulator> ann_backward_integer(
    const Network& net, const IntegerActivations& acts, int label, Real alpha,
    Real eta_eff, RoundingMode mode);

// Float relaxation: identical dataflow with rounding replaced by identity.
struct FloatActivations {
  Vec input;
  std::vector<Vec> preact;  // (w*a+b)/theta_ff; last layer: raw logits
  std::vector<Vec> act;     // activation(preact); empty for last layer
  const Vec& logits() const { return preact.back(); }
};

FloatActivations ann_forward_float(const Network& net, const Vec& input);

// Plain loss gradients dL/dw of alpha-scaled softmax cross entropy, with the
// backward pass run through the same theta_bp-divided, surrogate-gated path
// the integer engine uses. No learning rate applied.
GradientAccumulator ann_backward_float(const Network& net,
                                       const FloatActivations& acts, int label,
                                       Real alpha);

}  // namespace spikenn
