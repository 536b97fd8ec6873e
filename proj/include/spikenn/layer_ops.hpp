#pragma once

#include "spikenn/network.hpp"
#include "spikenn/types.hpp"

namespace spikenn {

// Dense per-example primitives shared by both engines. Everything here is a
// sum of products of grid-aligned factors, so results are exact doubles and
// independent of summation order; the event engine reproduces them term by
// term.

// Patch matrix for convolution: (in_channels*k*k, outH*outW); zero padding.
void im2col(const LayerSpec& spec, const Vec& input, Mat& patches);

// w * act + b for any layer kind (pooling uses the fixed 1/(p*p) weight).
// `act` is the flattened input activation vector of the layer.
Vec forward_numerator(const LayerSpec& spec, const LayerParams& params,
                      const Vec& act);

// w^T * err: error mass pushed down to the layer's inputs (transposed
// correlation for conv, error/(p*p) broadcast for pooling). No bias term.
Vec backward_numerator(const LayerSpec& spec, const LayerParams& params,
                       const Vec& err);

// grad += scale * (err outer act) in the layer's weight layout; conv
// accumulates over output positions. No-op for pooling.
void accumulate_weight_grad(const LayerSpec& spec, const Vec& err,
                            const Vec& act, Real scale, Mat& grad);

// Largest |w| of the layer (pooling: 1/(p*p)).
Real max_abs_weight(const LayerSpec& spec, const LayerParams& params);

}  // namespace spikenn
