#pragma once

#include "spikenn/config.hpp"
#include "spikenn/topology.hpp"
#include "spikenn/types.hpp"

#include <cstdint>
#include <vector>

namespace spikenn {

// Weight layouts:
//   fully connected: (out_units, in_units)
//   convolution:     (out_channels, in_channels*k*k), column (ci*k + ky)*k + kx
//   avg_pool:        1x1 matrix holding 1/(pool*pool), never trained
// Spatial tensors flatten to vectors as index (c*H + y)*W + x.
struct LayerParams {
  Mat weights;
  Vec biases;
  bool trainable = true;
};

struct Network {
  Topology topo;
  std::vector<LayerParams> params;
  Real theta_ff = 1.0;
  Real theta_bp = 1.0;

  Index layer_count() const { return static_cast<Index>(topo.layers.size()); }
  const LayerSpec& spec(Index l) const { return topo.layers[l]; }
  const Shape& in_shape(Index l) const { return topo.layers[l].in_shape; }
  const Shape& out_shape(Index l) const { return topo.layers[l].out_shape; }
};

// Pure function of (spec, seed, layer_index); weights uniform in
// [-sqrt(6/fan_in), +sqrt(6/fan_in)] snapped to the grid, biases zero.
LayerParams init_weights(const LayerSpec& spec, std::uint64_t seed,
                         Index layer_index);

Network build_network(const NetworkConfig& cfg);

// Per-layer weight increments, shaped like the trainable weights (empty
// matrices for pooling). Both engines produce their updates in this form.
struct GradientAccumulator {
  std::vector<Mat> dw;

  static GradientAccumulator zeros_like(const Network& net);
  void add(const GradientAccumulator& other);
  void scale(Real s);
  void clear();
};

// w += increments (optionally scaled), snapped back onto the weight grid.
// Pooling layers are never touched.
void apply_updates(Network& net, const GradientAccumulator& grads,
                   Real scale = 1.0);

}  // namespace spikenn
