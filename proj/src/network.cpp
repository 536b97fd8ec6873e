#include "spikenn/network.hpp"

#include "spikenn/rng.hpp"

#include <cmath>

namespace spikenn {

LayerParams init_weights(const LayerSpec& spec, std::uint64_t seed,
                         Index layer_index) {
  LayerParams p;
  if (spec.kind == LayerKind::kAvgPool) {
    p.weights = Mat::Constant(1, 1, snap_to_grid(1.0 / (spec.pool * spec.pool)));
    p.biases = Vec::Zero(0);
    p.trainable = false;
    return p;
  }

  const Index fan_in = spec.fan_in();
  if (fan_in <= 0) throw ConfigError("init_weights: zero fan-in layer");
  const Index rows = spec.out_channels;
  const Index cols = fan_in;
  const Real bound = std::sqrt(6.0 / static_cast<Real>(fan_in));

  CounterRng rng(seed, 0x57e16000ULL + static_cast<std::uint64_t>(layer_index));
  p.weights.resize(rows, cols);
  std::uint64_t n = 0;
  for (Index r = 0; r < rows; ++r)
    for (Index c = 0; c < cols; ++c)
      p.weights(r, c) = snap_to_grid(rng.uniform(n++, -bound, bound));

  p.biases = Vec::Zero(rows);
  p.trainable = true;
  return p;
}

Network build_network(const NetworkConfig& cfg) {
  Network net;
  net.topo = parse_topology(cfg.topology);
  net.theta_ff = cfg.theta_ff;
  net.theta_bp = cfg.theta_bp;
  net.params.reserve(net.topo.layers.size());
  for (Index l = 0; l < static_cast<Index>(net.topo.layers.size()); ++l)
    net.params.push_back(init_weights(net.topo.layers[l], cfg.seed, l));
  return net;
}

GradientAccumulator GradientAccumulator::zeros_like(const Network& net) {
  GradientAccumulator g;
  g.dw.reserve(net.params.size());
  for (Index l = 0; l < net.layer_count(); ++l) {
    const LayerParams& p = net.params[l];
    g.dw.push_back(p.trainable ? Mat::Zero(p.weights.rows(), p.weights.cols())
                               : Mat());
  }
  return g;
}

void GradientAccumulator::add(const GradientAccumulator& other) {
  if (dw.size() != other.dw.size())
    throw InternalError("gradient accumulator layer count mismatch");
  for (std::size_t l = 0; l < dw.size(); ++l)
    if (dw[l].size() > 0) dw[l] += other.dw[l];
}

void GradientAccumulator::scale(Real s) {
  for (Mat& m : dw)
    if (m.size() > 0) m *= s;
}

void GradientAccumulator::clear() {
  for (Mat& m : dw)
    if (m.size() > 0) m.setZero();
}

void apply_updates(Network& net, const GradientAccumulator& grads, Real scale) {
  if (static_cast<Index>(grads.dw.size()) != net.layer_count())
    throw InternalError("apply_updates: layer count mismatch");
  for (Index l = 0; l < net.layer_count(); ++l) {
    LayerParams& p = net.params[l];
    if (!p.trainable || grads.dw[l].size() == 0) continue;
    if (grads.dw[l].rows() != p.weights.rows() ||
        grads.dw[l].cols() != p.weights.cols())
      throw InternalError("apply_updates: shape mismatch at layer " +
                          std::to_string(l));
    // Snap each weight back onto the grid; with scale = 1 the increments are
    // already grid-aligned and this is the identity.
    p.weights = (p.weights + scale * grads.dw[l])
                    .unaryExpr([](Real v) { return snap_to_grid(v); });
  }
}

}  // namespace spikenn
