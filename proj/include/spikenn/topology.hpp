#pragma once

#include "spikenn/activation.hpp"
#include "spikenn/types.hpp"

#include <string>
#include <vector>

namespace spikenn {

enum class LayerKind { kFullyConnected, kConvolution, kAvgPool };

struct Shape {
  Index channels = 1;
  Index height = 1;
  Index width = 1;

  Index count() const { return channels * height * width; }
  bool operator==(const Shape&) const = default;
};

struct LayerSpec {
  LayerKind kind = LayerKind::kFullyConnected;
  Activation activation = Activation::kRelu;
  Shape in_shape, out_shape;
  Index out_channels = 0;  // conv: output channels; fc: output units
  Index kernel = 0;        // conv kernel edge
  Index stride = 1;
  Index pad = 0;
  Index pool = 0;  // avg_pool edge (stride = pool)

  // Inputs feeding one output neuron.
  Index fan_in() const {
    switch (kind) {
      case LayerKind::kFullyConnected:
        return in_shape.count();
      case LayerKind::kConvolution:
        return in_shape.channels * kernel * kernel;
      case LayerKind::kAvgPool:
        return pool * pool;
    }
    return 0;
  }

  bool trainable() const { return kind != LayerKind::kAvgPool; }
};

struct Topology {
  Shape input;
  std::vector<LayerSpec> layers;
};

// Grammar: <input> ( - ( <n>C<k> | P<p> | <n> ) )+ where <input> is
// <H>x<W>[x<C>] or a bare unit count. Trainable layers get ReLU except the
// last layer of the network, which is linear; pooling is always linear.
// Throws ConfigError with the offending token position on malformed input.
Topology parse_topology(const std::string& s);

// Canonical string form; parse_topology(format_topology(t)) reproduces t.
std::string format_topology(const Topology& t);

}  // namespace spikenn
