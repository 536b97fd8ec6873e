#include "spikenn/topology.hpp"

#include <charconv>
#include <sstream>

namespace spikenn {

namespace {

Index parse_count(const std::string& tok, std::size_t pos,
                  const std::string& what) {
  Index v = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size() || v <= 0) {
    throw ConfigError("topology: bad " + what + " '" + tok + "' at position " +
                      std::to_string(pos));
  }
  return v;
}

Shape parse_input_shape(const std::string& tok) {
  std::vector<Index> dims;
  std::size_t start = 0;
  while (start <= tok.size()) {
    std::size_t stop = tok.find('x', start);
    if (stop == std::string::npos) stop = tok.size();
    dims.push_back(parse_count(tok.substr(start, stop - start), start,
                               "input dimension"));
    if (stop == tok.size()) break;
    start = stop + 1;
  }
  if (dims.size() == 1) return Shape{1, 1, dims[0]};
  if (dims.size() == 2) return Shape{1, dims[0], dims[1]};
  if (dims.size() == 3) return Shape{dims[2], dims[0], dims[1]};
  throw ConfigError("topology: input shape '" + tok +
                    "' has more than three dimensions");
}

}  // namespace

Topology parse_topology(const std::string& s) {
  if (s.empty()) throw ConfigError("topology: empty string");

  std::vector<std::pair<std::string, std::size_t>> tokens;
  std::size_t start = 0;
  while (start <= s.size()) {
    std::size_t stop = s.find('-', start);
    if (stop == std::string::npos) stop = s.size();
    if (stop == start)
      throw ConfigError("topology: empty token at position " +
                        std::to_string(start));
    tokens.emplace_back(s.substr(start, stop - start), start);
    if (stop == s.size()) break;
    start = stop + 1;
  }
  if (tokens.size() < 2)
    throw ConfigError("topology: need an input shape and at least one layer");

  Topology topo;
  topo.input = parse_input_shape(tokens[0].first);

  Shape cur = topo.input;
  for (std::size_t t = 1; t < tokens.size(); ++t) {
    const auto& [tok, pos] = tokens[t];
    LayerSpec spec;
    spec.in_shape = cur;

    std::size_t c = tok.find('C');
    if (c != std::string::npos) {
      spec.kind = LayerKind::kConvolution;
      spec.out_channels = parse_count(tok.substr(0, c), pos, "channel count");
      spec.kernel = parse_count(tok.substr(c + 1), pos + c + 1, "kernel size");
      if (spec.kernel % 2 == 0)
        throw ConfigError("topology: kernel size must be odd for same-size "
                          "padding, got '" + tok + "'");
      spec.stride = 1;
      spec.pad = spec.kernel / 2;
      spec.out_shape = Shape{spec.out_channels, cur.height, cur.width};
    } else if (!tok.empty() && tok[0] == 'P') {
      spec.kind = LayerKind::kAvgPool;
      spec.pool = parse_count(tok.substr(1), pos + 1, "pool size");
      if (cur.height % spec.pool != 0 || cur.width % spec.pool != 0)
        throw ConfigError("topology: pool " + std::to_string(spec.pool) +
                          " does not divide " + std::to_string(cur.height) +
                          "x" + std::to_string(cur.width) + " at position " +
                          std::to_string(pos));
      spec.activation = Activation::kLinear;
      spec.stride = spec.pool;
      spec.out_shape =
          Shape{cur.channels, cur.height / spec.pool, cur.width / spec.pool};
    } else {
      spec.kind = LayerKind::kFullyConnected;
      spec.out_channels = parse_count(tok, pos, "unit count");
      spec.out_shape = Shape{1, 1, spec.out_channels};
    }
    cur = spec.out_shape;
    topo.layers.push_back(spec);
  }

  if (!topo.layers.back().trainable())
    throw ConfigError("topology: last layer must be trainable, got pooling");
  topo.layers.back().activation = Activation::kLinear;
  return topo;
}

std::string format_topology(const Topology& t) {
  std::ostringstream out;
  const Shape& in = t.input;
  if (in.channels == 1 && in.height == 1)
    out << in.width;
  else if (in.channels == 1)
    out << in.height << 'x' << in.width;
  else
    out << in.height << 'x' << in.width << 'x' << in.channels;

  for (const LayerSpec& l : t.layers) {
    out << '-';
    switch (l.kind) {
      case LayerKind::kConvolution:
        out << l.out_channels << 'C' << l.kernel;
        break;
      case LayerKind::kAvgPool:
        out << 'P' << l.pool;
        break;
      case LayerKind::kFullyConnected:
        out << l.out_channels;
        break;
    }
  }
  return out.str();
}

}  // namespace spikenn
