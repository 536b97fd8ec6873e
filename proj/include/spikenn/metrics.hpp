#pragma once

#include "spikenn/ann_engine.hpp"
#include "spikenn/event_engine.hpp"
#include "spikenn/network.hpp"
#include "spikenn/types.hpp"

#include <optional>
#include <string>
#include <vector>

namespace spikenn {

// Dense-equivalent multiply-accumulate count for one example through one
// weight layer: one MAC per connection.
long long mac_count(const LayerSpec& spec);

// Per-neuron spike ceiling n_max^l = floor(N_in * w_max * n_max^{l-1} /
// theta_ff), seeded with n_max^0 = input_max. Entry l is the bound for the
// outputs of layer l.
std::vector<long long> spike_count_ceilings(const Network& net,
                                            long long input_max);

// Actual lower bound from a run: sum_i |S_i| for one layer.
long long spike_count_min(const VecI& counts);

// (n_min, n_max) for one layer: n_min from the activations of an actual run,
// n_max layer-wide (per-neuron ceiling times neuron count).
std::pair<long long, long long> spike_count_bounds(
    const Network& net, Index layer, long long input_max,
    const IntegerActivations& acts);

// (n - n_min)/n_min; nullopt when n_min == 0. n < n_min is impossible.
std::optional<Real> redundancy_ratio(long long n, long long n_min);

// Synaptic-operation tallies per weight layer, one pass each; `counted`
// marks layers included in network means (analog first layer and pooling
// excluded).
struct OpCounters {
  std::vector<long long> forward_acc;
  std::vector<long long> backward_acc;
  std::vector<long long> mac;
  std::vector<long long> forward_spikes;   // emissions per neuron layer
  std::vector<long long> backward_spikes;
  std::vector<bool> counted;

  void resize(const Network& net, bool analog_first_layer);
  void merge(const OpCounters& other);
};

// ACC/MAC per weight layer plus the mean over counted layers.
struct RelOps {
  std::vector<Real> per_layer;
  Real mean = 0.0;
};

RelOps relative_backprop_ops(const OpCounters& counters);
RelOps relative_forward_ops(const OpCounters& counters);

// Backward ACC counts derived from integer-ANN error counts (|E| per neuron
// times synapses traversed), the fast path used for epoch logging.
OpCounters counters_from_ann(const Network& net, const IntegerActivations& acts,
                             const IntegerErrors& errs, bool analog_first);

// One CSV row per (epoch, layer, phase).
struct SparsityRow {
  int epoch = 0;
  Index layer = 0;
  std::string phase;  // "forward" | "backward"
  long long acc_ops = 0;
  long long mac_ops = 0;
  Real rel_ops = 0.0;
  long long n_min = 0;
  long long n_max = 0;
  std::optional<Real> redundancy;
};

std::string sparsity_csv_header();
std::string to_csv(const SparsityRow& row);

}  // namespace spikenn
