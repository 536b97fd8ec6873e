#pragma once

#include "spikenn/ann_engine.hpp"
#include "spikenn/config.hpp"
#include "spikenn/network.hpp"
#include "spikenn/rng.hpp"
#include "spikenn/types.hpp"

#include <cstdint>
#include <vector>

namespace spikenn {

enum class Phase : std::uint8_t {
  kForward,
  kBackward,
  kResidualForward,
  kResidualBackward
};

const char* to_string(Phase p);

// `layer` is the neuron layer that emitted the spike; -1 marks input events
// in spike_encoded mode. sign is never 0: a zero outcome emits no event.
struct SpikeEvent {
  std::int32_t layer = 0;
  std::int32_t neuron = 0;
  std::int8_t sign = 0;
  Phase phase = Phase::kForward;
};

// Per-layer operation and emission counters; synapse touches are attributed
// to the weight layer the spike traverses.
struct EventTrace {
  std::vector<long long> forward_events;  // per neuron layer, incl. residual
  std::vector<long long> backward_events;
  std::vector<long long> forward_acc;  // per weight layer
  std::vector<long long> backward_acc;
  bool keep_log = false;
  std::vector<SpikeEvent> log;

  void resize(Index layers);
  void merge(const EventTrace& other);
};

// Pending-event pop order. Results (S, Z, traces, weight increments) are
// invariant to it; only emission counts and log order change.
enum class OrderPolicy { kStack, kShuffled };

struct RunOptions {
  bool train = false;
  bool residual = true;  // disable to expose pre-residual discretization error
  OrderPolicy order = OrderPolicy::kStack;
  std::uint64_t order_seed = 0;
  EventTrace* trace = nullptr;
};

struct RunResult {
  int prediction = 0;
  Vec logits;
  GradientAccumulator grads;  // filled when train
};

// One-example state of every integrate-and-fire neuron, grouped per layer.
struct LayerState {
  Vec v;                           // forward integrator
  Vec u;                           // error integrator
  Vec x;                           // trace, always eta_eff * s
  VecI s;                          // accumulated forward spikes
  VecI z;                          // accumulated (ungated) error spikes
  std::vector<std::uint8_t> sprime;
};

class EventEngine {
 public:
  EventEngine(const Network& net, const NetworkConfig& cfg);

  RunResult run_example(const Vec& input, int label, const RunOptions& opt);

  // Post-run inspection (equivalence and SDE audits).
  const LayerState& state(Index layer) const { return states_[layer]; }
  const Vec& input_trace() const { return input_trace_; }
  const Vec& driven_input() const { return driven_input_; }

 private:
  void reset(const Vec& input);
  void drive_input(const Vec& input);
  void deliver_forward(const SpikeEvent& ev);
  void deliver_backward(const SpikeEvent& ev);
  void fire_forward(Index layer, Index neuron, Phase phase);
  void fire_backward(Index layer, Index neuron, Phase phase);
  void emit(const SpikeEvent& ev);
  void drain_queue();
  void residual_flush_forward(Index layer);
  void residual_flush_backward(Index layer);
  void freeze_sprime();
  void inject_top_layer_error(const Vec& logits, int label);
  void weight_updates_for_error(Index layer, Index neuron, int delta);

  const Network* net_;
  Real theta_ff_, theta_bp_, alpha_, eta_eff_;
  RoundingMode rounding_;
  InputMode input_mode_;
  int input_scale_;

  std::vector<LayerState> states_;
  Vec input_trace_;  // eta_eff * driven input, for first-layer updates
  Vec driven_input_;
  std::vector<SpikeEvent> queue_;
  bool backward_phase_ = false;
  EventTrace* trace_ = nullptr;
  RunOptions opts_;
  GradientAccumulator* grads_ = nullptr;
  std::uint64_t pop_counter_ = 0;
};

}  // namespace spikenn
