#include "spikenn/event_engine.hpp"

#include "spikenn/activation.hpp"
#include "spikenn/layer_ops.hpp"
#include "spikenn/rounding.hpp"

#include <cmath>

namespace spikenn {

const char* to_string(Phase p) {
  switch (p) {
    case Phase::kForward: return "forward";
    case Phase::kBackward: return "backward";
    case Phase::kResidualForward: return "residual_forward";
    case Phase::kResidualBackward: return "residual_backward";
  }
  return "?";
}

void EventTrace::resize(Index layers) {
  forward_events.assign(layers, 0);
  backward_events.assign(layers, 0);
  forward_acc.assign(layers, 0);
  backward_acc.assign(layers, 0);
}

void EventTrace::merge(const EventTrace& other) {
  if (forward_events.size() < other.forward_events.size()) {
    forward_events.resize(other.forward_events.size(), 0);
    backward_events.resize(other.backward_events.size(), 0);
    forward_acc.resize(other.forward_acc.size(), 0);
    backward_acc.resize(other.backward_acc.size(), 0);
  }
  for (std::size_t l = 0; l < other.forward_events.size(); ++l) {
    forward_events[l] += other.forward_events[l];
    backward_events[l] += other.backward_events[l];
    forward_acc[l] += other.forward_acc[l];
    backward_acc[l] += other.backward_acc[l];
  }
}

namespace {

inline Index flat(const Shape& s, Index c, Index y, Index x) {
  return (c * s.height + y) * s.width + x;
}

}  // namespace

EventEngine::EventEngine(const Network& net, const NetworkConfig& cfg)
    : net_(&net),
      theta_ff_(cfg.theta_ff),
      theta_bp_(cfg.theta_bp),
      alpha_(cfg.alpha),
      eta_eff_(cfg.eta_effective()),
      rounding_(cfg.rounding_mode),
      input_mode_(cfg.input_mode),
      input_scale_(cfg.input_scale) {
  states_.resize(net.layer_count());
}

void EventEngine::reset(const Vec& input) {
  const Index L = net_->layer_count();
  for (Index l = 0; l < L; ++l) {
    const LayerSpec& spec = net_->spec(l);
    const Index n = spec.out_shape.count();
    LayerState& st = states_[l];
    st.v.resize(n);
    if (spec.kind == LayerKind::kConvolution) {
      const Index positions = spec.out_shape.height * spec.out_shape.width;
      for (Index oc = 0; oc < spec.out_shape.channels; ++oc)
        st.v.segment(oc * positions, positions)
            .setConstant(net_->params[l].biases[oc]);
    } else if (spec.kind == LayerKind::kFullyConnected) {
      st.v = net_->params[l].biases;
    } else {
      st.v.setZero();
    }
    st.u = Vec::Zero(n);
    st.x = Vec::Zero(n);
    st.s = VecI::Zero(n);
    st.z = VecI::Zero(n);
    st.sprime.assign(n, 1);
  }
  driven_input_ = input;
  input_trace_ = Vec::Zero(input.size());
  queue_.clear();
  backward_phase_ = false;
  pop_counter_ = 0;
}

void EventEngine::emit(const SpikeEvent& ev) {
  queue_.push_back(ev);
  if (trace_) {
    const bool forward = ev.phase == Phase::kForward ||
                         ev.phase == Phase::kResidualForward;
    if (forward) {
      trace_->forward_events[ev.layer] += 1;
    } else {
      trace_->backward_events[ev.layer] += 1;
      // Emitter-side op count: an error spike touches every synapse of its
      // own weight layer (transposed read plus increment write, tallied as
      // one op per synapse).
      trace_->backward_acc[ev.layer] += net_->spec(ev.layer).fan_in();
    }
    if (trace_->keep_log) trace_->log.push_back(ev);
  }
}

void EventEngine::drain_queue() {
  CounterRng rng(opts_.order_seed, 0x0d7a1ULL);
  while (!queue_.empty()) {
    std::size_t pick = queue_.size() - 1;
    if (opts_.order == OrderPolicy::kShuffled)
      pick = static_cast<std::size_t>(
          rng.below(pop_counter_++, queue_.size()));
    SpikeEvent ev = queue_[pick];
    queue_[pick] = queue_.back();
    queue_.pop_back();
    if (ev.phase == Phase::kForward || ev.phase == Phase::kResidualForward)
      deliver_forward(ev);
    else
      deliver_backward(ev);
  }
}

void EventEngine::fire_forward(Index layer, Index neuron, Phase phase) {
  const LayerSpec& spec = net_->spec(layer);
  LayerState& st = states_[layer];
  check_potential(st.v[neuron], "membrane potential");
  int s;
  while ((s = spike_activation(spec.activation, st.v[neuron], st.x[neuron],
                               theta_ff_)) != 0) {
    st.v[neuron] -= s * theta_ff_;
    st.x[neuron] += s * eta_eff_;
    st.s[neuron] += s;
    emit({static_cast<std::int32_t>(layer), static_cast<std::int32_t>(neuron),
          static_cast<std::int8_t>(s), phase});
  }
}

void EventEngine::deliver_forward(const SpikeEvent& ev) {
  const Index target = ev.layer + 1;
  if (target >= net_->layer_count()) return;  // logits layer emitted nothing
  const LayerSpec& spec = net_->spec(target);
  const Mat& w = net_->params[target].weights;
  LayerState& st = states_[target];
  const Real sign = ev.sign;
  const bool top = target == net_->layer_count() - 1;

  switch (spec.kind) {
    case LayerKind::kFullyConnected: {
      st.v += sign * w.col(ev.neuron);
      if (trace_) trace_->forward_acc[target] += w.rows();
      if (top) return;
      for (Index i = 0; i < st.v.size(); ++i)
        fire_forward(target, i, Phase::kForward);
      return;
    }
    case LayerKind::kConvolution: {
      const Shape& in = spec.in_shape;
      const Shape& out = spec.out_shape;
      const Index k = spec.kernel;
      const Index ci = ev.neuron / (in.height * in.width);
      const Index y = (ev.neuron / in.width) % in.height;
      const Index x = ev.neuron % in.width;
      if (trace_) trace_->forward_acc[target] += out.channels * k * k;
      for (Index ky = 0; ky < k; ++ky) {
        const Index oy = y - ky + spec.pad;
        if (oy < 0 || oy >= out.height) continue;
        for (Index kx = 0; kx < k; ++kx) {
          const Index ox = x - kx + spec.pad;
          if (ox < 0 || ox >= out.width) continue;
          const Index col = (ci * k + ky) * k + kx;
          for (Index oc = 0; oc < out.channels; ++oc) {
            const Index i = flat(out, oc, oy, ox);
            st.v[i] += sign * w(oc, col);
            if (!top) fire_forward(target, i, Phase::kForward);
          }
        }
      }
      return;
    }
    case LayerKind::kAvgPool: {
      const Shape& in = spec.in_shape;
      const Shape& out = spec.out_shape;
      const Index c = ev.neuron / (in.height * in.width);
      const Index y = (ev.neuron / in.width) % in.height;
      const Index x = ev.neuron % in.width;
      const Index i = flat(out, c, y / spec.pool, x / spec.pool);
      st.v[i] += sign * w(0, 0);
      if (trace_) trace_->forward_acc[target] += 1;
      if (!top) fire_forward(target, i, Phase::kForward);
      return;
    }
  }
}

void EventEngine::drive_input(const Vec& input) {
  if (input_mode_ == InputMode::kAnalogFirstLayer) {
    // The single multiplicative step: first-layer potentials integrate the
    // full weighted image at once, then the layer spikes normally.
    const LayerSpec& spec = net_->spec(0);
    states_[0].v = forward_numerator(spec, net_->params[0], input);
    input_trace_ = eta_eff_ * input;
    if (trace_)
      trace_->forward_acc[0] +=
          static_cast<long long>(spec.fan_in()) * spec.out_shape.count();
    if (net_->layer_count() > 1) {
      for (Index i = 0; i < states_[0].v.size(); ++i)
        fire_forward(0, i, Phase::kForward);
    }
    return;
  }

  // Unary spike encoding: round(pixel * K) events per pixel, signed.
  Vec counts = encode_input(input, InputMode::kSpikeEncoded, input_scale_);
  for (Index j = 0; j < counts.size(); ++j) {
    const long long c = static_cast<long long>(counts[j]);
    const std::int8_t sign = c >= 0 ? 1 : -1;
    for (long long r = 0; r < std::llabs(c); ++r)
      queue_.push_back({-1, static_cast<std::int32_t>(j), sign,
                        Phase::kForward});
  }
  driven_input_ = counts;
  input_trace_ = eta_eff_ * counts;
}

void EventEngine::residual_flush_forward(Index layer) {
  const LayerSpec& spec = net_->spec(layer);
  LayerState& st = states_[layer];
  for (Index i = 0; i < st.v.size(); ++i) {
    int r = residual_spike(st.v[i], st.s[i], theta_ff_, rounding_);
    // A ReLU neuron that never built a positive trace cannot take back
    // output it never emitted.
    if (r < 0 && spec.activation == Activation::kRelu && !(st.x[i] > 0.0))
      r = 0;
    if (r == 0) continue;
    st.v[i] -= r * theta_ff_;
    st.x[i] += r * eta_eff_;
    st.s[i] += r;
    emit({static_cast<std::int32_t>(layer), static_cast<std::int32_t>(i),
          static_cast<std::int8_t>(r), Phase::kResidualForward});
  }
  drain_queue();
}

void EventEngine::freeze_sprime() {
  for (Index l = 0; l < net_->layer_count() - 1; ++l) {
    const LayerSpec& spec = net_->spec(l);
    LayerState& st = states_[l];
    for (Index i = 0; i < st.v.size(); ++i)
      st.sprime[i] = static_cast<std::uint8_t>(
          surrogate_derivative(spec.activation, st.v[i], st.x[i]));
  }
  // Top layer stays all ones (linear).
}

void EventEngine::weight_updates_for_error(Index layer, Index neuron,
                                           int delta) {
  if (!grads_ || !net_->params[layer].trainable) return;
  Mat& dw = grads_->dw[layer];
  const Vec& x_below = layer == 0 ? input_trace_ : states_[layer - 1].x;
  const LayerSpec& spec = net_->spec(layer);
  const Real d = delta;

  if (spec.kind == LayerKind::kFullyConnected) {
    dw.row(neuron) -= d * x_below.transpose();
    return;
  }

  const Shape& in = spec.in_shape;
  const Shape& out = spec.out_shape;
  const Index k = spec.kernel;
  const Index positions = out.height * out.width;
  const Index oc = neuron / positions;
  const Index oy = (neuron / out.width) % out.height;
  const Index ox = neuron % out.width;
  for (Index ci = 0; ci < in.channels; ++ci)
    for (Index ky = 0; ky < k; ++ky) {
      const Index y = oy + ky - spec.pad;
      if (y < 0 || y >= in.height) continue;
      for (Index kx = 0; kx < k; ++kx) {
        const Index x = ox + kx - spec.pad;
        if (x < 0 || x >= in.width) continue;
        dw(oc, (ci * k + ky) * k + kx) -= d * x_below[flat(in, ci, y, x)];
      }
    }
}

void EventEngine::fire_backward(Index layer, Index neuron, Phase phase) {
  LayerState& st = states_[layer];
  check_potential(st.u[neuron], "error potential");
  int z;
  while ((z = error_spike_activation(st.u[neuron], theta_bp_)) != 0) {
    st.u[neuron] -= z * theta_bp_;
    st.z[neuron] += z;
    const int delta = z * st.sprime[neuron];
    if (delta == 0) continue;  // gated: count advanced, nothing transmitted
    weight_updates_for_error(layer, neuron, delta);
    emit({static_cast<std::int32_t>(layer), static_cast<std::int32_t>(neuron),
          static_cast<std::int8_t>(delta), phase});
  }
}

void EventEngine::deliver_backward(const SpikeEvent& ev) {
  if (ev.layer == 0) return;  // nothing below the first layer
  const Index source = ev.layer;       // weight layer the error crosses
  const Index target = ev.layer - 1;   // neuron layer receiving it
  const LayerSpec& spec = net_->spec(source);
  const Mat& w = net_->params[source].weights;
  LayerState& st = states_[target];
  const Real sign = ev.sign;

  switch (spec.kind) {
    case LayerKind::kFullyConnected: {
      st.u += sign * w.row(ev.neuron).transpose();
      for (Index j = 0; j < st.u.size(); ++j)
        fire_backward(target, j, Phase::kBackward);
      return;
    }
    case LayerKind::kConvolution: {
      const Shape& in = spec.in_shape;
      const Shape& out = spec.out_shape;
      const Index k = spec.kernel;
      const Index positions = out.height * out.width;
      const Index oc = ev.neuron / positions;
      const Index oy = (ev.neuron / out.width) % out.height;
      const Index ox = ev.neuron % out.width;
      for (Index ci = 0; ci < in.channels; ++ci)
        for (Index ky = 0; ky < k; ++ky) {
          const Index y = oy + ky - spec.pad;
          if (y < 0 || y >= in.height) continue;
          for (Index kx = 0; kx < k; ++kx) {
            const Index x = ox + kx - spec.pad;
            if (x < 0 || x >= in.width) continue;
            const Index j = flat(in, ci, y, x);
            st.u[j] += sign * w(oc, (ci * k + ky) * k + kx);
            fire_backward(target, j, Phase::kBackward);
          }
        }
      return;
    }
    case LayerKind::kAvgPool: {
      const Shape& in = spec.in_shape;
      const Shape& out = spec.out_shape;
      const Index c = ev.neuron / (out.height * out.width);
      const Index oy = (ev.neuron / out.width) % out.height;
      const Index ox = ev.neuron % out.width;
      for (Index dy = 0; dy < spec.pool; ++dy)
        for (Index dx = 0; dx < spec.pool; ++dx) {
          const Index j = flat(in, c, oy * spec.pool + dy, ox * spec.pool + dx);
          st.u[j] += sign * w(0, 0);
          fire_backward(target, j, Phase::kBackward);
        }
      return;
    }
  }
}

void EventEngine::inject_top_layer_error(const Vec& logits, int label) {
  const Index top = net_->layer_count() - 1;
  Vec u0 = top_error(logits, label, alpha_);
  LayerState& st = states_[top];
  for (Index i = 0; i < u0.size(); ++i) {
    st.u[i] += u0[i];
    fire_backward(top, i, Phase::kBackward);
  }
  drain_queue();
}

void EventEngine::residual_flush_backward(Index layer) {
  LayerState& st = states_[layer];
  for (Index i = 0; i < st.u.size(); ++i) {
    const int r = residual_spike(st.u[i], st.z[i], theta_bp_, rounding_);
    if (r == 0) continue;
    st.u[i] -= r * theta_bp_;
    st.z[i] += r;
    const int delta = r * st.sprime[i];
    if (delta == 0) continue;
    weight_updates_for_error(layer, i, delta);
    emit({static_cast<std::int32_t>(layer), static_cast<std::int32_t>(i),
          static_cast<std::int8_t>(delta), Phase::kResidualBackward});
  }
  drain_queue();
}

RunResult EventEngine::run_example(const Vec& input, int label,
                                   const RunOptions& opt) {
  if (input.size() != net_->topo.input.count())
    throw ShapeError("run_example: input size mismatch");
  const Index L = net_->layer_count();
  opts_ = opt;
  trace_ = opt.trace;
  if (trace_ && trace_->forward_events.size() !=
                    static_cast<std::size_t>(L))
    trace_->resize(L);

  reset(input);
  drive_input(input);
  drain_queue();
  if (opt.residual)
    for (Index l = 0; l + 1 < L; ++l) residual_flush_forward(l);

  RunResult res;
  res.logits = states_[L - 1].v;
  res.prediction = 0;
  for (Index i = 1; i < res.logits.size(); ++i)
    if (res.logits[i] > res.logits[res.prediction])
      res.prediction = static_cast<int>(i);

  if (opt.train) {
    freeze_sprime();
    res.grads = GradientAccumulator::zeros_like(*net_);
    grads_ = &res.grads;
    backward_phase_ = true;
    inject_top_layer_error(res.logits, label);
    if (opt.residual)
      for (Index l = L - 1; l >= 0; --l) residual_flush_backward(l);
    grads_ = nullptr;
  }
  trace_ = nullptr;
  return res;
}

}  // namespace spikenn
