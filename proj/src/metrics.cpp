#include "spikenn/metrics.hpp"

#include "spikenn/layer_ops.hpp"

#include <cmath>
#include <sstream>

namespace spikenn {

long long mac_count(const LayerSpec& spec) {
  return static_cast<long long>(spec.out_shape.count()) * spec.fan_in();
}

std::vector<long long> spike_count_ceilings(const Network& net,
                                            long long input_max) {
  std::vector<long long> ceilings(net.layer_count());
  Real prev = static_cast<Real>(input_max);
  for (Index l = 0; l < net.layer_count(); ++l) {
    const LayerSpec& spec = net.spec(l);
    const Real w_max = max_abs_weight(spec, net.params[l]);
    const Real bound = static_cast<Real>(spec.fan_in()) * w_max * prev /
                       net.theta_ff;
    ceilings[l] = static_cast<long long>(std::floor(bound));
    prev = static_cast<Real>(ceilings[l]);
  }
  return ceilings;
}

long long spike_count_min(const VecI& counts) {
  long long total = 0;
  for (Index i = 0; i < counts.size(); ++i) total += std::llabs(counts[i]);
  return total;
}

std::pair<long long, long long> spike_count_bounds(
    const Network& net, Index layer, long long input_max,
    const IntegerActivations& acts) {
  const std::vector<long long> ceilings = spike_count_ceilings(net, input_max);
  const long long n_min =
      layer + 1 < net.layer_count() ? spike_count_min(acts.counts[layer]) : 0;
  const long long n_max =
      ceilings[layer] * static_cast<long long>(net.out_shape(layer).count());
  return {n_min, n_max};
}

std::optional<Real> redundancy_ratio(long long n, long long n_min) {
  if (n < n_min)
    throw InternalError("redundancy_ratio: n < n_min");
  if (n_min == 0) return std::nullopt;
  return static_cast<Real>(n - n_min) / static_cast<Real>(n_min);
}

void OpCounters::resize(const Network& net, bool analog_first_layer) {
  const std::size_t L = static_cast<std::size_t>(net.layer_count());
  forward_acc.assign(L, 0);
  backward_acc.assign(L, 0);
  mac.assign(L, 0);
  forward_spikes.assign(L, 0);
  backward_spikes.assign(L, 0);
  counted.assign(L, true);
  for (std::size_t l = 0; l < L; ++l) {
    mac[l] = mac_count(net.spec(l));
    if (net.spec(l).kind == LayerKind::kAvgPool) counted[l] = false;
  }
  if (analog_first_layer && !counted.empty()) counted[0] = false;
}

void OpCounters::merge(const OpCounters& other) {
  if (forward_acc.size() != other.forward_acc.size())
    throw InternalError("op counter layer mismatch");
  for (std::size_t l = 0; l < forward_acc.size(); ++l) {
    forward_acc[l] += other.forward_acc[l];
    backward_acc[l] += other.backward_acc[l];
    mac[l] += other.mac[l];
    forward_spikes[l] += other.forward_spikes[l];
    backward_spikes[l] += other.backward_spikes[l];
  }
}

namespace {

RelOps rel_ops_from(const std::vector<long long>& acc,
                    const std::vector<long long>& mac,
                    const std::vector<bool>& counted) {
  RelOps r;
  r.per_layer.resize(acc.size(), 0.0);
  Real sum = 0.0;
  int n = 0;
  for (std::size_t l = 0; l < acc.size(); ++l) {
    r.per_layer[l] = mac[l] > 0
                         ? static_cast<Real>(acc[l]) / static_cast<Real>(mac[l])
                         : 0.0;
    if (counted[l]) {
      sum += r.per_layer[l];
      n += 1;
    }
  }
  r.mean = n > 0 ? sum / n : 0.0;
  return r;
}

}  // namespace

RelOps relative_backprop_ops(const OpCounters& c) {
  return rel_ops_from(c.backward_acc, c.mac, c.counted);
}

RelOps relative_forward_ops(const OpCounters& c) {
  return rel_ops_from(c.forward_acc, c.mac, c.counted);
}

OpCounters counters_from_ann(const Network& net,
                             const IntegerActivations& acts,
                             const IntegerErrors& errs, bool analog_first) {
  // Fast-path tallies: |S| and |E| stand in for emitted events (the minimal
  // event count), times the synapses each would traverse.
  OpCounters c;
  c.resize(net, analog_first);
  const Index L = net.layer_count();

  for (Index l = 0; l < L; ++l) {
    const LayerSpec& spec = net.spec(l);
    // Forward: spikes from below cross weight layer l.
    if (l == 0) {
      if (analog_first) {
        c.forward_acc[0] = mac_count(spec);  // dense analog integration
      } else {
        long long n0 = 0;
        for (Index j = 0; j < acts.input.size(); ++j)
          n0 += std::llabs(static_cast<long long>(acts.input[j]));
        // Unclipped fan-out per input event: fc exact; conv out_c*k*k.
        c.forward_acc[0] =
            n0 * mac_count(spec) / std::max<Index>(spec.in_shape.count(), 1);
      }
    } else {
      const long long n_below = spike_count_min(acts.counts[l - 1]);
      c.forward_acc[l] =
          n_below * mac_count(spec) / std::max<Index>(spec.in_shape.count(), 1);
    }
    if (l + 1 < L) c.forward_spikes[l] = spike_count_min(acts.counts[l]);

    // Backward: error spikes of layer l cross weight layer l downward.
    long long e_abs = 0;
    for (Index i = 0; i < errs.e[l].size(); ++i)
      e_abs += std::llabs(errs.e[l][i]);
    c.backward_spikes[l] = e_abs;
    c.backward_acc[l] =
        e_abs * mac_count(spec) / std::max<Index>(spec.out_shape.count(), 1);
  }
  return c;
}

std::string sparsity_csv_header() {
  return "epoch,layer,phase,acc_ops,mac_ops,rel_ops,n_min,n_max,redundancy";
}

std::string to_csv(const SparsityRow& row) {
  std::ostringstream out;
  out.precision(10);
  out << row.epoch << ',' << row.layer << ',' << row.phase << ','
      << row.acc_ops << ',' << row.mac_ops << ',' << row.rel_ops << ','
      << row.n_min << ',' << row.n_max << ',';
  if (row.redundancy)
    out << *row.redundancy;
  else
    out << "na";
  return out.str();
}

}  // namespace spikenn
