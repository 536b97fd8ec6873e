#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "spikenn/metrics.hpp"

#include <cmath>

using namespace spikenn;

TEST_CASE("dense MAC counts per layer") {
  NetworkConfig cfg;
  cfg.topology = "28x28-15C5-P2-40C5-P2-300-10";
  const Network net = build_network(cfg);
  // Same-padded convs keep the spatial size; pools halve it.
  // conv1: 28*28 positions x 15 filters x 25 taps
  CHECK(mac_count(net.spec(0)) == 28LL * 28 * 15 * 25);
  // pool1: 14*14 outputs x 4 taps per channel
  CHECK(mac_count(net.spec(1)) == 15LL * 14 * 14 * 4);
  // conv2: 14*14 x 40 filters x (15*25) taps
  CHECK(mac_count(net.spec(2)) == 14LL * 14 * 40 * 15 * 25);
  CHECK(mac_count(net.spec(3)) == 40LL * 7 * 7 * 4);
  // fc: 40*7*7 -> 300 and 300 -> 10
  CHECK(mac_count(net.spec(4)) == 1960LL * 300);
  CHECK(mac_count(net.spec(5)) == 300LL * 10);
}

TEST_CASE("spike ceilings follow the fan-in recursion") {
  NetworkConfig cfg;
  cfg.topology = "4-3-2";
  Network net = build_network(cfg);
  const Real w = snap_to_grid(0.6);
  net.params[0].weights.setConstant(w);
  net.params[1].weights.setConstant(w);

  const auto caps = spike_count_ceilings(net, 5);
  REQUIRE(caps.size() == 2);
  // layer 0: floor(4 * 0.6 * 5 / 1) with the snapped weight
  CHECK(caps[0] == static_cast<long long>(std::floor(4.0 * w * 5.0)));
  CHECK(caps[0] == 12);
  CHECK(caps[1] == static_cast<long long>(std::floor(3.0 * w * 12.0)));
  CHECK(caps[1] == 21);
}

TEST_CASE("pooling passes the ceiling through unchanged") {
  NetworkConfig cfg;
  cfg.topology = "4x4-2C3-P2-5";
  const Network net = build_network(cfg);
  const auto caps = spike_count_ceilings(net, 7);
  REQUIRE(caps.size() == 3);
  // Pool fan-in p^2 times weight 1/p^2 leaves the bound alone.
  CHECK(caps[1] == caps[0]);
}

TEST_CASE("observed counts give n_min; bounds multiply out per layer") {
  NetworkConfig cfg;
  cfg.topology = "3-2-2";
  cfg.input_mode = InputMode::kSpikeEncoded;
  cfg.input_scale = 4;
  Network net = build_network(cfg);
  net.topo.layers[0].activation = Activation::kLinear;
  net.params[0].weights << 1.0, 0.5, 0.0, -0.5, 0.25, 0.25;
  net.params[0].biases.setZero();

  VecI counts(3);
  counts << 2, -3, 0;
  CHECK(spike_count_min(counts) == 5);

  Vec image(3);
  image << 1.0, -0.75, 0.25;
  const Vec encoded = encode_input(image, cfg.input_mode, cfg.input_scale);
  const IntegerActivations acts =
      ann_forward_integer(net, encoded, cfg.rounding_mode);

  const auto [n_min, n_max] = spike_count_bounds(net, 0, 4, acts);
  CHECK(n_min == spike_count_min(acts.counts[0]));
  const auto caps = spike_count_ceilings(net, 4);
  CHECK(n_max == caps[0] * 2);  // 2 neurons in layer 0
  CHECK(n_min <= n_max);
}

TEST_CASE("redundancy is extra spikes over the minimum") {
  const auto r = redundancy_ratio(1035, 1000);
  REQUIRE(r.has_value());
  CHECK(*r == doctest::Approx(0.035).epsilon(1e-12));
  CHECK(redundancy_ratio(1000, 1000) == 0.0);
  CHECK_FALSE(redundancy_ratio(3, 0).has_value());
  CHECK_THROWS_AS(redundancy_ratio(2, 5), InternalError);
}

TEST_CASE("ANN-side counters measure synapse touches per pass") {
  NetworkConfig cfg;
  cfg.topology = "2-2-2";
  cfg.input_mode = InputMode::kSpikeEncoded;
  cfg.input_scale = 1;
  cfg.alpha = 4.0;
  cfg.eta = 0.05;
  Network net = build_network(cfg);
  net.topo.layers[0].activation = Activation::kLinear;
  net.params[0].weights << 1.0, 0.0, 0.0, 1.0;
  net.params[0].biases.setZero();
  net.params[1].weights << 1.0, 0.0, 0.0, 1.0;
  net.params[1].biases.setZero();

  Vec image(2);
  image << 1.0, 0.0;
  const Vec encoded = encode_input(image, cfg.input_mode, cfg.input_scale);
  const IntegerActivations acts =
      ann_forward_integer(net, encoded, cfg.rounding_mode);
  const auto [errs, grads] = ann_backward_integer(
      net, acts, 0, cfg.alpha, cfg.eta_effective(), cfg.rounding_mode);

  OpCounters ops = counters_from_ann(net, acts, errs, false);
  REQUIRE(ops.forward_acc.size() == 2);
  // One input spike and one hidden spike each cross 2 synapses.
  CHECK(ops.forward_acc[0] == 2);
  CHECK(ops.forward_acc[1] == 2);
  // Two error spikes per layer, fan-in 2 each.
  CHECK(ops.backward_acc[1] == 4);
  CHECK(ops.backward_acc[0] == 4);
  CHECK(ops.mac[0] == 4);
  CHECK(ops.mac[1] == 4);
  CHECK(ops.counted[0]);
  CHECK(ops.counted[1]);

  const RelOps bp = relative_backprop_ops(ops);
  CHECK(bp.per_layer[0] == 1.0);
  CHECK(bp.per_layer[1] == 1.0);
  CHECK(bp.mean == 1.0);

  SUBCASE("merge sums everything; analog first layer is not counted") {
    OpCounters twice = ops;
    twice.merge(ops);
    CHECK(twice.forward_acc[0] == 4);
    CHECK(twice.backward_acc[1] == 8);
    CHECK(twice.mac[0] == 8);

    OpCounters analog;
    analog.resize(net, true);
    CHECK_FALSE(analog.counted[0]);
    CHECK(analog.counted[1]);
  }
}

TEST_CASE("sparsity CSV schema is pinned") {
  CHECK(sparsity_csv_header() ==
        "epoch,layer,phase,acc_ops,mac_ops,rel_ops,n_min,n_max,redundancy");
  SparsityRow row;
  row.epoch = 3;
  row.layer = 1;
  row.phase = "backward";
  row.acc_ops = 120;
  row.mac_ops = 400;
  row.rel_ops = 0.3;
  row.n_min = 10;
  row.n_max = 64;
  row.redundancy = 0.25;
  CHECK(to_csv(row) == "3,1,backward,120,400,0.3,10,64,0.25");
  row.redundancy.reset();
  CHECK(to_csv(row) == "3,1,backward,120,400,0.3,10,64,na");
}
