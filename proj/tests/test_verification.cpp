#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "spikenn/verification.hpp"

#include "spikenn/rng.hpp"

#include <algorithm>

using namespace spikenn;

TEST_CASE("random trials are a pure function of the seed") {
  const RandomTrial a = make_random_trial(42);
  const RandomTrial b = make_random_trial(42);
  CHECK(a.cfg.topology == b.cfg.topology);
  CHECK(a.label == b.label);
  CHECK(a.input == b.input);
  for (Index l = 0; l < a.net.layer_count(); ++l)
    CHECK(a.net.params[l].weights == b.net.params[l].weights);

  const RandomTrial c = make_random_trial(43);
  const bool same_input = a.cfg.topology == c.cfg.topology &&
                          a.input.size() == c.input.size() &&
                          a.input == c.input;
  CHECK_FALSE(same_input);
}

TEST_CASE("event and integer engines agree bit for bit") {
  EquivalenceOptions opt;
  opt.trials = 60;
  opt.seed = 7;
  const EquivalenceReport rep = check_equivalence(opt);
  CHECK(rep.pass);
  CHECK(rep.trials == 60);
  CHECK(rep.failures == 0);
  CHECK(rep.detail.empty());
  REQUIRE_FALSE(rep.max_ds.empty());
  CHECK(*std::max_element(rep.max_ds.begin(), rep.max_ds.end()) == 0);
  CHECK(*std::max_element(rep.max_dz.begin(), rep.max_dz.end()) == 0);
  CHECK(rep.max_dw_rel == 0.0);
}

TEST_CASE("without residual flushes every deviation stays below one spike") {
  EquivalenceOptions opt;
  opt.trials = 25;
  opt.seed = 11;
  opt.residual = false;
  const EquivalenceReport rep = check_equivalence(opt);
  CHECK(rep.pass);
  CHECK(rep.failures == 0);
}

TEST_CASE("a deliberately skewed rounding mode fails loudly") {
  EquivalenceOptions opt;
  opt.trials = 8;
  opt.seed = 5;
  opt.inject_fault = true;
  const EquivalenceReport rep = check_equivalence(opt);
  CHECK_FALSE(rep.pass);
  CHECK(rep.failures > 0);
  CHECK_FALSE(rep.detail.empty());
  CHECK(rep.counterexample_seed != 0);
}

TEST_CASE("results do not depend on event pop order") {
  for (std::uint64_t k = 0; k < 6; ++k) {
    const RandomTrial trial = make_random_trial(0x0d0e0000ULL + k);
    CAPTURE(trial.cfg.topology);
    CHECK(order_invariance_check(trial.net, trial.cfg, trial.input,
                                 trial.label, 5, 1234 + k));
  }
}

TEST_CASE("spike-path gradients track finite differences of the loss") {
  NetworkConfig cfg;
  cfg.topology = "20-16-10";
  cfg.seed = 21;
  Network net = build_network(cfg);

  CounterRng rng(6, 0xf00d);
  Vec image(20);
  for (Index i = 0; i < image.size(); ++i)
    image[i] = snap_to_grid(rng.uniform(static_cast<std::uint64_t>(i),
                                        -1.0, 1.0));

  SUBCASE("relu hidden layer") {
    CHECK(gradcheck(net, image, 3, 40, 77) < 1e-4);
  }
  SUBCASE("linear hidden layer shrinks the gap further") {
    net.topo.layers[0].activation = Activation::kLinear;
    CHECK(gradcheck(net, image, 3, 40, 77) < 1e-5);
  }
}
