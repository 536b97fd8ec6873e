#pragma once

#include "spikenn/config.hpp"
#include "spikenn/network.hpp"
#include "spikenn/types.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace spikenn {

// Cross-engine comparison over randomized small networks.
struct EquivalenceReport {
  int trials = 0;
  int failures = 0;
  std::vector<std::int64_t> max_ds;  // per layer depth, across all trials
  std::vector<std::int64_t> max_dz;
  Real max_dw_rel = 0.0;
  bool pass = false;
  std::uint64_t counterexample_seed = 0;
  std::string detail;  // first failure description
};

struct EquivalenceOptions {
  int trials = 1000;
  std::uint64_t seed = 7;
  bool shuffle_events = true;   // randomize event pop order per trial
  bool residual = true;         // off: expect sub-1 deviations, not equality
  bool inject_fault = false;    // test hook: skews ANN rounding (see source)
  Real dw_rel_tol = 1e-9;
};

EquivalenceReport check_equivalence(const EquivalenceOptions& opt);

// Pre-residual spike discretization error, one event-engine run vs the exact
// accumulated-value forward/backward. All entries must be < 1.
struct SdeReport {
  std::vector<Real> forward;   // per hidden layer: max |S_exact - S_counts|
  std::vector<Real> backward;  // per layer: max |Z_exact - Z_counts|
  bool within_bounds = true;
  // ReLU neurons with non-positive drive must show exactly zero error.
  bool relu_zero_case_ok = true;
  int relu_zero_cases = 0;
};

SdeReport sde_audit(const Network& net, const NetworkConfig& cfg,
                    const Vec& input, int label);

// Re-runs one example under `permutations` random event orders; true iff
// post-residual S and Z are identical across all of them.
bool order_invariance_check(const Network& net, const NetworkConfig& cfg,
                            const Vec& input, int label, int permutations,
                            std::uint64_t seed);

// Central finite differences on sampled weight coordinates of the float
// engine; returns max relative error over coordinates that do not cross a
// surrogate switching surface. alpha fixed to 1 and theta_bp = theta_ff so
// the backward dataflow is the true loss gradient.
Real gradcheck(Network& net, const Vec& input, int label, int coords,
               std::uint64_t seed);

// Randomized test fixtures shared by the verify command and the test suite:
// 2-4 layers, <= 32 neurons per layer, mixed linear/ReLU fully connected
// stacks (optionally with a conv/pool head), weights in [-2 theta, 2 theta].
struct RandomTrial {
  Network net;
  NetworkConfig cfg;
  Vec input;
  int label;
};

RandomTrial make_random_trial(std::uint64_t seed);

}  // namespace spikenn
