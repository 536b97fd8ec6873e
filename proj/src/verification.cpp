#include "spikenn/verification.hpp"

#include "spikenn/ann_engine.hpp"
#include "spikenn/data_io.hpp"
#include "spikenn/event_engine.hpp"
#include "spikenn/layer_ops.hpp"
#include "spikenn/rng.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace spikenn {

namespace {

// Stateful draw helper over one counter stream.
struct Draw {
  CounterRng rng;
  std::uint64_t n = 0;
  explicit Draw(std::uint64_t seed, std::uint64_t stream)
      : rng(seed, stream) {}
  Real uniform(Real lo, Real hi) { return rng.uniform(n++, lo, hi); }
  std::uint64_t below(std::uint64_t k) { return rng.below(n++, k); }
};

}  // namespace

RandomTrial make_random_trial(std::uint64_t seed) {
  Draw d(seed, 0x7e57a11ULL);
  RandomTrial trial;
  NetworkConfig& cfg = trial.cfg;

  cfg.theta_ff = snap_to_grid(d.uniform(0.5, 2.0));
  cfg.theta_bp = snap_to_grid(d.uniform(0.5, 2.0));
  cfg.alpha = d.uniform(2.0, 120.0);
  cfg.eta = d.uniform(0.002, 0.2);
  cfg.batch_size = 1;

  const Real mode_roll = d.uniform(0.0, 1.0);
  cfg.rounding_mode = mode_roll < 0.7    ? RoundingMode::kHalfAway
                      : mode_roll < 0.85 ? RoundingMode::kFloor
                                         : RoundingMode::kCeil;
  cfg.input_mode = d.uniform(0.0, 1.0) < 0.75 ? InputMode::kAnalogFirstLayer
                                              : InputMode::kSpikeEncoded;
  cfg.input_scale = 4 + static_cast<int>(d.below(28));

  std::ostringstream topo;
  if (d.uniform(0.0, 1.0) < 0.35) {
    // Small conv head: exercises convolution, pooling and flatten paths.
    const Index side = 6 + 2 * static_cast<Index>(d.below(2));  // 6 or 8
    const Index in_ch = 1 + static_cast<Index>(d.below(2));
    if (in_ch == 1)
      topo << side << 'x' << side;
    else
      topo << side << 'x' << side << 'x' << in_ch;
    topo << '-' << (2 + d.below(3)) << "C3";
    if (d.uniform(0.0, 1.0) < 0.5) topo << "-P2";
    topo << '-' << (3 + d.below(10));
    if (d.uniform(0.0, 1.0) < 0.5) topo << '-' << (2 + d.below(6));
  } else {
    topo << (3 + d.below(18));
    const int layers = 2 + static_cast<int>(d.below(3));
    for (int l = 0; l < layers; ++l) topo << '-' << (3 + d.below(30));
  }
  cfg.topology = topo.str();

  trial.net = build_network(cfg);
  Network& net = trial.net;

  // Deliberately wide weights (beyond one threshold) and nonzero biases.
  for (Index l = 0; l < net.layer_count(); ++l) {
    LayerParams& p = net.params[l];
    if (!p.trainable) continue;
    const Real wb = 2.0 * cfg.theta_ff;
    for (Index r = 0; r < p.weights.rows(); ++r)
      for (Index c = 0; c < p.weights.cols(); ++c)
        p.weights(r, c) = snap_to_grid(d.uniform(-wb, wb));
    for (Index i = 0; i < p.biases.size(); ++i)
      p.biases[i] = snap_to_grid(d.uniform(-0.5 * cfg.theta_ff,
                                           0.5 * cfg.theta_ff));
    // Half the hidden layers run linear instead of ReLU.
    if (l + 1 < net.layer_count() &&
        net.topo.layers[l].kind != LayerKind::kAvgPool &&
        d.uniform(0.0, 1.0) < 0.5)
      net.topo.layers[l].activation = Activation::kLinear;
  }

  const bool negatives = d.uniform(0.0, 1.0) < 0.25;
  trial.input.resize(net.topo.input.count());
  for (Index i = 0; i < trial.input.size(); ++i)
    trial.input[i] =
        snap_input(d.uniform(negatives ? -0.5 : 0.0, 1.0));
  trial.label = static_cast<int>(
      d.below(net.topo.layers.back().out_shape.count()));
  return trial;
}

namespace {

struct TrialComparison {
  std::vector<std::int64_t> ds, dz;
  Real dw_rel = 0.0;
  bool logits_equal = true;
};

TrialComparison compare_engines(const RandomTrial& trial, bool shuffle,
                                std::uint64_t order_seed, bool inject_fault) {
  const Network& net = trial.net;
  const NetworkConfig& cfg = trial.cfg;
  const Index L = net.layer_count();

  EventEngine engine(net, cfg);
  RunOptions opt;
  opt.train = true;
  opt.order = shuffle ? OrderPolicy::kShuffled : OrderPolicy::kStack;
  opt.order_seed = order_seed;
  RunResult res = engine.run_example(trial.input, trial.label, opt);

  RoundingMode ann_mode = cfg.rounding_mode;
  if (inject_fault)
    ann_mode = ann_mode == RoundingMode::kFloor ? RoundingMode::kCeil
                                                : RoundingMode::kFloor;

  const Vec encoded =
      encode_input(trial.input, cfg.input_mode, cfg.input_scale);
  IntegerActivations acts = ann_forward_integer(net, encoded, ann_mode);
  auto [errs, grads] = ann_backward_integer(net, acts, trial.label, cfg.alpha,
                                            cfg.eta_effective(), ann_mode);

  TrialComparison cmp;
  cmp.ds.assign(L, 0);
  cmp.dz.assign(L, 0);
  cmp.logits_equal = (res.logits - acts.logits()).cwiseAbs().maxCoeff() == 0.0;

  for (Index l = 0; l < L; ++l) {
    if (l + 1 < L) {
      const VecI& se = engine.state(l).s;
      for (Index i = 0; i < se.size(); ++i)
        cmp.ds[l] = std::max(cmp.ds[l], std::abs(se[i] - acts.counts[l][i]));
    }
    const VecI& ze = engine.state(l).z;
    for (Index i = 0; i < ze.size(); ++i)
      cmp.dz[l] = std::max(cmp.dz[l], std::abs(ze[i] - errs.z[l][i]));
    if (net.params[l].trainable && res.grads.dw[l].size() > 0) {
      const Real diff =
          (res.grads.dw[l] - grads.dw[l]).cwiseAbs().maxCoeff();
      const Real scale =
          std::max({grads.dw[l].cwiseAbs().maxCoeff(), 1e-30});
      cmp.dw_rel = std::max(cmp.dw_rel, diff / std::max(scale, 1.0e-30));
    }
  }
  return cmp;
}

}  // namespace

EquivalenceReport check_equivalence(const EquivalenceOptions& opt) {
  if (opt.trials < 1)
    throw ConfigError("check_equivalence: trials must be >= 1");

  EquivalenceReport rep;
  rep.trials = opt.trials;

  if (!opt.residual) {
    // Residual flush off: the engines may legitimately differ, but only by
    // strictly less than one spike per neuron (the discretization bound).
    Real worst = 0.0;
    bool any_nonzero = false;
    for (int t = 0; t < opt.trials; ++t) {
      const std::uint64_t trial_seed = splitmix64(opt.seed + t);
      RandomTrial trial = make_random_trial(trial_seed);
      SdeReport sde = sde_audit(trial.net, trial.cfg, trial.input, trial.label);
      for (Real v : sde.forward) {
        worst = std::max(worst, v);
        if (v > 0) any_nonzero = true;
      }
      for (Real v : sde.backward) worst = std::max(worst, v);
      if (!sde.within_bounds || !sde.relu_zero_case_ok) {
        rep.failures += 1;
        if (rep.failures == 1) {
          rep.counterexample_seed = trial_seed;
          rep.detail = "discretization bound violated";
        }
      }
    }
    rep.pass = rep.failures == 0 && worst < 1.0 && any_nonzero;
    if (!any_nonzero) rep.detail = "no nonzero deviation seen (suspicious)";
    return rep;
  }

  for (int t = 0; t < opt.trials; ++t) {
    const std::uint64_t trial_seed = splitmix64(opt.seed + t);
    RandomTrial trial = make_random_trial(trial_seed);
    TrialComparison cmp = compare_engines(trial, opt.shuffle_events,
                                          trial_seed, opt.inject_fault);

    if (rep.max_ds.size() < cmp.ds.size()) {
      rep.max_ds.resize(cmp.ds.size(), 0);
      rep.max_dz.resize(cmp.dz.size(), 0);
    }
    bool bad = !cmp.logits_equal;
    for (std::size_t l = 0; l < cmp.ds.size(); ++l) {
      rep.max_ds[l] = std::max(rep.max_ds[l], cmp.ds[l]);
      rep.max_dz[l] = std::max(rep.max_dz[l], cmp.dz[l]);
      if (cmp.ds[l] != 0 || cmp.dz[l] != 0) bad = true;
    }
    rep.max_dw_rel = std::max(rep.max_dw_rel, cmp.dw_rel);
    if (cmp.dw_rel > opt.dw_rel_tol) bad = true;

    if (bad) {
      rep.failures += 1;
      if (rep.failures == 1) {
        rep.counterexample_seed = trial_seed;
        std::ostringstream msg;
        msg << "trial " << t << " (seed " << trial_seed << ", topology "
            << trial.cfg.topology << ", "
            << to_string(trial.cfg.rounding_mode) << "): max |dS|="
            << *std::max_element(cmp.ds.begin(), cmp.ds.end())
            << " max |dZ|="
            << *std::max_element(cmp.dz.begin(), cmp.dz.end())
            << " dw_rel=" << cmp.dw_rel
            << (cmp.logits_equal ? "" : " logits differ");
        rep.detail = msg.str();
      }
    }
  }
  rep.pass = rep.failures == 0;
  return rep;
}

SdeReport sde_audit(const Network& net, const NetworkConfig& cfg,
                    const Vec& input, int label) {
  const Index L = net.layer_count();
  EventEngine engine(net, cfg);
  RunOptions opt;
  opt.train = true;
  opt.residual = false;
  engine.run_example(input, label, opt);

  SdeReport rep;
  rep.forward.assign(L, 0.0);
  rep.backward.assign(L, 0.0);

  // Forward: the exact accumulated value for each layer, computed from the
  // event engine's own (pre-residual) counts below it.
  Vec prev = engine.driven_input();
  for (Index l = 0; l + 1 < L; ++l) {
    const LayerSpec& spec = net.spec(l);
    Vec numer = forward_numerator(spec, net.params[l], prev);
    const VecI& s = engine.state(l).s;
    const Vec& v = engine.state(l).v;
    for (Index i = 0; i < numer.size(); ++i) {
      Real exact = numer[i] / net.theta_ff;
      if (spec.activation == Activation::kRelu) {
        if (exact <= 0.0 && v[i] <= 0.0) {
          rep.relu_zero_cases += 1;
          if (s[i] != 0) rep.relu_zero_case_ok = false;
        }
        exact = std::max(exact, 0.0);
      }
      rep.forward[l] =
          std::max(rep.forward[l], std::abs(exact - static_cast<Real>(s[i])));
    }
    prev = s.cast<Real>();
  }

  // Backward: exact error values from the event engine's own gated counts.
  Vec upper_e;
  for (Index l = L - 1; l >= 0; --l) {
    Vec numer;
    if (l == L - 1) {
      numer = top_error(engine.state(L - 1).v, label, cfg.alpha);
    } else {
      numer = backward_numerator(net.spec(l + 1), net.params[l + 1], upper_e);
    }
    const LayerState& st = engine.state(l);
    for (Index i = 0; i < numer.size(); ++i)
      rep.backward[l] = std::max(
          rep.backward[l],
          std::abs(numer[i] / net.theta_bp - static_cast<Real>(st.z[i])));
    upper_e.resize(st.z.size());
    for (Index i = 0; i < st.z.size(); ++i)
      upper_e[i] = static_cast<Real>(st.z[i] * st.sprime[i]);
  }

  for (Real v : rep.forward)
    if (!(v < 1.0)) rep.within_bounds = false;
  for (Real v : rep.backward)
    if (!(v < 1.0)) rep.within_bounds = false;
  return rep;
}

bool order_invariance_check(const Network& net, const NetworkConfig& cfg,
                            const Vec& input, int label, int permutations,
                            std::uint64_t seed) {
  if (permutations < 2)
    throw ConfigError("order_invariance_check: need >= 2 permutations");

  EventEngine engine(net, cfg);
  std::vector<VecI> base_s, base_z;
  for (int p = 0; p < permutations; ++p) {
    RunOptions opt;
    opt.train = true;
    opt.order = p == 0 ? OrderPolicy::kStack : OrderPolicy::kShuffled;
    opt.order_seed = splitmix64(seed + p);
    engine.run_example(input, label, opt);
    if (p == 0) {
      for (Index l = 0; l < net.layer_count(); ++l) {
        base_s.push_back(engine.state(l).s);
        base_z.push_back(engine.state(l).z);
      }
      continue;
    }
    for (Index l = 0; l < net.layer_count(); ++l) {
      if (engine.state(l).s != base_s[l]) return false;
      if (engine.state(l).z != base_z[l]) return false;
    }
  }
  return true;
}

Real gradcheck(Network& net, const Vec& input, int label, int coords,
               std::uint64_t seed) {
  if (coords < 1) throw ConfigError("gradcheck: coords must be >= 1");

  // True-loss configuration: unscaled error, symmetric thresholds.
  const Real alpha = 1.0;
  const Real saved_bp = net.theta_bp;
  net.theta_bp = net.theta_ff;

  FloatActivations base = ann_forward_float(net, input);
  GradientAccumulator analytic = ann_backward_float(net, base, label, alpha);

  std::vector<Index> trainable;
  for (Index l = 0; l < net.layer_count(); ++l)
    if (net.params[l].trainable) trainable.push_back(l);

  auto relu_signs = [&](const FloatActivations& acts) {
    std::vector<std::uint8_t> signs;
    for (Index l = 0; l + 1 < net.layer_count(); ++l)
      if (net.spec(l).activation == Activation::kRelu)
        for (Index i = 0; i < acts.preact[l].size(); ++i)
          signs.push_back(acts.preact[l][i] > 0.0 ? 1 : 0);
    return signs;
  };
  const std::vector<std::uint8_t> base_signs = relu_signs(base);

  Draw d(seed, 0x96adc4ecULL);
  const Real h = 1e-4;
  Real max_rel = 0.0;
  int used = 0;
  for (int c = 0; c < coords * 4 && used < coords; ++c) {
    const Index l = trainable[d.below(trainable.size())];
    Mat& w = net.params[l].weights;
    const Index r = static_cast<Index>(d.below(w.rows()));
    const Index q = static_cast<Index>(d.below(w.cols()));
    const Real saved = w(r, q);

    w(r, q) = saved + h;
    FloatActivations plus = ann_forward_float(net, input);
    const Real loss_plus = softmax_cross_entropy(plus.logits(), label).first;
    w(r, q) = saved - h;
    FloatActivations minus = ann_forward_float(net, input);
    const Real loss_minus = softmax_cross_entropy(minus.logits(), label).first;
    w(r, q) = saved;

    // Skip coordinates whose nudge flips any ReLU region.
    if (relu_signs(plus) != base_signs || relu_signs(minus) != base_signs)
      continue;
    ++used;

    const Real fd = (loss_plus - loss_minus) / (2 * h);
    const Real g = analytic.dw[l](r, q);
    const Real denom = std::max(std::abs(fd) + std::abs(g), 1e-8);
    max_rel = std::max(max_rel, std::abs(fd - g) / denom);
  }

  net.theta_bp = saved_bp;
  return max_rel;
}

}  // namespace spikenn
