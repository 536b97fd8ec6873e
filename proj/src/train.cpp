#include "spikenn/train.hpp"

#include "spikenn/ann_engine.hpp"
#include "spikenn/event_engine.hpp"
#include "spikenn/rng.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <sstream>
#include <thread>
#include <vector>

namespace spikenn {

const char* to_string(EngineKind e) {
  switch (e) {
    case EngineKind::kInteger: return "integer";
    case EngineKind::kFloat: return "float";
    case EngineKind::kEvent: return "event";
  }
  return "?";
}

namespace {

int argmax(const Vec& v) {
  int best = 0;
  for (Index i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = static_cast<int>(i);
  return best;
}

// Runs fn(begin, end, slot) on `threads` contiguous index ranges. Slot-local
// results let callers reduce in slot order, keeping output independent of
// scheduling.
void parallel_ranges(Index n, int threads,
                     const std::function<void(Index, Index, int)>& fn) {
  threads = std::max(1, threads);
  if (threads == 1 || n < 2 * threads) {
    fn(0, n, 0);
    return;
  }
  std::vector<std::thread> pool;
  const Index chunk = (n + threads - 1) / threads;
  for (int t = 0; t < threads; ++t) {
    const Index begin = std::min<Index>(t * chunk, n);
    const Index end = std::min<Index>(begin + chunk, n);
    if (begin >= end) break;
    pool.emplace_back([&fn, begin, end, t] { fn(begin, end, t); });
  }
  for (auto& th : pool) th.join();
}

Vec logits_for(const Network& net, const NetworkConfig& cfg,
               EngineKind engine, EventEngine* ev_engine, const Vec& image) {
  const Vec encoded = encode_input(image, cfg.input_mode, cfg.input_scale);
  switch (engine) {
    case EngineKind::kInteger:
      return ann_forward_integer(net, encoded, cfg.rounding_mode).logits();
    case EngineKind::kFloat:
      return ann_forward_float(net, encoded).logits();
    case EngineKind::kEvent: {
      RunOptions opt;
      opt.train = false;
      return ev_engine->run_example(image, 0, opt).logits;
    }
  }
  throw InternalError("logits_for: bad engine");
}

}  // namespace

EvalResult evaluate(const Network& net, const Dataset& ds,
                    const NetworkConfig& cfg, EngineKind engine, Index limit,
                    int threads) {
  const Index n = limit > 0 ? std::min<Index>(limit, ds.size()) : ds.size();
  if (n == 0) throw ConfigError("evaluate: empty dataset");

  EvalResult res;
  res.predictions.assign(n, -1);
  const int slots = std::max(1, threads);
  std::vector<long long> correct(slots, 0);
  std::vector<Real> loss(slots, 0.0);

  parallel_ranges(n, threads, [&](Index begin, Index end, int slot) {
    EventEngine ev(net, cfg);
    for (Index i = begin; i < end; ++i) {
      const Vec logits = logits_for(net, cfg, engine, &ev, ds.images[i]);
      const int pred = argmax(logits);
      res.predictions[i] = pred;
      if (pred == ds.labels[i]) correct[slot] += 1;
      loss[slot] += softmax_cross_entropy(logits, ds.labels[i]).first;
    }
  });

  long long total_correct = 0;
  Real total_loss = 0.0;
  for (int s = 0; s < slots; ++s) {
    total_correct += correct[s];
    total_loss += loss[s];
  }
  res.accuracy = static_cast<Real>(total_correct) / static_cast<Real>(n);
  res.loss = total_loss / static_cast<Real>(n);
  return res;
}

std::string epoch_csv_header(Index weight_layers) {
  std::ostringstream out;
  out << "epoch,split,accuracy,loss,mean_bp_relops";
  for (Index l = 0; l < weight_layers; ++l) out << ",bp_relops_l" << l;
  return out.str();
}

std::string to_csv(const EpochRow& row, Index weight_layers) {
  std::ostringstream out;
  out.precision(10);
  out << row.epoch << ',' << row.split << ',' << row.accuracy << ','
      << row.loss << ',' << row.mean_bp_relops;
  for (Index l = 0; l < weight_layers; ++l)
    out << ',' << (l < static_cast<Index>(row.layer_bp_relops.size())
                       ? row.layer_bp_relops[l]
                       : 0.0);
  return out.str();
}

namespace {

// Per-epoch sparsity sample: integer-engine forward/backward over a few
// hundred examples, tallied with the ANN-derived op counts.
void collect_metrics(const Network& net, const Dataset& train,
                     const NetworkConfig& cfg, Index sample, int epoch,
                     TrainLog& log, EpochRow& train_row) {
  const Index n = std::min<Index>(sample, train.size());
  if (n == 0) return;
  OpCounters total;
  total.resize(net, cfg.input_mode == InputMode::kAnalogFirstLayer);
  std::vector<long long> n_min(net.layer_count(), 0);
  long long input_max = 1;

  for (Index i = 0; i < n; ++i) {
    const Vec encoded =
        encode_input(train.images[i], cfg.input_mode, cfg.input_scale);
    input_max = std::max(
        input_max, static_cast<long long>(
                       std::ceil(encoded.cwiseAbs().maxCoeff())));
    IntegerActivations acts =
        ann_forward_integer(net, encoded, cfg.rounding_mode);
    auto [errs, grads] =
        ann_backward_integer(net, acts, train.labels[i], cfg.alpha,
                             cfg.eta_effective(), cfg.rounding_mode);
    OpCounters c = counters_from_ann(
        net, acts, errs, cfg.input_mode == InputMode::kAnalogFirstLayer);
    total.merge(c);
    for (Index l = 0; l + 1 < net.layer_count(); ++l)
      n_min[l] += spike_count_min(acts.counts[l]);
  }
  // merge() summed per-example MACs, which is what rel_ops should divide by;
  // subtract the extra copy added by the initial resize().
  for (std::size_t l = 0; l < total.mac.size(); ++l)
    total.mac[l] -= mac_count(net.spec(l));

  const std::vector<long long> ceilings = spike_count_ceilings(net, input_max);
  const RelOps bp = relative_backprop_ops(total);
  const RelOps ff = relative_forward_ops(total);

  for (Index l = 0; l < net.layer_count(); ++l) {
    SparsityRow fwd;
    fwd.epoch = epoch;
    fwd.layer = l;
    fwd.phase = "forward";
    fwd.acc_ops = total.forward_acc[l];
    fwd.mac_ops = total.mac[l];
    fwd.rel_ops = ff.per_layer[l];
    fwd.n_min = n_min[l];
    fwd.n_max = ceilings[l] * net.out_shape(l).count() * n;
    fwd.redundancy = std::nullopt;  // event-engine eval reports actual n
    log.sparsity.push_back(fwd);

    SparsityRow bwd = fwd;
    bwd.phase = "backward";
    bwd.acc_ops = total.backward_acc[l];
    bwd.rel_ops = bp.per_layer[l];
    bwd.n_min = 0;
    bwd.n_max = 0;
    log.sparsity.push_back(bwd);
  }
  train_row.mean_bp_relops = bp.mean;
  train_row.layer_bp_relops = bp.per_layer;
}

}  // namespace

TrainLog train(Network& net, const DatasetPair& data, const NetworkConfig& cfg,
               const TrainOptions& opt) {
  if (data.train.size() == 0) throw ConfigError("train: empty train split");
  if (data.test.size() == 0) throw ConfigError("train: empty test split");

  const Index n_train =
      opt.train_limit > 0 ? std::min<Index>(opt.train_limit, data.train.size())
                          : data.train.size();
  const Real eta_eff = cfg.eta_effective();
  const int slots = std::max(1, opt.threads);

  TrainLog log;
  GradientAccumulator velocity;
  const bool use_momentum = cfg.momentum > 0.0;
  if (use_momentum) velocity = GradientAccumulator::zeros_like(net);

  auto eval_rows = [&](int epoch) {
    EvalResult tr = evaluate(net, data.train, cfg, opt.engine,
                             std::min<Index>(n_train, 10000), opt.threads);
    EvalResult te =
        evaluate(net, data.test, cfg, opt.engine, opt.test_limit, opt.threads);
    EpochRow train_row{epoch, "train", tr.accuracy, tr.loss, 0.0, {}};
    if (opt.engine != EngineKind::kFloat)
      collect_metrics(net, data.train, cfg, opt.metrics_sample, epoch, log,
                      train_row);
    EpochRow test_row{epoch, "test", te.accuracy, te.loss,
                      train_row.mean_bp_relops, train_row.layer_bp_relops};
    log.rows.push_back(train_row);
    log.rows.push_back(test_row);
    if (!opt.quiet)
      std::cout << "epoch " << epoch << ": train " << tr.accuracy * 100
                << "% test " << te.accuracy * 100 << "% (loss " << te.loss
                << ")\n";
  };

  if (cfg.epochs == 0) {
    eval_rows(0);
    return log;
  }

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const std::vector<std::size_t> perm = random_permutation(
        cfg.seed, 0xe50c0000ULL + static_cast<std::uint64_t>(epoch),
        static_cast<std::size_t>(n_train));

    for (Index start = 0; start < n_train; start += cfg.batch_size) {
      const Index stop = std::min<Index>(start + cfg.batch_size, n_train);
      std::vector<GradientAccumulator> acc(slots);
      for (int s = 0; s < slots; ++s)
        acc[s] = GradientAccumulator::zeros_like(net);

      parallel_ranges(stop - start, opt.threads,
                      [&](Index begin, Index end, int slot) {
        EventEngine ev(net, cfg);
        for (Index b = begin; b < end; ++b) {
          const Index idx = static_cast<Index>(perm[start + b]);
          Vec image = cfg.augment
                          ? augment_image(data.train, idx, cfg.seed, epoch)
                          : data.train.images[idx];
          const int label = data.train.labels[idx];
          switch (opt.engine) {
            case EngineKind::kInteger: {
              const Vec encoded =
                  encode_input(image, cfg.input_mode, cfg.input_scale);
              IntegerActivations acts =
                  ann_forward_integer(net, encoded, cfg.rounding_mode);
              auto [errs, grads] = ann_backward_integer(
                  net, acts, label, cfg.alpha, eta_eff, cfg.rounding_mode);
              (void)errs;
              acc[slot].add(grads);
              break;
            }
            case EngineKind::kFloat: {
              const Vec encoded =
                  encode_input(image, cfg.input_mode, cfg.input_scale);
              FloatActivations acts = ann_forward_float(net, encoded);
              GradientAccumulator g =
                  ann_backward_float(net, acts, label, cfg.alpha);
              g.scale(-eta_eff);
              acc[slot].add(g);
              break;
            }
            case EngineKind::kEvent: {
              RunOptions ropt;
              ropt.train = true;
              RunResult r = ev.run_example(image, label, ropt);
              acc[slot].add(r.grads);
              break;
            }
          }
        }
      });

      GradientAccumulator& batch = acc[0];
      for (int s = 1; s < slots; ++s) batch.add(acc[s]);
      batch.scale(1.0 / static_cast<Real>(stop - start));
      if (cfg.weight_decay > 0.0)
        for (Index l = 0; l < net.layer_count(); ++l)
          if (net.params[l].trainable)
            batch.dw[l] -= (eta_eff * cfg.weight_decay) *
                           net.params[l].weights;

      if (use_momentum) {
        for (Index l = 0; l < net.layer_count(); ++l)
          if (net.params[l].trainable)
            velocity.dw[l] = cfg.momentum * velocity.dw[l] + batch.dw[l];
        apply_updates(net, velocity, 1.0);
      } else {
        apply_updates(net, batch, 1.0);
      }
    }

    eval_rows(epoch);
    if (opt.on_epoch_end) opt.on_epoch_end(epoch, net);
  }
  return log;
}

}  // namespace spikenn
