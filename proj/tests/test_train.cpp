#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "spikenn/train.hpp"

using namespace spikenn;

namespace {

// Three linearly separable classes on six pixels, heavily duplicated so a
// couple of epochs are enough to fit them.
DatasetPair toy_data() {
  DatasetPair pair;
  for (Dataset* ds : {&pair.train, &pair.test}) {
    ds->channels = 1;
    ds->height = 1;
    ds->width = 6;
    ds->class_count = 3;
  }
  pair.train.split = "train";
  pair.test.split = "test";

  auto proto = [](int cls) {
    Vec v = Vec::Zero(6);
    v[2 * cls] = 1.0;
    v[2 * cls + 1] = 0.75;
    return v;
  };
  for (int rep = 0; rep < 4; ++rep)
    for (int cls = 0; cls < 3; ++cls) {
      Vec img = proto(cls);
      img[(rep + 5) % 6] += 0.25;  // mild per-copy variation
      img = img.unaryExpr([](Real v) { return snap_input(v); });
      pair.train.images.push_back(img);
      pair.train.labels.push_back(cls);
      if (rep < 2) {
        pair.test.images.push_back(proto(cls));
        pair.test.labels.push_back(cls);
      }
    }
  return pair;
}

NetworkConfig toy_config() {
  NetworkConfig cfg;
  cfg.topology = "6-8-3";
  cfg.seed = 5;
  cfg.alpha = 20.0;
  cfg.eta = 0.05;
  cfg.batch_size = 4;
  cfg.epochs = 2;
  cfg.input_mode = InputMode::kSpikeEncoded;
  cfg.input_scale = 8;
  return cfg;
}

Real weight_delta(const Network& a, const Network& b) {
  Real d = 0.0;
  for (Index l = 0; l < a.layer_count(); ++l)
    d = std::max(d,
                 (a.params[l].weights - b.params[l].weights)
                     .cwiseAbs()
                     .maxCoeff());
  return d;
}

}  // namespace

TEST_CASE("two epochs on the toy set: logs, sparsity rows, learning") {
  const DatasetPair data = toy_data();
  const NetworkConfig cfg = toy_config();
  Network net = build_network(cfg);
  const Network fresh = build_network(cfg);

  TrainOptions opt;
  opt.quiet = true;
  int epochs_seen = 0;
  opt.on_epoch_end = [&](int epoch, const Network&) {
    CHECK(epoch == epochs_seen + 1);
    ++epochs_seen;
  };
  const TrainLog log = train(net, data, cfg, opt);

  CHECK(epochs_seen == 2);
  // Per epoch: one train row and one test row.
  REQUIRE(log.rows.size() == 4);
  CHECK(log.rows[0].split == "train");
  CHECK(log.rows[1].split == "test");
  CHECK(log.rows[0].epoch == 1);
  CHECK(log.rows[2].epoch == 2);
  for (const EpochRow& row : log.rows) {
    CHECK(row.accuracy >= 0.0);
    CHECK(row.accuracy <= 1.0);
    CHECK(std::isfinite(row.loss));
    CHECK(row.layer_bp_relops.size() == 2);
  }
  // Train rows carry sparsity aggregates; forward+backward per weight layer.
  REQUIRE(!log.sparsity.empty());
  CHECK(log.sparsity.size() == 2u * 2u * 2u);
  for (const SparsityRow& row : log.sparsity) {
    CHECK((row.phase == "forward" || row.phase == "backward"));
    CHECK(row.acc_ops >= 0);
    CHECK(row.mac_ops > 0);
    CHECK(row.n_min <= row.n_max);
  }

  CHECK(weight_delta(net, fresh) > 0.0);  // training moved the weights
  const EvalResult ev = evaluate(net, data.test, cfg, EngineKind::kInteger);
  CHECK(ev.accuracy == log.rows[3].accuracy);
  CHECK(ev.predictions.size() == 6);

  SUBCASE("the toy problem is actually learned") {
    NetworkConfig longer = cfg;
    longer.epochs = 8;
    Network net2 = build_network(longer);
    TrainOptions quiet;
    quiet.quiet = true;
    const TrainLog log2 = train(net2, data, longer, quiet);
    CHECK(log2.rows.back().accuracy == 1.0);
  }
}

TEST_CASE("zero epochs only evaluates") {
  const DatasetPair data = toy_data();
  NetworkConfig cfg = toy_config();
  cfg.epochs = 0;
  Network net = build_network(cfg);
  const Network fresh = build_network(cfg);

  TrainOptions opt;
  opt.quiet = true;
  const TrainLog log = train(net, data, cfg, opt);
  CHECK(log.rows.size() == 2);
  CHECK(log.rows[0].epoch == 0);
  CHECK(weight_delta(net, fresh) == 0.0);
}

TEST_CASE("identical trajectories: integer vs event engine vs two threads") {
  const DatasetPair data = toy_data();
  const NetworkConfig cfg = toy_config();

  auto run = [&](EngineKind engine, int threads) {
    Network net = build_network(cfg);
    TrainOptions opt;
    opt.engine = engine;
    opt.threads = threads;
    opt.quiet = true;
    opt.metrics_sample = 0;
    train(net, data, cfg, opt);
    return net;
  };

  const Network base = run(EngineKind::kInteger, 1);
  CHECK(weight_delta(base, run(EngineKind::kEvent, 1)) == 0.0);
  CHECK(weight_delta(base, run(EngineKind::kInteger, 2)) == 0.0);
  CHECK(weight_delta(base, run(EngineKind::kEvent, 3)) == 0.0);
}

TEST_CASE("momentum and weight decay change the trajectory deterministically") {
  const DatasetPair data = toy_data();
  NetworkConfig cfg = toy_config();
  cfg.momentum = 0.9;
  cfg.weight_decay = 1e-3;

  auto run = [&](int threads) {
    Network net = build_network(cfg);
    TrainOptions opt;
    opt.threads = threads;
    opt.quiet = true;
    opt.metrics_sample = 0;
    train(net, data, cfg, opt);
    return net;
  };
  const Network a = run(1);
  CHECK(weight_delta(a, run(2)) == 0.0);

  NetworkConfig plain = toy_config();
  Network b = build_network(plain);
  TrainOptions opt;
  opt.quiet = true;
  opt.metrics_sample = 0;
  train(b, data, plain, opt);
  CHECK(weight_delta(a, b) > 0.0);
}

TEST_CASE("float engine runs the same loop off the grid") {
  const DatasetPair data = toy_data();
  NetworkConfig cfg = toy_config();
  cfg.epochs = 1;
  Network net = build_network(cfg);
  TrainOptions opt;
  opt.engine = EngineKind::kFloat;
  opt.quiet = true;
  const TrainLog log = train(net, data, cfg, opt);
  REQUIRE(log.rows.size() == 2);
  CHECK(std::isfinite(log.rows.back().loss));
  // Float updates are snapped on apply, so the state stays grid-aligned.
  CHECK(on_grid(net.params[0].weights(0, 0)));
}

TEST_CASE("evaluate respects limits and reports per-example predictions") {
  const DatasetPair data = toy_data();
  const NetworkConfig cfg = toy_config();
  const Network net = build_network(cfg);

  const EvalResult full = evaluate(net, data.test, cfg, EngineKind::kInteger);
  const EvalResult capped =
      evaluate(net, data.test, cfg, EngineKind::kInteger, 2);
  CHECK(full.predictions.size() == 6);
  CHECK(capped.predictions.size() == 2);
  CHECK(full.predictions[0] == capped.predictions[0]);

  const EvalResult threaded =
      evaluate(net, data.test, cfg, EngineKind::kInteger, 0, 3);
  CHECK(threaded.accuracy == full.accuracy);
  CHECK(threaded.predictions == full.predictions);

  const EvalResult event =
      evaluate(net, data.test, cfg, EngineKind::kEvent);
  CHECK(event.predictions == full.predictions);
  CHECK(event.loss == full.loss);
}

TEST_CASE("empty splits are rejected") {
  DatasetPair data = toy_data();
  data.train.images.clear();
  data.train.labels.clear();
  NetworkConfig cfg = toy_config();
  Network net = build_network(cfg);
  TrainOptions opt;
  opt.quiet = true;
  CHECK_THROWS_AS(train(net, data, cfg, opt), ConfigError);
}

TEST_CASE("epoch CSV schema is pinned") {
  CHECK(epoch_csv_header(2) ==
        "epoch,split,accuracy,loss,mean_bp_relops,bp_relops_l0,bp_relops_l1");
  EpochRow row;
  row.epoch = 1;
  row.split = "test";
  row.accuracy = 0.975;
  row.loss = 0.25;
  row.mean_bp_relops = 0.5;
  row.layer_bp_relops = {0.25, 0.75};
  CHECK(to_csv(row, 2) == "1,test,0.975,0.25,0.5,0.25,0.75");

  // Rows without per-layer data pad with zeros to keep the column count.
  row.layer_bp_relops.clear();
  CHECK(to_csv(row, 2) == "1,test,0.975,0.25,0.5,0,0");
}
