#pragma once

#include "spikenn/data_io.hpp"
#include "spikenn/metrics.hpp"
#include "spikenn/network.hpp"
#include "spikenn/types.hpp"

#include <functional>
#include <string>
#include <vector>

namespace spikenn {

enum class EngineKind { kInteger, kFloat, kEvent };

const char* to_string(EngineKind e);

struct TrainOptions {
  EngineKind engine = EngineKind::kInteger;
  int threads = 1;
  Index train_limit = 0;  // 0 = full split
  Index test_limit = 0;
  Index metrics_sample = 256;  // examples per epoch feeding sparsity rows
  std::function<void(int epoch, const Network&)> on_epoch_end;
  bool quiet = false;
};

struct EpochRow {
  int epoch = 0;
  std::string split;
  Real accuracy = 0.0;
  Real loss = 0.0;
  Real mean_bp_relops = 0.0;
  std::vector<Real> layer_bp_relops;
};

struct TrainLog {
  std::vector<EpochRow> rows;
  std::vector<SparsityRow> sparsity;
};

std::string epoch_csv_header(Index weight_layers);
std::string to_csv(const EpochRow& row, Index weight_layers);

struct EvalResult {
  Real accuracy = 0.0;
  Real loss = 0.0;
  std::vector<int> predictions;
};

EvalResult evaluate(const Network& net, const Dataset& ds,
                    const NetworkConfig& cfg, EngineKind engine,
                    Index limit = 0, int threads = 1);

// Mini-batch SGD per the configured engine. Gradients are averaged over the
// batch; epoch order is a pure function of (seed, epoch). The weight
// trajectory is identical for the integer and event engines and for any
// thread count.
TrainLog train(Network& net, const DatasetPair& data, const NetworkConfig& cfg,
               const TrainOptions& opt);

}  // namespace spikenn
