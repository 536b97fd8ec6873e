#pragma once

#include "spikenn/rounding.hpp"
#include "spikenn/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace spikenn {

enum class InputMode { kAnalogFirstLayer, kSpikeEncoded };
enum class DatasetKind { kMnist, kCifar10 };

struct NetworkConfig {
  std::string topology = "784-300-10";
  Real theta_ff = 1.0;
  Real theta_bp = 1.0;
  Real alpha = 100.0;   // top-error scale
  Real eta = 0.05;      // learning rate before the 1/alpha rescale
  int epochs = 10;
  int batch_size = 10;
  std::uint64_t seed = 1;
  InputMode input_mode = InputMode::kAnalogFirstLayer;
  RoundingMode rounding_mode = RoundingMode::kHalfAway;
  DatasetKind dataset = DatasetKind::kMnist;
  std::string dataset_path = "datasets/mnist";

  // Extensions beyond the core key set, all defaulting to "off"/plain SGD.
  int input_scale = 32;       // spikes per unit pixel in spike_encoded mode
  Real momentum = 0.0;
  Real weight_decay = 0.0;
  bool standardize = false;   // per-channel standardization (CIFAR-10)
  bool augment = false;       // pad-4 random crop + horizontal flip

  // Effective per-spike step: eta / alpha snapped to the weight grid.
  // Nonzero for every sane (eta, alpha); validate_config checks it.
  Real eta_effective() const { return snap_to_grid(eta / alpha); }
};

// Returns one message per violated invariant; empty means valid.
std::vector<std::string> validate_config(const NetworkConfig& cfg);

// key = value lines, '#' comments; unknown keys rejected.
NetworkConfig load_config_file(const std::string& path);
void apply_config_entry(NetworkConfig& cfg, const std::string& key,
                        const std::string& value);
std::string serialize_config(const NetworkConfig& cfg);

const char* to_string(InputMode m);
const char* to_string(DatasetKind d);
const char* to_string(RoundingMode m);

}  // namespace spikenn
