#pragma once

#include "spikenn/config.hpp"
#include "spikenn/network.hpp"
#include "spikenn/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace spikenn {

// Analog inputs get snapped onto a dyadic grid finer than display precision
// (2^-12 per unit) so products with grid-aligned weights stay exact doubles.
inline constexpr Real kInputGrid = 0x1p-12;
inline constexpr Real kInputGridInv = 0x1p+12;

inline Real snap_input(Real v) {
  return std::nearbyint(v * kInputGridInv) * kInputGrid;
}

struct Dataset {
  Index channels = 1, height = 0, width = 0;
  std::vector<Vec> images;  // flattened (c*H + y)*W + x, grid-aligned
  std::vector<int> labels;
  int class_count = 10;
  std::string split;

  Index size() const { return static_cast<Index>(images.size()); }
};

struct DatasetPair {
  Dataset train;
  Dataset test;
};

// Directory with the four canonical IDX files (train/t10k, images/labels).
// Pixels scaled to [0,1].
DatasetPair load_mnist_idx(const std::string& dir);

// Directory with data_batch_{1..5}.bin and test_batch.bin. When standardize
// is set, per-channel mean/std computed on the train split are applied to
// both splits.
DatasetPair load_cifar10_binary(const std::string& dir, bool standardize);

DatasetPair load_dataset(const NetworkConfig& cfg);

// Pad-4 random crop plus horizontal flip, deterministic in
// (seed, epoch, example index).
Vec augment_image(const Dataset& ds, Index idx, std::uint64_t seed, int epoch);

// Little-endian container: magic "SPKG", u32 version, u32 config length,
// config text, then per layer rank/dims (u32) and f32 weights + biases.
void save_checkpoint(const Network& net, const NetworkConfig& cfg,
                     const std::string& path);

struct Checkpoint {
  Network net;
  NetworkConfig cfg;
};

Checkpoint load_checkpoint(const std::string& path);

}  // namespace spikenn
