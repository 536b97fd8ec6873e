#include "spikenn/data_io.hpp"

#include "spikenn/rng.hpp"

#include <array>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

namespace spikenn {

namespace {

std::uint32_t read_be32(std::ifstream& in, const std::string& file) {
  std::array<unsigned char, 4> b{};
  if (!in.read(reinterpret_cast<char*>(b.data()), 4))
    throw IoError(file + ": truncated at offset " +
                  std::to_string(static_cast<long long>(in.tellg())));
  return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) |
         (std::uint32_t(b[2]) << 8) | std::uint32_t(b[3]);
}

std::vector<unsigned char> read_bytes(std::ifstream& in, std::size_t n,
                                      const std::string& file) {
  std::vector<unsigned char> buf(n);
  if (!in.read(reinterpret_cast<char*>(buf.data()),
               static_cast<std::streamsize>(n)))
    throw IoError(file + ": truncated, expected " + std::to_string(n) +
                  " more bytes");
  return buf;
}

Dataset load_idx_split(const std::string& images_path,
                       const std::string& labels_path,
                       const std::string& split) {
  std::ifstream imgs(images_path, std::ios::binary);
  if (!imgs) throw IoError("cannot open " + images_path);
  const std::uint32_t magic_i = read_be32(imgs, images_path);
  if (magic_i != 0x00000803)
    throw IoError(images_path + ": bad magic, expected 0x00000803");
  const std::uint32_t count = read_be32(imgs, images_path);
  const std::uint32_t rows = read_be32(imgs, images_path);
  const std::uint32_t cols = read_be32(imgs, images_path);

  std::ifstream labs(labels_path, std::ios::binary);
  if (!labs) throw IoError("cannot open " + labels_path);
  const std::uint32_t magic_l = read_be32(labs, labels_path);
  if (magic_l != 0x00000801)
    throw IoError(labels_path + ": bad magic, expected 0x00000801");
  const std::uint32_t count_l = read_be32(labs, labels_path);
  if (count != count_l)
    throw IoError(labels_path + ": label count " + std::to_string(count_l) +
                  " does not match image count " + std::to_string(count));

  Dataset ds;
  ds.channels = 1;
  ds.height = rows;
  ds.width = cols;
  ds.split = split;
  ds.images.reserve(count);
  ds.labels.reserve(count);

  const std::size_t pixels = static_cast<std::size_t>(rows) * cols;
  for (std::uint32_t n = 0; n < count; ++n) {
    auto raw = read_bytes(imgs, pixels, images_path);
    Vec img(static_cast<Index>(pixels));
    for (std::size_t p = 0; p < pixels; ++p)
      img[static_cast<Index>(p)] = snap_input(raw[p] / 255.0);
    ds.images.push_back(std::move(img));
  }
  auto raw_labels = read_bytes(labs, count, labels_path);
  for (std::uint32_t n = 0; n < count; ++n) {
    if (raw_labels[n] > 9)
      throw IoError(labels_path + ": label byte " +
                    std::to_string(raw_labels[n]) + " out of range");
    ds.labels.push_back(raw_labels[n]);
  }
  return ds;
}

}  // namespace

DatasetPair load_mnist_idx(const std::string& dir) {
  namespace fs = std::filesystem;
  const fs::path root(dir);
  DatasetPair pair;
  pair.train = load_idx_split((root / "train-images-idx3-ubyte").string(),
                              (root / "train-labels-idx1-ubyte").string(),
                              "train");
  pair.test = load_idx_split((root / "t10k-images-idx3-ubyte").string(),
                             (root / "t10k-labels-idx1-ubyte").string(),
                             "test");
  return pair;
}

namespace {

constexpr std::size_t kCifarRecord = 3073;  // label byte + 3*1024 pixels

void load_cifar_file(const std::string& path, Dataset& ds) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  in.seekg(0, std::ios::end);
  const std::size_t size = static_cast<std::size_t>(in.tellg());
  in.seekg(0);
  if (size % kCifarRecord != 0)
    throw IoError(path + ": size " + std::to_string(size) +
                  " is not a multiple of " + std::to_string(kCifarRecord));
  const std::size_t records = size / kCifarRecord;
  for (std::size_t r = 0; r < records; ++r) {
    auto rec = read_bytes(in, kCifarRecord, path);
    if (rec[0] > 9)
      throw IoError(path + ": label byte " + std::to_string(rec[0]) +
                    " out of range at record " + std::to_string(r));
    ds.labels.push_back(rec[0]);
    Vec img(3 * 1024);
    for (Index p = 0; p < 3 * 1024; ++p)
      img[p] = rec[1 + p] / 255.0;  // snapped after standardization
    ds.images.push_back(std::move(img));
  }
}

}  // namespace

DatasetPair load_cifar10_binary(const std::string& dir, bool standardize) {
  namespace fs = std::filesystem;
  const fs::path root(dir);
  DatasetPair pair;
  pair.train.channels = pair.test.channels = 3;
  pair.train.height = pair.test.height = 32;
  pair.train.width = pair.test.width = 32;
  pair.train.split = "train";
  pair.test.split = "test";

  for (int b = 1; b <= 5; ++b)
    load_cifar_file((root / ("data_batch_" + std::to_string(b) + ".bin")).string(),
                    pair.train);
  load_cifar_file((root / "test_batch.bin").string(), pair.test);

  if (standardize) {
    // Per-channel statistics from the train split only.
    std::array<Real, 3> mean{}, var{};
    const std::size_t n_train = pair.train.images.size();
    for (const Vec& img : pair.train.images)
      for (Index c = 0; c < 3; ++c) mean[c] += img.segment(c * 1024, 1024).sum();
    for (Index c = 0; c < 3; ++c) mean[c] /= static_cast<Real>(n_train) * 1024;
    for (const Vec& img : pair.train.images)
      for (Index c = 0; c < 3; ++c)
        var[c] += (img.segment(c * 1024, 1024).array() - mean[c]).square().sum();
    std::array<Real, 3> stddev{};
    for (Index c = 0; c < 3; ++c)
      stddev[c] = std::sqrt(var[c] / (static_cast<Real>(n_train) * 1024));

    for (Dataset* ds : {&pair.train, &pair.test})
      for (Vec& img : ds->images)
        for (Index c = 0; c < 3; ++c)
          img.segment(c * 1024, 1024) =
              ((img.segment(c * 1024, 1024).array() - mean[c]) / stddev[c])
                  .unaryExpr([](Real v) { return snap_input(v); })
                  .matrix();
  } else {
    for (Dataset* ds : {&pair.train, &pair.test})
      for (Vec& img : ds->images)
        img = img.unaryExpr([](Real v) { return snap_input(v); });
  }
  return pair;
}

DatasetPair load_dataset(const NetworkConfig& cfg) {
  if (cfg.dataset == DatasetKind::kMnist) return load_mnist_idx(cfg.dataset_path);
  return load_cifar10_binary(cfg.dataset_path, cfg.standardize);
}

Vec augment_image(const Dataset& ds, Index idx, std::uint64_t seed, int epoch) {
  const Vec& src = ds.images[idx];
  CounterRng rng(seed, 0xa06ULL ^ (static_cast<std::uint64_t>(epoch) << 24 ^
                                   static_cast<std::uint64_t>(idx)));
  const int pad = 4;
  const int dy = static_cast<int>(rng.below(0, 2 * pad + 1)) - pad;
  const int dx = static_cast<int>(rng.below(1, 2 * pad + 1)) - pad;
  const bool flip = rng.below(2, 2) == 1;

  Vec out = Vec::Zero(src.size());
  const Index H = ds.height, W = ds.width;
  for (Index c = 0; c < ds.channels; ++c)
    for (Index y = 0; y < H; ++y)
      for (Index x = 0; x < W; ++x) {
        const Index sy = y + dy;
        Index sx = x + dx;
        if (flip) sx = W - 1 - sx;
        if (sy < 0 || sy >= H || sx < 0 || sx >= W) continue;
        out[(c * H + y) * W + x] = src[(c * H + sy) * W + sx];
      }
  return out;
}

namespace {

void write_u32(std::ofstream& out, std::uint32_t v) {
  std::array<unsigned char, 4> b{static_cast<unsigned char>(v & 0xff),
                                 static_cast<unsigned char>((v >> 8) & 0xff),
                                 static_cast<unsigned char>((v >> 16) & 0xff),
                                 static_cast<unsigned char>((v >> 24) & 0xff)};
  out.write(reinterpret_cast<const char*>(b.data()), 4);
}

std::uint32_t read_u32(std::ifstream& in, const std::string& path) {
  std::array<unsigned char, 4> b{};
  if (!in.read(reinterpret_cast<char*>(b.data()), 4))
    throw IoError(path + ": truncated");
  return std::uint32_t(b[0]) | (std::uint32_t(b[1]) << 8) |
         (std::uint32_t(b[2]) << 16) | (std::uint32_t(b[3]) << 24);
}

void write_f32s(std::ofstream& out, const Real* data, std::size_t n,
                const std::string& what) {
  std::vector<float> buf(n);
  for (std::size_t i = 0; i < n; ++i) {
    buf[i] = static_cast<float>(data[i]);
    if (static_cast<Real>(buf[i]) != data[i])
      throw IoError("checkpoint: " + what +
                    " not exactly representable in 32-bit float");
  }
  out.write(reinterpret_cast<const char*>(buf.data()),
            static_cast<std::streamsize>(n * sizeof(float)));
}

constexpr std::uint32_t kCheckpointVersion = 1;

}  // namespace

void save_checkpoint(const Network& net, const NetworkConfig& cfg,
                     const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out.write("SPKG", 4);
  write_u32(out, kCheckpointVersion);
  const std::string cfg_text = serialize_config(cfg);
  write_u32(out, static_cast<std::uint32_t>(cfg_text.size()));
  out.write(cfg_text.data(), static_cast<std::streamsize>(cfg_text.size()));

  for (Index l = 0; l < net.layer_count(); ++l) {
    const LayerParams& p = net.params[l];
    write_u32(out, 2);  // rank: rows x cols, then bias length
    write_u32(out, static_cast<std::uint32_t>(p.weights.rows()));
    write_u32(out, static_cast<std::uint32_t>(p.weights.cols()));
    write_u32(out, static_cast<std::uint32_t>(p.biases.size()));
    write_f32s(out, p.weights.data(),
               static_cast<std::size_t>(p.weights.size()),
               "layer " + std::to_string(l) + " weights");
    write_f32s(out, p.biases.data(), static_cast<std::size_t>(p.biases.size()),
               "layer " + std::to_string(l) + " biases");
  }
  if (!out) throw IoError("write failed for " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, "SPKG", 4) != 0)
    throw IoError(path + ": bad magic, expected SPKG");
  const std::uint32_t version = read_u32(in, path);
  if (version != kCheckpointVersion)
    throw IoError(path + ": unsupported version " + std::to_string(version));
  const std::uint32_t cfg_len = read_u32(in, path);
  std::string cfg_text(cfg_len, '\0');
  if (!in.read(cfg_text.data(), cfg_len)) throw IoError(path + ": truncated");

  Checkpoint ck;
  {
    // Parse the embedded config through the normal key = value path.
    std::istringstream lines(cfg_text);
    std::string line;
    while (std::getline(lines, line)) {
      if (line.empty()) continue;
      const std::size_t eq = line.find('=');
      if (eq == std::string::npos)
        throw IoError(path + ": malformed embedded config line '" + line + "'");
      std::string key = line.substr(0, eq);
      std::string value = line.substr(eq + 1);
      auto strip = [](std::string& s) {
        while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.erase(0, 1);
        while (!s.empty() && (s.back() == ' ' || s.back() == '\t' ||
                              s.back() == '\r'))
          s.pop_back();
      };
      strip(key);
      strip(value);
      apply_config_entry(ck.cfg, key, value);
    }
  }

  ck.net = build_network(ck.cfg);
  for (Index l = 0; l < ck.net.layer_count(); ++l) {
    LayerParams& p = ck.net.params[l];
    const std::uint32_t rank = read_u32(in, path);
    if (rank != 2) throw IoError(path + ": unexpected tensor rank");
    const std::uint32_t rows = read_u32(in, path);
    const std::uint32_t cols = read_u32(in, path);
    const std::uint32_t blen = read_u32(in, path);
    if (rows != static_cast<std::uint32_t>(p.weights.rows()) ||
        cols != static_cast<std::uint32_t>(p.weights.cols()) ||
        blen != static_cast<std::uint32_t>(p.biases.size()))
      throw ShapeError(path + ": layer " + std::to_string(l) +
                       " shape mismatch against topology " + ck.cfg.topology);
    std::vector<float> buf(static_cast<std::size_t>(rows) * cols + blen);
    if (!in.read(reinterpret_cast<char*>(buf.data()),
                 static_cast<std::streamsize>(buf.size() * sizeof(float))))
      throw IoError(path + ": truncated payload at layer " + std::to_string(l));
    // Payload is column-major, matching Eigen's default storage.
    std::size_t i = 0;
    for (Index idx = 0; idx < p.weights.size(); ++idx)
      p.weights.data()[idx] = static_cast<Real>(buf[i++]);
    for (Index idx = 0; idx < p.biases.size(); ++idx)
      p.biases[idx] = static_cast<Real>(buf[i++]);
  }
  return ck;
}

}  // namespace spikenn
