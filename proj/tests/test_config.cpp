#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "spikenn/config.hpp"

#include <cstdio>
#include <fstream>
#include <string>

using namespace spikenn;

TEST_CASE("defaults validate cleanly") {
  NetworkConfig cfg;
  CHECK(validate_config(cfg).empty());
  CHECK(cfg.topology == "784-300-10");
  CHECK(cfg.alpha == 100.0);
}

TEST_CASE("effective learning rate lands on the weight grid") {
  NetworkConfig cfg;
  cfg.eta = 0.05;
  cfg.alpha = 100.0;
  // 0.0005 * 2^20 = 524.288, so the snapped value is 524 grid steps.
  CHECK(cfg.eta_effective() == 524.0 / 1048576.0);
  CHECK(on_grid(cfg.eta_effective()));
}

TEST_CASE("entry application and rejection") {
  NetworkConfig cfg;
  apply_config_entry(cfg, "alpha", "50");
  CHECK(cfg.alpha == 50.0);
  apply_config_entry(cfg, "topology", "6x6-4C3-10");
  CHECK(cfg.topology == "6x6-4C3-10");
  apply_config_entry(cfg, "input_mode", "spike_encoded");
  CHECK(cfg.input_mode == InputMode::kSpikeEncoded);
  apply_config_entry(cfg, "rounding_mode", "floor");
  CHECK(cfg.rounding_mode == RoundingMode::kFloor);
  apply_config_entry(cfg, "augment", "true");
  CHECK(cfg.augment);

  CHECK_THROWS_AS(apply_config_entry(cfg, "learning_rate", "0.1"), ConfigError);
  CHECK_THROWS_AS(apply_config_entry(cfg, "alpha", "banana"), ConfigError);
  CHECK_THROWS_AS(apply_config_entry(cfg, "epochs", "2.5"), ConfigError);
  CHECK_THROWS_AS(apply_config_entry(cfg, "input_mode", "bogus"), ConfigError);
  CHECK_THROWS_AS(apply_config_entry(cfg, "standardize", "maybe"), ConfigError);
}

TEST_CASE("file round trip preserves every field") {
  NetworkConfig cfg;
  cfg.topology = "28x28-15C5-P2-40C5-P2-300-10";
  cfg.theta_ff = 2.0;
  cfg.theta_bp = 0.5;
  cfg.alpha = 500.0;
  cfg.eta = 0.1;
  cfg.epochs = 3;
  cfg.batch_size = 25;
  cfg.seed = 12345;
  cfg.input_mode = InputMode::kSpikeEncoded;
  cfg.rounding_mode = RoundingMode::kCeil;
  cfg.dataset = DatasetKind::kCifar10;
  cfg.dataset_path = "somewhere/else";
  cfg.input_scale = 7;
  cfg.momentum = 0.5;
  cfg.weight_decay = 0.125;
  cfg.standardize = true;
  cfg.augment = true;

  const std::string path = "test_config_roundtrip.cfg";
  {
    std::ofstream out(path);
    out << "# full round trip\n" << serialize_config(cfg);
  }
  const NetworkConfig back = load_config_file(path);
  std::remove(path.c_str());

  CHECK(back.topology == cfg.topology);
  CHECK(back.theta_ff == cfg.theta_ff);
  CHECK(back.theta_bp == cfg.theta_bp);
  CHECK(back.alpha == cfg.alpha);
  CHECK(back.eta == cfg.eta);
  CHECK(back.epochs == cfg.epochs);
  CHECK(back.batch_size == cfg.batch_size);
  CHECK(back.seed == cfg.seed);
  CHECK(back.input_mode == cfg.input_mode);
  CHECK(back.rounding_mode == cfg.rounding_mode);
  CHECK(back.dataset == cfg.dataset);
  CHECK(back.dataset_path == cfg.dataset_path);
  CHECK(back.input_scale == cfg.input_scale);
  CHECK(back.momentum == cfg.momentum);
  CHECK(back.weight_decay == cfg.weight_decay);
  CHECK(back.standardize == cfg.standardize);
  CHECK(back.augment == cfg.augment);
}

TEST_CASE("comments, blanks and spacing are tolerated") {
  const std::string path = "test_config_loose.cfg";
  {
    std::ofstream out(path);
    out << "# header\n\n  alpha   =  25  # trailing comment\n"
        << "\tseed=9\n";
  }
  const NetworkConfig cfg = load_config_file(path);
  std::remove(path.c_str());
  CHECK(cfg.alpha == 25.0);
  CHECK(cfg.seed == 9);

  CHECK_THROWS_AS(load_config_file("does_not_exist.cfg"), IoError);
}

TEST_CASE("validation catches each invariant") {
  auto has_error = [](const NetworkConfig& cfg) {
    return !validate_config(cfg).empty();
  };
  NetworkConfig cfg;

  cfg.theta_ff = 0.0;
  CHECK(has_error(cfg));
  cfg = NetworkConfig{};

  cfg.alpha = 1.0;
  cfg.theta_bp = 0.5;
  CHECK(has_error(cfg));
  cfg.theta_bp = cfg.theta_ff;
  CHECK_FALSE(has_error(cfg));
  cfg = NetworkConfig{};

  cfg.epochs = -1;
  CHECK(has_error(cfg));
  cfg = NetworkConfig{};

  cfg.batch_size = 0;
  CHECK(has_error(cfg));
  cfg = NetworkConfig{};

  cfg.theta_ff = 0.3;  // off the 2^-20 grid
  CHECK(has_error(cfg));
  cfg = NetworkConfig{};

  cfg.eta = 1e-9;  // eta/alpha snaps to zero
  CHECK(has_error(cfg));
  cfg = NetworkConfig{};

  cfg.momentum = 1.0;
  CHECK(has_error(cfg));
  cfg = NetworkConfig{};

  cfg.topology = "784-";
  CHECK(has_error(cfg));
}
