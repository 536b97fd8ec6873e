#include "spikenn/config.hpp"

#include "spikenn/topology.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace spikenn {

const char* to_string(InputMode m) {
  return m == InputMode::kAnalogFirstLayer ? "analog_first_layer"
                                           : "spike_encoded";
}

const char* to_string(DatasetKind d) {
  return d == DatasetKind::kMnist ? "mnist" : "cifar10";
}

const char* to_string(RoundingMode m) {
  switch (m) {
    case RoundingMode::kHalfAway: return "round_half_away";
    case RoundingMode::kFloor: return "floor";
    case RoundingMode::kCeil: return "ceil";
  }
  return "?";
}

namespace {

Real parse_real(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    Real r = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return r;
  } catch (const std::exception&) {
    throw ConfigError("config: bad numeric value '" + v + "' for " + key);
  }
}

long long parse_int(const std::string& key, const std::string& v) {
  long long r = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), r);
  if (ec != std::errc() || ptr != v.data() + v.size())
    throw ConfigError("config: bad integer value '" + v + "' for " + key);
  return r;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "on") return true;
  if (v == "false" || v == "0" || v == "off") return false;
  throw ConfigError("config: bad boolean value '" + v + "' for " + key);
}

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  std::size_t b = s.find_last_not_of(" \t\r");
  return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
}

}  // namespace

void apply_config_entry(NetworkConfig& cfg, const std::string& key,
                        const std::string& value) {
  if (key == "topology") cfg.topology = value;
  else if (key == "theta_ff") cfg.theta_ff = parse_real(key, value);
  else if (key == "theta_bp") cfg.theta_bp = parse_real(key, value);
  else if (key == "alpha") cfg.alpha = parse_real(key, value);
  else if (key == "eta") cfg.eta = parse_real(key, value);
  else if (key == "epochs") cfg.epochs = static_cast<int>(parse_int(key, value));
  else if (key == "batch_size")
    cfg.batch_size = static_cast<int>(parse_int(key, value));
  else if (key == "seed")
    cfg.seed = static_cast<std::uint64_t>(parse_int(key, value));
  else if (key == "input_mode") {
    if (value == "analog_first_layer") cfg.input_mode = InputMode::kAnalogFirstLayer;
    else if (value == "spike_encoded") cfg.input_mode = InputMode::kSpikeEncoded;
    else throw ConfigError("config: unknown input_mode '" + value + "'");
  } else if (key == "rounding_mode") {
    if (value == "round_half_away") cfg.rounding_mode = RoundingMode::kHalfAway;
    else if (value == "floor") cfg.rounding_mode = RoundingMode::kFloor;
    else if (value == "ceil") cfg.rounding_mode = RoundingMode::kCeil;
    else throw ConfigError("config: unknown rounding_mode '" + value + "'");
  } else if (key == "dataset") {
    if (value == "mnist") cfg.dataset = DatasetKind::kMnist;
    else if (value == "cifar10") cfg.dataset = DatasetKind::kCifar10;
    else throw ConfigError("config: unknown dataset '" + value + "'");
  } else if (key == "dataset_path") cfg.dataset_path = value;
  else if (key == "input_scale")
    cfg.input_scale = static_cast<int>(parse_int(key, value));
  else if (key == "momentum") cfg.momentum = parse_real(key, value);
  else if (key == "weight_decay") cfg.weight_decay = parse_real(key, value);
  else if (key == "standardize") cfg.standardize = parse_bool(key, value);
  else if (key == "augment") cfg.augment = parse_bool(key, value);
  else throw ConfigError("config: unknown key '" + key + "'");
}

NetworkConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("config: cannot open '" + path + "'");
  NetworkConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config: line " + std::to_string(lineno) +
                        " is not 'key = value': '" + line + "'");
    apply_config_entry(cfg, trim(line.substr(0, eq)),
                       trim(line.substr(eq + 1)));
  }
  return cfg;
}

std::string serialize_config(const NetworkConfig& cfg) {
  std::ostringstream out;
  out.precision(17);
  out << "topology = " << cfg.topology << '\n'
      << "theta_ff = " << cfg.theta_ff << '\n'
      << "theta_bp = " << cfg.theta_bp << '\n'
      << "alpha = " << cfg.alpha << '\n'
      << "eta = " << cfg.eta << '\n'
      << "epochs = " << cfg.epochs << '\n'
      << "batch_size = " << cfg.batch_size << '\n'
      << "seed = " << cfg.seed << '\n'
      << "input_mode = " << to_string(cfg.input_mode) << '\n'
      << "rounding_mode = " << to_string(cfg.rounding_mode) << '\n'
      << "dataset = " << to_string(cfg.dataset) << '\n'
      << "dataset_path = " << cfg.dataset_path << '\n'
      << "input_scale = " << cfg.input_scale << '\n'
      << "momentum = " << cfg.momentum << '\n'
      << "weight_decay = " << cfg.weight_decay << '\n'
      << "standardize = " << (cfg.standardize ? "true" : "false") << '\n'
      << "augment = " << (cfg.augment ? "true" : "false") << '\n';
  return out.str();
}

std::vector<std::string> validate_config(const NetworkConfig& cfg) {
  std::vector<std::string> errors;
  if (!(cfg.theta_ff > 0)) errors.push_back("theta_ff must be > 0");
  if (!(cfg.theta_bp > 0)) errors.push_back("theta_bp must be > 0");
  if (!(cfg.alpha > 0)) errors.push_back("alpha must be > 0");
  if (!(cfg.eta > 0)) errors.push_back("eta must be > 0");
  if (cfg.alpha == 1.0 && cfg.theta_bp != cfg.theta_ff)
    errors.push_back("theta_bp must equal theta_ff when alpha=1");
  if (cfg.epochs < 0) errors.push_back("epochs must be >= 0");
  if (cfg.batch_size < 1) errors.push_back("batch_size must be >= 1");
  if (cfg.input_scale < 1) errors.push_back("input_scale must be >= 1");
  if (cfg.momentum < 0 || cfg.momentum >= 1)
    errors.push_back("momentum must be in [0, 1)");
  if (cfg.weight_decay < 0) errors.push_back("weight_decay must be >= 0");
  if (!on_grid(cfg.theta_ff))
    errors.push_back("theta_ff must be a multiple of 2^-20");
  if (!on_grid(cfg.theta_bp))
    errors.push_back("theta_bp must be a multiple of 2^-20");
  if (cfg.eta > 0 && cfg.alpha > 0 && cfg.eta_effective() <= 0)
    errors.push_back("eta/alpha underflows the weight grid (2^-21 minimum)");
  try {
    parse_topology(cfg.topology);
  } catch (const ConfigError& e) {
    errors.push_back(e.what());
  }
  return errors;
}

}  // namespace spikenn
