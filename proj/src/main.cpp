// spikenn command line: train / eval / verify / trace.
//
// Exit codes: 0 ok, 1 verification failure, 2 usage or config error,
// 3 I/O error, 4 shape mismatch. CI branches on these.

#include "spikenn/data_io.hpp"
#include "spikenn/event_engine.hpp"
#include "spikenn/event_log.hpp"
#include "spikenn/metrics.hpp"
#include "spikenn/train.hpp"
#include "spikenn/verification.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace spikenn;

namespace {

constexpr const char* kVersion = "0.3.1";

std::string now_iso8601() {
  const std::time_t t =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

struct CommonFlags {
  std::string config_path;
  std::vector<std::string> overrides;  // key=value
  std::string engine = "integer";
  int threads = 0;  // 0 = hardware concurrency
  // -1 sentinels: flag absent, keep config value.
  std::int64_t seed = -1;
  double alpha = -1.0;
  int epochs = -1;
};

EngineKind parse_engine(const std::string& name) {
  if (name == "integer") return EngineKind::kInteger;
  if (name == "float") return EngineKind::kFloat;
  if (name == "event") return EngineKind::kEvent;
  throw ConfigError("unknown engine '" + name +
                    "' (expected integer, float or event)");
}

int resolve_threads(int flag) {
  if (flag > 0) return flag;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

void apply_override(NetworkConfig& cfg, const std::string& kv) {
  const auto eq = kv.find('=');
  if (eq == std::string::npos)
    throw ConfigError("--set expects key=value, got '" + kv + "'");
  apply_config_entry(cfg, kv.substr(0, eq), kv.substr(eq + 1));
}

NetworkConfig resolve_config(const CommonFlags& flags) {
  NetworkConfig cfg;
  if (!flags.config_path.empty()) cfg = load_config_file(flags.config_path);
  for (const auto& kv : flags.overrides) apply_override(cfg, kv);
  if (flags.seed >= 0) cfg.seed = static_cast<std::uint64_t>(flags.seed);
  if (flags.alpha > 0) cfg.alpha = flags.alpha;
  if (flags.epochs >= 0) cfg.epochs = flags.epochs;
  const std::vector<std::string> errors = validate_config(cfg);
  if (!errors.empty()) {
    std::string all = "invalid configuration:";
    for (const auto& e : errors) all += "\n  " + e;
    throw ConfigError(all);
  }
  return cfg;
}

void write_text_file(const fs::path& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << body;
  if (!out) throw IoError("short write to " + path.string());
}

json base_manifest(const std::string& command, const NetworkConfig& cfg,
                   EngineKind engine, int threads) {
  json m;
  m["tool"] = "spikenn";
  m["version"] = kVersion;
  m["command"] = command;
  m["engine"] = to_string(engine);
  m["threads"] = threads;
  m["seed"] = cfg.seed;
  m["topology"] = cfg.topology;
  m["config"] = serialize_config(cfg);
  m["started"] = now_iso8601();
  return m;
}

std::vector<Real> parse_alpha_list(const std::string& list) {
  std::vector<Real> alphas;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      std::size_t used = 0;
      const Real a = std::stod(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
      alphas.push_back(a);
    } catch (const std::exception&) {
      throw ConfigError("bad alpha value '" + item + "' in --alpha-list");
    }
  }
  if (alphas.empty()) throw ConfigError("--alpha-list is empty");
  return alphas;
}

// --- train ---------------------------------------------------------------

int cmd_train(const CommonFlags& flags, const std::string& out_dir,
              Index train_limit, Index test_limit, Index metrics_sample,
              bool quiet) {
  NetworkConfig cfg = resolve_config(flags);
  const EngineKind engine = parse_engine(flags.engine);
  const int threads = resolve_threads(flags.threads);

  const DatasetPair data = load_dataset(cfg);
  Network net = build_network(cfg);

  fs::create_directories(out_dir);
  const fs::path dir(out_dir);
  const fs::path manifest_path = dir / "manifest.json";
  const fs::path log_path = dir / "train_log.csv";
  const fs::path sparsity_path = dir / "sparsity.csv";
  const fs::path ckpt_last = dir / "checkpoint_last.spkg";
  const fs::path ckpt_final = dir / "checkpoint_final.spkg";

  json manifest = base_manifest("train", cfg, engine, threads);
  manifest["outputs"] = {{"train_log", log_path.filename().string()},
                         {"sparsity_log", sparsity_path.filename().string()},
                         {"checkpoint_last", ckpt_last.filename().string()},
                         {"checkpoint_final", ckpt_final.filename().string()}};
  write_text_file(manifest_path, manifest.dump(2) + "\n");
  if (!quiet) std::cout << "manifest: " << manifest_path.string() << "\n";

  TrainOptions opt;
  opt.engine = engine;
  opt.threads = threads;
  opt.train_limit = train_limit;
  opt.test_limit = test_limit;
  if (metrics_sample > 0) opt.metrics_sample = metrics_sample;
  opt.quiet = quiet;
  opt.on_epoch_end = [&](int, const Network& n) {
    save_checkpoint(n, cfg, ckpt_last.string());
  };

  const TrainLog log = train(net, data, cfg, opt);
  save_checkpoint(net, cfg, ckpt_final.string());

  const Index weight_layers = net.layer_count();
  std::ostringstream log_csv;
  log_csv << epoch_csv_header(weight_layers) << "\n";
  for (const auto& row : log.rows) log_csv << to_csv(row, weight_layers) << "\n";
  write_text_file(log_path, log_csv.str());

  std::ostringstream sp_csv;
  sp_csv << sparsity_csv_header() << "\n";
  for (const auto& row : log.sparsity) sp_csv << to_csv(row) << "\n";
  write_text_file(sparsity_path, sp_csv.str());

  Real final_acc = 0.0, final_loss = 0.0;
  for (const auto& row : log.rows)
    if (row.split == "test") {
      final_acc = row.accuracy;
      final_loss = row.loss;
    }
  manifest["finished"] = now_iso8601();
  manifest["results"] = {{"test_accuracy", final_acc},
                         {"test_loss", final_loss},
                         {"epochs_run", cfg.epochs}};
  write_text_file(manifest_path, manifest.dump(2) + "\n");

  std::cout << "final test accuracy: " << final_acc * 100 << "%\n";
  return 0;
}

// --- eval ----------------------------------------------------------------

int cmd_eval(const std::string& ckpt_path, const CommonFlags& flags,
             const std::string& split, Index limit,
             const std::string& event_log_path, bool gzip_log) {
  Checkpoint ckpt = load_checkpoint(ckpt_path);
  NetworkConfig cfg = ckpt.cfg;
  for (const auto& kv : flags.overrides) apply_override(cfg, kv);
  const EngineKind engine = parse_engine(flags.engine);
  const int threads = resolve_threads(flags.threads);

  const DatasetPair data = load_dataset(cfg);
  const Dataset& ds = split == "train" ? data.train : data.test;
  if (ds.channels * ds.height * ds.width != ckpt.net.spec(0).in_shape.count())
    throw ShapeError("checkpoint input shape does not match dataset");

  const Index n = limit > 0 ? std::min<Index>(limit, ds.size()) : ds.size();

  if (engine != EngineKind::kEvent) {
    const EvalResult res = evaluate(ckpt.net, ds, cfg, engine, n, threads);
    std::cout << split << " accuracy: " << res.accuracy * 100 << "% ("
              << n << " examples, loss " << res.loss << ")\n";
    return 0;
  }

  // Event path: accumulate per-layer emission counts alongside accuracy and
  // compare against the integer engine's minimal counts for redundancy.
  EventEngine ev(ckpt.net, cfg);
  EventTrace trace;
  RunOptions ropt;
  ropt.trace = &trace;
  long long correct = 0;
  Real loss = 0.0;
  std::vector<long long> n_min(ckpt.net.layer_count(), 0);
  for (Index i = 0; i < n; ++i) {
    const RunResult r = ev.run_example(ds.images[i], 0, ropt);
    if (r.prediction == ds.labels[i]) correct += 1;
    loss += softmax_cross_entropy(r.logits, ds.labels[i]).first;
    const IntegerActivations acts = ann_forward_integer(
        ckpt.net, encode_input(ds.images[i], cfg.input_mode, cfg.input_scale),
        cfg.rounding_mode);
    for (Index l = 0; l + 1 < ckpt.net.layer_count(); ++l)
      n_min[l] += spike_count_min(acts.counts[l]);
  }
  std::cout << split << " accuracy: "
            << 100.0 * static_cast<Real>(correct) / static_cast<Real>(n)
            << "% (" << n << " examples, loss " << loss / static_cast<Real>(n)
            << ")\n";
  for (Index l = 0; l + 1 < ckpt.net.layer_count(); ++l) {
    std::cout << "layer " << l << ": spikes " << trace.forward_events[l]
              << " n_min " << n_min[l];
    const auto red = redundancy_ratio(trace.forward_events[l], n_min[l]);
    if (red)
      std::cout << " redundancy " << *red;
    else
      std::cout << " redundancy na";
    std::cout << "\n";
  }

  if (!event_log_path.empty()) {
    EventTrace logged;
    logged.keep_log = true;
    RunOptions lopt;
    lopt.trace = &logged;
    ev.run_example(ds.images[0], 0, lopt);
    write_event_log(logged.log, event_log_path, gzip_log);
    std::cout << "event log (first example): " << event_log_path << "\n";
  }
  return 0;
}

// --- verify --------------------------------------------------------------

void print_report(const EquivalenceReport& rep, const char* what) {
  std::cout << what << ": " << (rep.pass ? "pass" : "FAIL") << " ("
            << rep.trials << " trials, " << rep.failures << " failures";
  std::cout << ", max |dS| per depth [";
  for (std::size_t i = 0; i < rep.max_ds.size(); ++i)
    std::cout << (i ? " " : "") << rep.max_ds[i];
  std::cout << "], max |dZ| [";
  for (std::size_t i = 0; i < rep.max_dz.size(); ++i)
    std::cout << (i ? " " : "") << rep.max_dz[i];
  std::cout << "], max dw rel " << rep.max_dw_rel << ")\n";
  if (!rep.pass)
    std::cout << "  counterexample seed " << rep.counterexample_seed << ": "
              << rep.detail << "\n";
}

int cmd_verify(int trials, std::uint64_t seed, int coords, int networks,
               int permutations, bool inject_fault) {
  bool ok = true;

  EquivalenceOptions eq;
  eq.trials = trials;
  eq.seed = seed;
  eq.inject_fault = inject_fault;
  const EquivalenceReport rep = check_equivalence(eq);
  print_report(rep, "equivalence");
  ok = ok && rep.pass;

  EquivalenceOptions sde = eq;
  sde.residual = false;
  const EquivalenceReport sde_rep = check_equivalence(sde);
  std::cout << "sde bounds: " << (sde_rep.pass ? "pass" : "FAIL") << " ("
            << sde_rep.trials << " trials)\n";
  if (!sde_rep.pass) std::cout << "  " << sde_rep.detail << "\n";
  ok = ok && sde_rep.pass;

  int order_bad = 0;
  for (int k = 0; k < networks; ++k) {
    RandomTrial trial = make_random_trial(seed + 0x0d0e0000ULL + k);
    if (!order_invariance_check(trial.net, trial.cfg, trial.input, trial.label,
                                permutations, seed + k))
      order_bad += 1;
  }
  std::cout << "order invariance: " << (order_bad == 0 ? "pass" : "FAIL")
            << " (" << networks << " networks x " << permutations
            << " orders, " << order_bad << " failures)\n";
  ok = ok && order_bad == 0;

  NetworkConfig gcfg;
  gcfg.topology = "784-64-32-10";
  gcfg.dataset_path.clear();
  gcfg.seed = seed;
  Network gnet = build_network(gcfg);
  CounterRng rng(seed, 0x96ad);
  Vec input(784);
  for (Index i = 0; i < input.size(); ++i)
    input[i] = snap_input(rng.uniform(static_cast<std::uint64_t>(i)));
  const Real gerr = gradcheck(gnet, input, 3, coords, seed);
  std::cout << "gradcheck: " << (gerr < 1e-4 ? "pass" : "FAIL")
            << " (max rel err " << gerr << " over " << coords
            << " coordinates)\n";
  ok = ok && gerr < 1e-4;

  return ok ? 0 : 1;
}

// --- trace ---------------------------------------------------------------

int cmd_trace(const std::string& ckpt_path, const CommonFlags& flags,
              const std::string& alpha_list, Index limit,
              const std::string& out_dir) {
  Checkpoint ckpt = load_checkpoint(ckpt_path);
  NetworkConfig base_cfg = ckpt.cfg;
  for (const auto& kv : flags.overrides) apply_override(base_cfg, kv);
  const std::vector<Real> alphas = alpha_list.empty()
                                       ? std::vector<Real>{base_cfg.alpha}
                                       : parse_alpha_list(alpha_list);

  const DatasetPair data = load_dataset(base_cfg);
  const Dataset& ds = data.test;
  const Index n = limit > 0 ? std::min<Index>(limit, ds.size()) : ds.size();
  const Network& net = ckpt.net;
  fs::create_directories(out_dir);

  std::ostringstream sweep;
  sweep << "alpha,mean_bp_relops,mean_ff_relops\n";

  for (const Real alpha : alphas) {
    NetworkConfig cfg = base_cfg;
    cfg.alpha = alpha;
    const std::vector<std::string> errors = validate_config(cfg);
    if (!errors.empty())
      throw ConfigError("alpha " + std::to_string(alpha) + ": " + errors[0]);

    OpCounters total;
    const bool analog = cfg.input_mode == InputMode::kAnalogFirstLayer;
    total.resize(net, analog);
    std::vector<long long> n_min(net.layer_count(), 0);
    long long input_max = 1;
    for (Index i = 0; i < n; ++i) {
      const Vec encoded =
          encode_input(ds.images[i], cfg.input_mode, cfg.input_scale);
      input_max = std::max(
          input_max,
          static_cast<long long>(std::ceil(encoded.cwiseAbs().maxCoeff())));
      const IntegerActivations acts =
          ann_forward_integer(net, encoded, cfg.rounding_mode);
      auto [errs, grads] =
          ann_backward_integer(net, acts, ds.labels[i], cfg.alpha,
                               cfg.eta_effective(), cfg.rounding_mode);
      (void)grads;
      total.merge(counters_from_ann(net, acts, errs, analog));
      for (Index l = 0; l + 1 < net.layer_count(); ++l)
        n_min[l] += spike_count_min(acts.counts[l]);
    }
    for (std::size_t l = 0; l < total.mac.size(); ++l)
      total.mac[l] -= mac_count(net.spec(static_cast<Index>(l)));

    const RelOps bp = relative_backprop_ops(total);
    const RelOps ff = relative_forward_ops(total);
    const std::vector<long long> ceilings = spike_count_ceilings(net, input_max);

    std::ostringstream csv;
    csv << sparsity_csv_header() << "\n";
    for (Index l = 0; l < net.layer_count(); ++l) {
      SparsityRow fwd{0, l, "forward", total.forward_acc[l], total.mac[l],
                      ff.per_layer[l], n_min[l],
                      ceilings[l] * net.out_shape(l).count() * n,
                      std::nullopt};
      csv << to_csv(fwd) << "\n";
      SparsityRow bwd = fwd;
      bwd.phase = "backward";
      bwd.acc_ops = total.backward_acc[l];
      bwd.rel_ops = bp.per_layer[l];
      bwd.n_min = 0;
      bwd.n_max = 0;
      csv << to_csv(bwd) << "\n";
    }
    std::ostringstream name;
    name << "trace_alpha" << alpha << ".csv";
    write_text_file(fs::path(out_dir) / name.str(), csv.str());

    sweep.precision(10);
    sweep << alpha << ',' << bp.mean << ',' << ff.mean << "\n";
    std::cout << "alpha " << alpha << ": mean backward rel_ops " << bp.mean
              << ", mean forward rel_ops " << ff.mean << "\n";
  }
  write_text_file(fs::path(out_dir) / "alpha_sweep.csv", sweep.str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spikenn: event-driven spiking network trainer with an exact "
               "integer-network counterpart"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));

  CommonFlags flags;
  std::string out_dir = "runs/latest";
  Index train_limit = 0, test_limit = 0, metrics_sample = 0;
  bool quiet = false;

  auto add_common = [&flags](CLI::App* cmd, bool with_config) {
    if (with_config)
      cmd->add_option("--config", flags.config_path, "key = value config file")
          ->check(CLI::ExistingFile);
    cmd->add_option("--engine", flags.engine,
                    "integer | float | event (default integer)");
    cmd->add_option("--threads", flags.threads,
                    "worker threads, 0 = hardware concurrency");
    cmd->add_option("--set", flags.overrides,
                    "config override key=value (repeatable)");
  };

  CLI::App* t = app.add_subcommand("train", "train a network");
  add_common(t, true);
  t->add_option("--seed", flags.seed, "override config seed");
  t->add_option("--alpha", flags.alpha, "override error scale");
  t->add_option("--epochs", flags.epochs, "override epoch count");
  t->add_option("--out-dir", out_dir, "run directory for logs + checkpoints");
  t->add_option("--train-limit", train_limit,
                "cap train examples per epoch (event-engine subset runs)");
  t->add_option("--test-limit", test_limit, "cap test examples per eval");
  t->add_option("--metrics-sample", metrics_sample,
                "examples per epoch for the sparsity log");
  t->add_flag("--quiet", quiet, "suppress per-epoch progress");

  std::string ckpt_path, split = "test", event_log_path;
  Index eval_limit = 0;
  bool gzip_log = false;
  CLI::App* e = app.add_subcommand("eval", "evaluate a checkpoint");
  e->add_option("checkpoint", ckpt_path, "checkpoint file")->required();
  add_common(e, false);
  e->add_option("--split", split, "train | test (default test)")
      ->check(CLI::IsMember({"train", "test"}));
  e->add_option("--limit", eval_limit, "cap evaluated examples");
  e->add_option("--event-log", event_log_path,
                "dump the first example's event stream to this path");
  e->add_flag("--gzip", gzip_log, "gzip the event log");

  int trials = 1000, coords = 100, networks = 100, permutations = 10;
  std::uint64_t verify_seed = 7;
  bool inject_fault = false;
  CLI::App* v = app.add_subcommand(
      "verify", "equivalence, discretization, order and gradient checks");
  v->add_option("--trials", trials, "equivalence trial count");
  v->add_option("--seed", verify_seed, "trial seed");
  v->add_option("--coords", coords, "gradcheck coordinate count");
  v->add_option("--networks", networks, "order-invariance network count");
  v->add_option("--permutations", permutations,
                "event-order permutations per network");
  v->add_flag("--inject-fault", inject_fault,
              "skew one rounding boundary; the checks must catch it");

  std::string alpha_list, trace_out = ".";
  Index trace_limit = 256;
  CLI::App* tr = app.add_subcommand(
      "trace", "export per-layer operation-count CSVs from a checkpoint");
  tr->add_option("checkpoint", ckpt_path, "checkpoint file")->required();
  add_common(tr, false);
  tr->add_option("--alpha-list", alpha_list,
                 "comma-separated error scales to sweep");
  tr->add_option("--limit", trace_limit, "test examples per sweep point");
  tr->add_option("--out-dir", trace_out, "CSV output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (t->parsed())
      return cmd_train(flags, out_dir, train_limit, test_limit, metrics_sample,
                       quiet);
    if (e->parsed())
      return cmd_eval(ckpt_path, flags, split, eval_limit, event_log_path,
                      gzip_log);
    if (v->parsed())
      return cmd_verify(trials, verify_seed, coords, networks, permutations,
                        inject_fault);
    if (tr->parsed())
      return cmd_trace(ckpt_path, flags, alpha_list, trace_limit, trace_out);
  } catch (const ConfigError& err) {
    std::cerr << "config error: " << err.what() << "\n";
    return 2;
  } catch (const IoError& err) {
    std::cerr << "io error: " << err.what() << "\n";
    return 3;
  } catch (const ShapeError& err) {
    std::cerr << "shape error: " << err.what() << "\n";
    return 4;
  } catch (const DivergenceError& err) {
    std::cerr << "run diverged: " << err.what() << "\n";
    return 5;
  }
  return 2;
}
