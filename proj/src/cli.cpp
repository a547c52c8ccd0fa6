#include "aia/cli.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "aia/analysis.hpp"
#include "aia/checkpoint.hpp"
#include "aia/errors.hpp"
#include "aia/random.hpp"
#include "aia/training.hpp"

namespace aia::cli {

namespace {

namespace fs = std::filesystem;

struct CommonFlags {
  std::string config;
  std::string out = "runs";
  std::optional<std::uint64_t> seed;
  std::string model;
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write " + path.string());
  f << text;
  if (!f) throw IoError("failed writing " + path.string());
}

RunConfig effective_config(const CommonFlags& flags) {
  RunConfig cfg = flags.config.empty() ? RunConfig{} : load_run_config(flags.config);
  if (flags.seed) cfg.seed = *flags.seed;
  if (!flags.model.empty()) cfg.model = parse_neuron_model(flags.model);
  cfg.train.seed = cfg.seed;
  cfg.train.threads = threads_from_env();
  return cfg;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

void print_counts(std::ostream& out, const std::vector<std::uint64_t>& counts) {
  out << "spike_counts:";
  for (std::size_t n = 0; n < counts.size(); ++n) out << " layer" << n << "=" << counts[n];
  out << "\n";
}

void check_fits(const Network& net, const Dataset& ds, const std::string& what) {
  if (ds.neurons() != net.input_width || ds.timesteps() != net.timesteps || ds.class_count > net.class_count()) {
    throw DataError(what + " does not match the dataset (" + std::to_string(ds.neurons()) + " inputs, T=" +
                    std::to_string(ds.timesteps()) + ", " + std::to_string(ds.class_count) + " classes)");
  }
}

int cmd_train(const CommonFlags& flags, std::ostream& out) {
  RunConfig cfg = effective_config(flags);
  auto [train_set, test_set] = load_datasets(cfg);
  const Network net = init_network(cfg.network_spec(train_set.neurons(), train_set.class_count), cfg.seed);
  TrainResult result = train(net, train_set, test_set, cfg.train);

  const fs::path dir = make_run_dir(flags.out);
  write_text(dir / "config.json", to_json(cfg).dump(2) + "\n");
  save_checkpoint(result.network, dir / "checkpoint.json");
  write_text(dir / "metrics.json", result.metrics.to_json() + "\n");
  write_text(dir / "metrics.csv", result.metrics.to_csv());

  const EpochMetrics& last = result.metrics.epochs.empty() ? EpochMetrics{} : result.metrics.epochs.back();
  out << "model: " << to_string(cfg.model) << "\n";
  out << "final train_accuracy: " << last.train_accuracy << " test_accuracy: " << last.test_accuracy << "\n";
  print_counts(out, result.metrics.test_spike_counts);
  out << "run_dir: " << dir.string() << "\n";
  return kOk;
}

int cmd_eval(const CommonFlags& flags, const std::string& checkpoint, bool merge, std::ostream& out) {
  RunConfig cfg = effective_config(flags);
  const Network net = load_checkpoint(checkpoint);
  cfg.timesteps = net.timesteps;
  const Dataset test_set = load_datasets(cfg).second;
  check_fits(net, test_set, "checkpoint " + checkpoint);

  const std::size_t threads = threads_from_env();
  const EvalResult ev = evaluate(net, test_set, 50, threads);
  char line[128];
  std::snprintf(line, sizeof line, "accuracy: %.17g\nloss: %.17g\n", ev.accuracy, ev.loss);
  out << line;
  print_counts(out, ev.spike_counts);
  if (merge) {
    const Network merged = merge_beta(net);
    const EvalResult em = evaluate(merged, test_set, 50, threads);
    double deviation = 0.0;
    for (std::size_t k = 0; k < ev.readout.size(); ++k) {
      deviation = std::max(deviation, std::abs(ev.readout[k] - em.readout[k]));
    }
    std::snprintf(line, sizeof line, "merged_accuracy: %.17g\nmax_readout_deviation: %.3e\n", em.accuracy,
                  deviation);
    out << line;
    out << "parameters: " << parameter_count(net) << " merged_parameters: " << parameter_count(merged) << "\n";
  }
  return kOk;
}

int cmd_analyze(const CommonFlags& flags, const std::string& path_a, const std::string& path_b,
                std::ostream& out) {
  RunConfig cfg = effective_config(flags);
  const Network a = load_checkpoint(path_a);
  const Network b = load_checkpoint(path_b);
  cfg.timesteps = a.timesteps;
  const Dataset test_set = load_datasets(cfg).second;
  check_fits(a, test_set, "checkpoint " + path_a);
  check_fits(b, test_set, "checkpoint " + path_b);

  const std::vector<double> edges = default_weight_edges(a, b, cfg.analysis_bins);
  const WeightShiftReport shift = weight_shift_report(a, b, edges);
  const std::size_t threads = threads_from_env();
  const SpikeCountReport spikes_a = spike_count_report(a, test_set, threads);
  const SpikeCountReport spikes_b = spike_count_report(b, test_set, threads);

  const fs::path dir = make_run_dir(flags.out);
  write_text(dir / "config.json", to_json(cfg).dump(2) + "\n");
  write_text(dir / "weight_shift.csv", shift.to_csv());
  write_text(dir / "spike_counts.csv", paired_spike_csv(spikes_a, spikes_b));
  out << "weight_shift: " << (dir / "weight_shift.csv").string() << "\n";
  out << "spike_counts: " << (dir / "spike_counts.csv").string() << "\n";
  out << "run_dir: " << dir.string() << "\n";
  return kOk;
}

int cmd_gen_data(const CommonFlags& flags, std::ostream& out, std::ostream& err) {
  RunConfig cfg = effective_config(flags);
  const DatasetConfig& dc = cfg.dataset;
  Dataset ds;
  std::uint64_t params_hash = 0;
  nlohmann::json samples = nlohmann::json::array();
  if (dc.kind == DatasetConfig::Kind::Poisson) {
    PoissonConfig pc = dc.poisson;
    pc.timesteps = cfg.timesteps;
    pc.seed = cfg.dataset_seed();
    ds = gen_poisson_patterns(pc);
    params_hash = poisson_hash(pc);
    for (std::size_t s = 0; s < ds.size(); ++s) samples.push_back({{"index", s}, {"label", ds.labels[s]}});
  } else if (dc.kind == DatasetConfig::Kind::Events) {
    BinningParams bp = dc.binning;
    bp.timesteps = cfg.timesteps;
    IngestResult ingest = ingest_events(load_manifest(dc.manifest), bp, dc.class_count);
    if (ingest.skipped_empty) err << "warning: skipped " << ingest.skipped_empty << " empty event file(s)\n";
    if (ingest.malformed_lines) err << "warning: dropped " << ingest.malformed_lines << " malformed line(s)\n";
    ds = std::move(ingest.dataset);
    params_hash = bp.hash();
    for (std::size_t s = 0; s < ds.size(); ++s) {
      samples.push_back({{"index", s},
                         {"label", ds.labels[s]},
                         {"source", ingest.sources[s].filename().string()}});
    }
  } else {
    throw ConfigError("config key 'dataset.kind': gen-data needs poisson or events");
  }

  const fs::path dir = make_run_dir(flags.out);
  write_dataset_cache(ds, params_hash, dir / "dataset.bin");
  nlohmann::json manifest = {{"cache", "dataset.bin"},
                             {"params_hash", hex64(params_hash)},
                             {"class_count", ds.class_count},
                             {"neurons", ds.neurons()},
                             {"timesteps", ds.timesteps()},
                             {"samples", samples}};
  write_text(dir / "dataset.json", manifest.dump(2) + "\n");
  write_text(dir / "config.json", to_json(cfg).dump(2) + "\n");

  std::vector<std::size_t> per_class(ds.class_count, 0);
  for (std::size_t l : ds.labels) ++per_class[l];
  out << "samples: " << ds.size() << " neurons: " << ds.neurons() << " timesteps: " << ds.timesteps() << "\n";
  out << "classes:";
  for (std::size_t c = 0; c < per_class.size(); ++c) out << " " << c << "=" << per_class[c];
  out << "\ncache_hash: " << hex64(file_hash(dir / "dataset.bin")) << "\n";
  out << "run_dir: " << dir.string() << "\n";
  return kOk;
}

}  // namespace

std::size_t threads_from_env() {
  const char* v = std::getenv("AIA_THREADS");
  if (!v || !*v) return 1;
  try {
    const long n = std::stol(v);
    return n >= 1 ? static_cast<std::size_t>(n) : 1;
  } catch (const std::exception&) {
    return 1;
  }
}

std::filesystem::path make_run_dir(const std::filesystem::path& root) {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "run-%Y%m%dT%H%M%SZ", &tm);
  std::error_code ec;
  fs::create_directories(root, ec);
  if (ec) throw IoError("cannot create output directory " + root.string() + ": " + ec.message());
  for (int k = 1;; ++k) {
    fs::path dir = root / (k == 1 ? std::string(stamp) : std::string(stamp) + "-" + std::to_string(k));
    if (fs::create_directory(dir, ec)) return dir;
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  }
}

int run_gradcheck(const RunConfig& cfg, const GradcheckOptions& options, std::ostream& out) {
  GradcheckOptions opts = options;
  opts.tolerance = cfg.gradcheck_tolerance;
  opts.step = cfg.gradcheck_step;
  const std::vector<GradcheckReport> reports = gradcheck_suite(cfg.gradcheck, opts);
  bool pass = true;
  const GradcheckEntry* worst = nullptr;
  NeuronModel worst_model = NeuronModel::LIF;
  for (const GradcheckReport& r : reports) {
    out << r.to_text();
    pass = pass && r.pass;
    for (const GradcheckEntry& e : r.entries) {
      if (!worst || e.max_rel_error > worst->max_rel_error) {
        worst = &e;
        worst_model = r.model;
      }
    }
  }
  if (pass) {
    out << "gradcheck: PASS\n";
    return kOk;
  }
  char buf[160];
  std::snprintf(buf, sizeof buf, "gradcheck: FAIL (worst %s %s, max relative error %.3e)\n",
                std::string(to_string(worst_model)).c_str(), worst->parameter.c_str(), worst->max_rel_error);
  out << buf;
  return kCheckFailed;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Spiking network trainer with LIF, IF, PLIF, AIA and cached-AIA neurons", "aia"};
  app.require_subcommand(1);
  CommonFlags flags;
  std::uint64_t seed = 0;
  std::string checkpoint, checkpoint_a, checkpoint_b;
  bool merge = false;

  auto add_common = [&](CLI::App* cmd, bool with_out) {
    cmd->add_option("--config", flags.config, "JSON experiment config")->check(CLI::ExistingFile);
    if (with_out) cmd->add_option("--out", flags.out, "Output root; each run gets a new subdirectory");
    cmd->add_option("--seed", seed, "Override the run seed");
    cmd->add_option("--model", flags.model, "lif | if | plif | aia | cached-aia");
  };

  CLI::App* train_cmd = app.add_subcommand("train", "Train a network and write checkpoint + metrics");
  add_common(train_cmd, true);
  CLI::App* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on the test split");
  add_common(eval_cmd, false);
  eval_cmd->add_option("--checkpoint", checkpoint, "Checkpoint JSON")->required()->check(CLI::ExistingFile);
  eval_cmd->add_flag("--merge-beta", merge, "Fold cache scalars into weights and compare");
  CLI::App* grad_cmd = app.add_subcommand("gradcheck", "Finite-difference check of every backward rule");
  add_common(grad_cmd, false);
  CLI::App* analyze_cmd = app.add_subcommand("analyze", "Weight-shift and spike-count reports for two checkpoints");
  add_common(analyze_cmd, true);
  analyze_cmd->add_option("--checkpoint-a", checkpoint_a, "Baseline checkpoint")->required()->check(CLI::ExistingFile);
  analyze_cmd->add_option("--checkpoint-b", checkpoint_b, "Compared checkpoint")->required()->check(CLI::ExistingFile);
  CLI::App* gen_cmd = app.add_subcommand("gen-data", "Generate or ingest a dataset into a binary cache");
  add_common(gen_cmd, true);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  }
  for (CLI::App* cmd : app.get_subcommands()) {
    if (cmd->count("--seed")) flags.seed = seed;
  }

  try {
    if (train_cmd->parsed()) return cmd_train(flags, out);
    if (eval_cmd->parsed()) return cmd_eval(flags, checkpoint, merge, out);
    if (grad_cmd->parsed()) return run_gradcheck(effective_config(flags), {}, out);
    if (analyze_cmd->parsed()) return cmd_analyze(flags, checkpoint_a, checkpoint_b, out);
    if (gen_cmd->parsed()) return cmd_gen_data(flags, out, err);
  } catch (const DivergenceError& e) {
    err << "error: training diverged: " << e.what() << "\n";
    return kDiverged;
  } catch (const DimensionError& e) {
    err << "error: shape mismatch: " << e.what() << "\n";
    return kUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}

}  // namespace aia::cli
