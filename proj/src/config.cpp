#include "aia/config.hpp"

#include <fstream>
#include <set>

#include "aia/errors.hpp"

namespace aia {

namespace {

using nlohmann::json;

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& prefix) {
  if (!obj.is_object()) throw ConfigError("config section '" + prefix + "' must be an object");
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key)) throw ConfigError("unknown config key '" + prefix + key + "'");
  }
}

template <typename T>
void read(const json& obj, const char* key, T& out, const std::string& prefix) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config key '" + prefix + key + "' has the wrong type");
  }
}

void read_size(const json& obj, const char* key, std::size_t& out, const std::string& prefix) {
  if (!obj.contains(key)) return;
  const json& v = obj.at(key);
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
    throw ConfigError("config key '" + prefix + key + "' must be a non-negative integer");
  }
  out = v.get<std::size_t>();
}

std::string kind_name(DatasetConfig::Kind kind) {
  switch (kind) {
    case DatasetConfig::Kind::Events: return "events";
    case DatasetConfig::Kind::Cache: return "cache";
    default: return "poisson";
  }
}

void check_positive(bool ok, const std::string& key, const std::string& what) {
  if (!ok) throw ConfigError("config key '" + key + "' " + what);
}

}  // namespace

RunConfig::RunConfig() {
  train.batch_size = 5;
  dataset.poisson.rate_lo = 0.0;
  dataset.poisson.rate_hi = 0.8;
}

NeuronParams RunConfig::neuron_params() const {
  NeuronParams p = NeuronParams::for_model(model);
  p.v_th = v_th;
  if (model != NeuronModel::IF) p.lambda = lambda;
  p.surrogate_width = surrogate_width;
  return p;
}

NetworkSpec RunConfig::network_spec(std::size_t input_width, std::size_t class_count) const {
  std::vector<std::size_t> widths = hidden;
  widths.push_back(class_count);
  return NetworkSpec::uniform(input_width, widths, timesteps, neuron_params());
}

RunConfig parse_run_config(const json& doc) {
  RunConfig cfg;
  reject_unknown(doc,
                 {"model", "seed", "timesteps", "hidden", "v_th", "lambda", "surrogate_width", "epochs",
                  "batch_size", "learning_rate", "adam_beta1", "adam_beta2", "adam_eps", "dataset",
                  "gradcheck", "analysis_bins"},
                 "");
  if (doc.contains("model")) {
    std::string name;
    read(doc, "model", name, "");
    try {
      cfg.model = parse_neuron_model(name);
    } catch (const ConfigError& e) {
      throw ConfigError(std::string("config key 'model': ") + e.what());
    }
  }
  read_size(doc, "seed", cfg.seed, "");
  read_size(doc, "timesteps", cfg.timesteps, "");
  read(doc, "hidden", cfg.hidden, "");
  read(doc, "v_th", cfg.v_th, "");
  read(doc, "lambda", cfg.lambda, "");
  read(doc, "surrogate_width", cfg.surrogate_width, "");
  read_size(doc, "epochs", cfg.train.epochs, "");
  read_size(doc, "batch_size", cfg.train.batch_size, "");
  read(doc, "learning_rate", cfg.train.adam.learning_rate, "");
  read(doc, "adam_beta1", cfg.train.adam.beta1, "");
  read(doc, "adam_beta2", cfg.train.adam.beta2, "");
  read(doc, "adam_eps", cfg.train.adam.eps, "");
  read_size(doc, "analysis_bins", cfg.analysis_bins, "");

  if (doc.contains("dataset")) {
    const json& ds = doc.at("dataset");
    const std::string p = "dataset.";
    reject_unknown(ds,
                   {"kind", "seed", "class_count", "neurons", "rate_lo", "rate_hi", "n_per_class",
                    "test_fraction", "manifest", "grid_w", "grid_h", "sensor_w", "sensor_h"},
                   p);
    std::string kind = "poisson";
    read(ds, "kind", kind, p);
    if (kind == "poisson") cfg.dataset.kind = DatasetConfig::Kind::Poisson;
    else if (kind == "events") cfg.dataset.kind = DatasetConfig::Kind::Events;
    else if (kind == "cache") cfg.dataset.kind = DatasetConfig::Kind::Cache;
    else throw ConfigError("config key 'dataset.kind' must be poisson, events or cache");
    if (ds.contains("seed")) {
      std::uint64_t s = 0;
      read_size(ds, "seed", s, p);
      cfg.dataset.seed = s;
    }
    read_size(ds, "class_count", cfg.dataset.poisson.class_count, p);
    cfg.dataset.class_count = cfg.dataset.poisson.class_count;
    read_size(ds, "neurons", cfg.dataset.poisson.neurons, p);
    read(ds, "rate_lo", cfg.dataset.poisson.rate_lo, p);
    read(ds, "rate_hi", cfg.dataset.poisson.rate_hi, p);
    read_size(ds, "n_per_class", cfg.dataset.poisson.n_per_class, p);
    read(ds, "test_fraction", cfg.dataset.test_fraction, p);
    std::string manifest;
    read(ds, "manifest", manifest, p);
    cfg.dataset.manifest = manifest;
    read_size(ds, "grid_w", cfg.dataset.binning.grid_w, p);
    read_size(ds, "grid_h", cfg.dataset.binning.grid_h, p);
    read_size(ds, "sensor_w", cfg.dataset.binning.sensor_w, p);
    read_size(ds, "sensor_h", cfg.dataset.binning.sensor_h, p);
    if (cfg.dataset.kind != DatasetConfig::Kind::Poisson && manifest.empty()) {
      throw ConfigError("config key 'dataset.manifest' is required for kind " + kind);
    }
  }

  if (doc.contains("gradcheck")) {
    const json& gc = doc.at("gradcheck");
    const std::string p = "gradcheck.";
    reject_unknown(gc, {"input_width", "hidden", "classes", "timesteps", "batch", "seed", "weight_scale",
                        "tolerance", "step"},
                   p);
    read_size(gc, "input_width", cfg.gradcheck.input_width, p);
    read_size(gc, "hidden", cfg.gradcheck.hidden, p);
    read_size(gc, "classes", cfg.gradcheck.classes, p);
    read_size(gc, "timesteps", cfg.gradcheck.timesteps, p);
    read_size(gc, "batch", cfg.gradcheck.batch, p);
    read_size(gc, "seed", cfg.gradcheck.seed, p);
    read(gc, "weight_scale", cfg.gradcheck.weight_scale, p);
    read(gc, "tolerance", cfg.gradcheck_tolerance, p);
    read(gc, "step", cfg.gradcheck_step, p);
  }

  check_positive(cfg.timesteps >= 1, "timesteps", "must be >= 1");
  check_positive(cfg.train.batch_size >= 1, "batch_size", "must be >= 1");
  check_positive(cfg.train.adam.learning_rate >= 0.0, "learning_rate", "must be >= 0");
  check_positive(cfg.dataset.test_fraction > 0.0 && cfg.dataset.test_fraction < 1.0,
                 "dataset.test_fraction", "must lie in (0, 1)");
  for (std::size_t w : cfg.hidden) check_positive(w >= 1, "hidden", "widths must be >= 1");
  check_positive(cfg.gradcheck_step > 0.0, "gradcheck.step", "must be > 0");
  try {
    cfg.neuron_params().validate();
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("neuron parameters: ") + e.what());
  }
  cfg.dataset.poisson.timesteps = cfg.timesteps;
  cfg.dataset.binning.timesteps = cfg.timesteps;
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  RunConfig cfg = parse_run_config(doc);
  resolve_paths(cfg, path.parent_path());
  return cfg;
}

void resolve_paths(RunConfig& cfg, const std::filesystem::path& base) {
  if (!cfg.dataset.manifest.empty() && cfg.dataset.manifest.is_relative()) {
    cfg.dataset.manifest = base / cfg.dataset.manifest;
  }
}

json to_json(const RunConfig& cfg) {
  json ds = {{"kind", kind_name(cfg.dataset.kind)},
             {"seed", cfg.dataset_seed()},
             {"test_fraction", cfg.dataset.test_fraction}};
  switch (cfg.dataset.kind) {
    case DatasetConfig::Kind::Poisson:
      ds["class_count"] = cfg.dataset.poisson.class_count;
      ds["neurons"] = cfg.dataset.poisson.neurons;
      ds["rate_lo"] = cfg.dataset.poisson.rate_lo;
      ds["rate_hi"] = cfg.dataset.poisson.rate_hi;
      ds["n_per_class"] = cfg.dataset.poisson.n_per_class;
      break;
    case DatasetConfig::Kind::Events:
      ds["manifest"] = std::filesystem::absolute(cfg.dataset.manifest).lexically_normal().string();
      ds["class_count"] = cfg.dataset.class_count;
      ds["grid_w"] = cfg.dataset.binning.grid_w;
      ds["grid_h"] = cfg.dataset.binning.grid_h;
      ds["sensor_w"] = cfg.dataset.binning.sensor_w;
      ds["sensor_h"] = cfg.dataset.binning.sensor_h;
      break;
    case DatasetConfig::Kind::Cache:
      ds["manifest"] = std::filesystem::absolute(cfg.dataset.manifest).lexically_normal().string();
      break;
  }
  return {{"model", std::string(to_string(cfg.model))},
          {"seed", cfg.seed},
          {"timesteps", cfg.timesteps},
          {"hidden", cfg.hidden},
          {"v_th", cfg.v_th},
          {"lambda", cfg.lambda},
          {"surrogate_width", cfg.surrogate_width},
          {"epochs", cfg.train.epochs},
          {"batch_size", cfg.train.batch_size},
          {"learning_rate", cfg.train.adam.learning_rate},
          {"adam_beta1", cfg.train.adam.beta1},
          {"adam_beta2", cfg.train.adam.beta2},
          {"adam_eps", cfg.train.adam.eps},
          {"analysis_bins", cfg.analysis_bins},
          {"dataset", ds},
          {"gradcheck",
           {{"input_width", cfg.gradcheck.input_width},
            {"hidden", cfg.gradcheck.hidden},
            {"classes", cfg.gradcheck.classes},
            {"timesteps", cfg.gradcheck.timesteps},
            {"batch", cfg.gradcheck.batch},
            {"seed", cfg.gradcheck.seed},
            {"weight_scale", cfg.gradcheck.weight_scale},
            {"tolerance", cfg.gradcheck_tolerance},
            {"step", cfg.gradcheck_step}}}};
}

std::pair<Dataset, Dataset> load_datasets(const RunConfig& cfg) {
  const DatasetConfig& dc = cfg.dataset;
  Dataset full;
  switch (dc.kind) {
    case DatasetConfig::Kind::Poisson: {
      PoissonConfig pc = dc.poisson;
      pc.timesteps = cfg.timesteps;
      pc.seed = cfg.dataset_seed();
      full = gen_poisson_patterns(pc);
      break;
    }
    case DatasetConfig::Kind::Events: {
      BinningParams bp = dc.binning;
      bp.timesteps = cfg.timesteps;
      full = ingest_events(load_manifest(dc.manifest), bp, dc.class_count).dataset;
      break;
    }
    case DatasetConfig::Kind::Cache: {
      std::ifstream in(dc.manifest);
      if (!in) throw IoError("cannot read dataset manifest " + dc.manifest.string());
      json doc;
      try {
        doc = json::parse(in);
        const auto cache = dc.manifest.parent_path() / doc.at("cache").get<std::string>();
        const std::uint64_t hash = std::stoull(doc.at("params_hash").get<std::string>(), nullptr, 16);
        auto loaded = read_dataset_cache(cache, hash);
        if (!loaded) throw DataError("dataset cache " + cache.string() + " is missing or stale");
        full = std::move(*loaded);
      } catch (const json::exception& e) {
        throw DataError("dataset manifest " + dc.manifest.string() + ": " + e.what());
      }
      if (full.timesteps() != cfg.timesteps) {
        throw DataError("dataset cache has T=" + std::to_string(full.timesteps()) + " but config asks for T=" +
                        std::to_string(cfg.timesteps));
      }
      break;
    }
  }
  full.validate();
  if (full.size() < 2) throw DataError("dataset has fewer than two samples");
  return split_dataset(full, dc.test_fraction, cfg.dataset_seed());
}

}  // namespace aia
