#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "aia/data.hpp"
#include "aia/gradcheck.hpp"
#include "aia/network.hpp"
#include "aia/training.hpp"

namespace aia {

struct DatasetConfig {
  enum class Kind { Poisson, Events, Cache };
  Kind kind = Kind::Poisson;
  PoissonConfig poisson;           // kind == Poisson (timesteps come from RunConfig)
  std::optional<std::uint64_t> seed;  // defaults to the run seed
  std::filesystem::path manifest;  // kind == Events: event manifest; Cache: dataset.json
  BinningParams binning;           // kind == Events
  std::size_t class_count = 4;     // kind == Events
  double test_fraction = 1.0 / 3.0;
};

// Effective experiment configuration. Every key is optional in the JSON file;
// unknown keys are rejected.
struct RunConfig {
  NeuronModel model = NeuronModel::LIF;
  std::uint64_t seed = 1;
  std::size_t timesteps = 10;
  std::vector<std::size_t> hidden{32};
  double v_th = 1.0;
  double lambda = 0.5;
  double surrogate_width = 1.0;
  TrainConfig train;
  DatasetConfig dataset;
  GradcheckSuiteConfig gradcheck;
  double gradcheck_tolerance = 1e-3;
  double gradcheck_step = 1e-4;
  std::size_t analysis_bins = 21;

  RunConfig();

  NeuronParams neuron_params() const;
  NetworkSpec network_spec(std::size_t input_width, std::size_t class_count) const;
  std::uint64_t dataset_seed() const { return dataset.seed.value_or(seed); }
};

// Throws ConfigError naming the offending key (e.g. "dataset.rate_lo").
RunConfig parse_run_config(const nlohmann::json& doc);
RunConfig load_run_config(const std::filesystem::path& path);
nlohmann::json to_json(const RunConfig& cfg);

// Resolves relative paths in `cfg` against `base`.
void resolve_paths(RunConfig& cfg, const std::filesystem::path& base);

// Builds the train/test split described by the dataset section.
std::pair<Dataset, Dataset> load_datasets(const RunConfig& cfg);

}  // namespace aia
