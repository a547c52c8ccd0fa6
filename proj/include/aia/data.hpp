#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "aia/numerics.hpp"

namespace aia {

enum class Split { Full, Train, Test };

std::string_view to_string(Split split);

// Labeled binary spike samples; `spikes` is (samples, neurons, T).
struct Dataset {
  DenseArray spikes;
  std::vector<std::size_t> labels;
  std::size_t class_count = 0;
  Split split = Split::Full;

  std::size_t size() const { return labels.size(); }
  std::size_t neurons() const { return spikes.extent(1); }
  std::size_t timesteps() const { return spikes.extent(2); }

  // Gathers the listed samples into a (batch, neurons, T) tensor.
  DenseArray gather(std::span<const std::size_t> indices) const;
  std::vector<std::size_t> gather_labels(std::span<const std::size_t> indices) const;
  void validate() const;
};

struct PoissonConfig {
  std::size_t class_count = 4;
  std::size_t neurons = 64;
  std::size_t timesteps = 10;
  double rate_lo = 0.05;
  double rate_hi = 0.6;
  std::size_t n_per_class = 75;
  std::uint64_t seed = 0;
};

// Each class gets a per-neuron rate template in [rate_lo, rate_hi]; samples
// draw independent Bernoulli spikes from their class template. Samples are
// ordered class by class.
Dataset gen_poisson_patterns(const PoissonConfig& cfg);

// Deterministic disjoint split; the test part holds round(test_fraction * n)
// samples.
std::pair<Dataset, Dataset> split_dataset(const Dataset& ds, double test_fraction, std::uint64_t seed);

struct EventRecord {
  std::uint64_t t = 0;  // microseconds
  std::uint32_t x = 0;
  std::uint32_t y = 0;
  std::uint8_t polarity = 0;

  friend bool operator==(const EventRecord&, const EventRecord&) = default;
};

struct EventStream {
  std::vector<EventRecord> events;  // stably sorted by t
  std::size_t lines = 0;            // non-empty data lines seen
  std::size_t malformed = 0;        // lines dropped
};

// Parses "t,x,y,polarity" lines. A leading header line is skipped; blank lines
// are ignored. Throws DataError when more than 1% of lines are malformed.
EventStream parse_events_csv(std::istream& in, const std::string& source = "<stream>");
EventStream load_events_csv(const std::filesystem::path& path);

struct ManifestEntry {
  std::filesystem::path path;  // resolved against the manifest's directory
  std::size_t label = 0;
};

// JSON array of {"path": ..., "label": ...} objects.
std::vector<ManifestEntry> load_manifest(const std::filesystem::path& path);

struct BinningParams {
  std::size_t grid_w = 1;
  std::size_t grid_h = 1;
  std::size_t timesteps = 10;
  // Sensor resolution used for integer down-scaling into the grid; 0 means
  // "grid size" (no scaling).
  std::size_t sensor_w = 0;
  std::size_t sensor_h = 0;

  std::size_t neurons() const { return 2 * grid_w * grid_h; }
  std::uint64_t hash() const;
};

// Bins a stream into a binary (neurons, T) frame. Neuron index is
// polarity * grid_w * grid_h + y * grid_w + x on the down-scaled grid; the
// time range [t_min, t_max] is cut into T equal bins, the last closed on the
// right. Multiple events in one cell still give 1.
DenseArray bin_events(std::span<const EventRecord> events, const BinningParams& params);

struct IngestResult {
  Dataset dataset;
  std::size_t skipped_empty = 0;
  std::size_t malformed_lines = 0;
  std::vector<std::filesystem::path> sources;  // one per kept sample
};

// Loads every manifest entry and bins it; empty streams are skipped and
// counted.
IngestResult ingest_events(const std::vector<ManifestEntry>& manifest, const BinningParams& params,
                           std::size_t class_count);

// Binary cache of a binned dataset. The header stores a format version and a
// hash of the parameters that produced the data.
void write_dataset_cache(const Dataset& ds, std::uint64_t params_hash, const std::filesystem::path& path);
// nullopt when the file is absent, of another version, or built from other
// parameters.
std::optional<Dataset> read_dataset_cache(const std::filesystem::path& path, std::uint64_t params_hash);

std::uint64_t poisson_hash(const PoissonConfig& cfg);
std::uint64_t file_hash(const std::filesystem::path& path);

}  // namespace aia
