#include "aia/data.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "aia/errors.hpp"
#include "aia/random.hpp"

namespace aia {

namespace {

std::uint64_t hash_string(const std::string& s) {
  return fnv1a({reinterpret_cast<const std::uint8_t*>(s.data()), s.size()});
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

template <typename T>
bool parse_field(std::string_view s, T& out) {
  s = trim(s);
  if (s.empty()) return false;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

std::optional<EventRecord> parse_event_line(std::string_view line) {
  std::string_view fields[4];
  std::size_t count = 0;
  while (true) {
    const auto comma = line.find(',');
    if (count == 4) return std::nullopt;
    fields[count++] = line.substr(0, comma);
    if (comma == std::string_view::npos) break;
    line.remove_prefix(comma + 1);
  }
  if (count != 4) return std::nullopt;
  EventRecord e;
  unsigned polarity = 0;
  if (!parse_field(fields[0], e.t) || !parse_field(fields[1], e.x) || !parse_field(fields[2], e.y) ||
      !parse_field(fields[3], polarity) || polarity > 1) {
    return std::nullopt;
  }
  e.polarity = static_cast<std::uint8_t>(polarity);
  return e;
}

void put_u64(std::ostream& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.put(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u32(std::ostream& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.put(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint64_t get_uint(std::istream& in, int bytes) {
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) {
    const int c = in.get();
    if (c == EOF) throw DataError("dataset cache: truncated file");
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(c)) << (8 * i);
  }
  return v;
}

constexpr char kCacheMagic[8] = {'A', 'I', 'A', 'S', 'N', 'N', 'D', 'S'};
constexpr std::uint32_t kCacheVersion = 1;

}  // namespace

std::string_view to_string(Split split) {
  switch (split) {
    case Split::Train: return "train";
    case Split::Test: return "test";
    default: return "full";
  }
}

DenseArray Dataset::gather(std::span<const std::size_t> indices) const {
  const std::size_t n = neurons(), steps = timesteps(), stride = n * steps;
  DenseArray out(Shape{indices.size(), n, steps});
  for (std::size_t k = 0; k < indices.size(); ++k) {
    std::copy_n(spikes.values().begin() + static_cast<std::ptrdiff_t>(indices[k] * stride), stride,
                out.values().begin() + static_cast<std::ptrdiff_t>(k * stride));
  }
  return out;
}

std::vector<std::size_t> Dataset::gather_labels(std::span<const std::size_t> indices) const {
  std::vector<std::size_t> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) out.push_back(labels[i]);
  return out;
}

void Dataset::validate() const {
  if (spikes.rank() != 3 || spikes.extent(0) != labels.size()) {
    throw DimensionError("dataset: spikes " + shape_string(spikes.shape()) + " vs " +
                         std::to_string(labels.size()) + " labels");
  }
  for (std::size_t l : labels) {
    if (l >= class_count) throw DataError("dataset: label " + std::to_string(l) + " out of range");
  }
  for (double v : spikes.values()) {
    if (v != 0.0 && v != 1.0) throw DataError("dataset: spike values must be 0 or 1");
  }
}

Dataset gen_poisson_patterns(const PoissonConfig& cfg) {
  if (!(cfg.rate_lo >= 0.0 && cfg.rate_lo < cfg.rate_hi && cfg.rate_hi <= 1.0)) {
    throw ConfigError("gen_poisson_patterns: need 0 <= rate_lo < rate_hi <= 1");
  }
  if (cfg.class_count == 0 || cfg.neurons == 0 || cfg.timesteps == 0 || cfg.n_per_class == 0) {
    throw ConfigError("gen_poisson_patterns: sizes must be >= 1");
  }
  Rng rng(cfg.seed);
  std::vector<double> templates(cfg.class_count * cfg.neurons);
  for (double& r : templates) r = rng.uniform(cfg.rate_lo, cfg.rate_hi);

  Dataset ds;
  ds.class_count = cfg.class_count;
  const std::size_t total = cfg.class_count * cfg.n_per_class;
  ds.spikes = DenseArray(Shape{total, cfg.neurons, cfg.timesteps});
  ds.labels.resize(total);
  std::size_t s = 0;
  for (std::size_t c = 0; c < cfg.class_count; ++c) {
    for (std::size_t k = 0; k < cfg.n_per_class; ++k, ++s) {
      ds.labels[s] = c;
      for (std::size_t i = 0; i < cfg.neurons; ++i) {
        const double rate = templates[c * cfg.neurons + i];
        for (std::size_t t = 0; t < cfg.timesteps; ++t) {
          ds.spikes.at(s, i, t) = rng.bernoulli(rate) ? 1.0 : 0.0;
        }
      }
    }
  }
  return ds;
}

std::pair<Dataset, Dataset> split_dataset(const Dataset& ds, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw ConfigError("split_dataset: test_fraction must lie in (0, 1)");
  }
  std::vector<std::size_t> order(ds.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(mix_seed(seed, 0x5b1u));
  rng.shuffle(std::span<std::size_t>(order));
  const auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(ds.size())));
  std::vector<std::size_t> test_idx(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_test));
  std::vector<std::size_t> train_idx(order.begin() + static_cast<std::ptrdiff_t>(n_test), order.end());
  std::sort(test_idx.begin(), test_idx.end());
  std::sort(train_idx.begin(), train_idx.end());

  auto make = [&](const std::vector<std::size_t>& idx, Split split) {
    Dataset part;
    part.spikes = ds.gather(idx);
    part.labels = ds.gather_labels(idx);
    part.class_count = ds.class_count;
    part.split = split;
    return part;
  };
  return {make(train_idx, Split::Train), make(test_idx, Split::Test)};
}

EventStream parse_events_csv(std::istream& in, const std::string& source) {
  EventStream stream;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    const std::string_view view = trim(line);
    if (view.empty()) continue;
    if (first) {
      first = false;
      const bool header = std::any_of(view.begin(), view.end(),
                                      [](char c) { return std::isalpha(static_cast<unsigned char>(c)); });
      if (header) continue;
    }
    ++stream.lines;
    if (auto e = parse_event_line(view)) {
      stream.events.push_back(*e);
    } else {
      ++stream.malformed;
    }
  }
  if (stream.malformed * 100 > stream.lines) {
    throw DataError(source + ": " + std::to_string(stream.malformed) + " of " +
                    std::to_string(stream.lines) + " lines malformed (limit 1%)");
  }
  std::stable_sort(stream.events.begin(), stream.events.end(),
                   [](const EventRecord& a, const EventRecord& b) { return a.t < b.t; });
  return stream;
}

EventStream load_events_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read event file " + path.string());
  return parse_events_csv(in, path.string());
}

std::vector<ManifestEntry> load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read manifest " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError("manifest " + path.string() + ": " + e.what());
  }
  if (!doc.is_array()) throw DataError("manifest " + path.string() + ": expected a JSON array");
  std::vector<ManifestEntry> entries;
  for (const auto& item : doc) {
    try {
      ManifestEntry e;
      e.path = path.parent_path() / item.at("path").get<std::string>();
      e.label = item.at("label").get<std::size_t>();
      entries.push_back(std::move(e));
    } catch (const nlohmann::json::exception& ex) {
      throw DataError("manifest " + path.string() + ": bad entry: " + ex.what());
    }
  }
  return entries;
}

std::uint64_t BinningParams::hash() const {
  std::ostringstream s;
  s << "bin:" << grid_w << ',' << grid_h << ',' << timesteps << ',' << sensor_w << ',' << sensor_h;
  return hash_string(s.str());
}

DenseArray bin_events(std::span<const EventRecord> events, const BinningParams& params) {
  if (params.timesteps == 0 || params.grid_w == 0 || params.grid_h == 0) {
    throw ConfigError("bin_events: timesteps and grid dimensions must be >= 1");
  }
  if (events.empty()) throw EmptyInputError("bin_events: stream has no events");
  const std::size_t sensor_w = params.sensor_w ? params.sensor_w : params.grid_w;
  const std::size_t sensor_h = params.sensor_h ? params.sensor_h : params.grid_h;
  const std::size_t steps = params.timesteps;
  std::uint64_t t_min = events.front().t, t_max = events.front().t;
  for (const EventRecord& e : events) {
    t_min = std::min(t_min, e.t);
    t_max = std::max(t_max, e.t);
  }
  const std::uint64_t span = t_max - t_min;
  const std::size_t plane = params.grid_w * params.grid_h;
  DenseArray frame(Shape{params.neurons(), steps});
  for (const EventRecord& e : events) {
    if (e.x >= sensor_w || e.y >= sensor_h) {
      throw DataError("bin_events: event at (" + std::to_string(e.x) + "," + std::to_string(e.y) +
                      ") outside sensor " + std::to_string(sensor_w) + "x" + std::to_string(sensor_h));
    }
    const std::size_t gx = e.x * params.grid_w / sensor_w;
    const std::size_t gy = e.y * params.grid_h / sensor_h;
    std::size_t bin = 0;
    if (span > 0) {
      const unsigned __int128 scaled = static_cast<unsigned __int128>(e.t - t_min) * steps / span;
      bin = std::min<std::size_t>(static_cast<std::size_t>(scaled), steps - 1);
    }
    frame.at(e.polarity * plane + gy * params.grid_w + gx, bin) = 1.0;
  }
  return frame;
}

IngestResult ingest_events(const std::vector<ManifestEntry>& manifest, const BinningParams& params,
                           std::size_t class_count) {
  IngestResult result;
  std::vector<DenseArray> frames;
  for (const ManifestEntry& entry : manifest) {
    if (entry.label >= class_count) {
      throw DataError("manifest label " + std::to_string(entry.label) + " out of range for " +
                      std::to_string(class_count) + " classes");
    }
    EventStream stream = load_events_csv(entry.path);
    result.malformed_lines += stream.malformed;
    if (stream.events.empty()) {
      ++result.skipped_empty;
      continue;
    }
    frames.push_back(bin_events(stream.events, params));
    result.dataset.labels.push_back(entry.label);
    result.sources.push_back(entry.path);
  }
  const std::size_t n = params.neurons(), steps = params.timesteps;
  result.dataset.class_count = class_count;
  result.dataset.spikes = DenseArray(Shape{frames.size(), n, steps});
  for (std::size_t s = 0; s < frames.size(); ++s) {
    std::copy(frames[s].values().begin(), frames[s].values().end(),
              result.dataset.spikes.values().begin() + static_cast<std::ptrdiff_t>(s * n * steps));
  }
  return result;
}

void write_dataset_cache(const Dataset& ds, std::uint64_t params_hash, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write dataset cache " + path.string());
  out.write(kCacheMagic, sizeof kCacheMagic);
  put_u32(out, kCacheVersion);
  put_u64(out, params_hash);
  put_u32(out, static_cast<std::uint32_t>(ds.class_count));
  out.put(static_cast<char>(ds.split));
  put_u64(out, ds.size());
  put_u64(out, ds.neurons());
  put_u64(out, ds.timesteps());
  for (std::size_t l : ds.labels) put_u32(out, static_cast<std::uint32_t>(l));
  std::uint8_t byte = 0;
  std::size_t bit = 0;
  for (double v : ds.spikes.values()) {
    if (v != 0.0) byte |= static_cast<std::uint8_t>(1u << bit);
    if (++bit == 8) {
      out.put(static_cast<char>(byte));
      byte = 0;
      bit = 0;
    }
  }
  if (bit) out.put(static_cast<char>(byte));
  if (!out) throw IoError("failed writing dataset cache " + path.string());
}

std::optional<Dataset> read_dataset_cache(const std::filesystem::path& path, std::uint64_t params_hash) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  char magic[8];
  if (!in.read(magic, sizeof magic) || !std::equal(magic, magic + 8, kCacheMagic)) {
    throw DataError("dataset cache " + path.string() + ": bad magic");
  }
  if (get_uint(in, 4) != kCacheVersion) return std::nullopt;
  if (get_uint(in, 8) != params_hash) return std::nullopt;
  Dataset ds;
  ds.class_count = get_uint(in, 4);
  ds.split = static_cast<Split>(get_uint(in, 1));
  const std::size_t samples = get_uint(in, 8), neurons = get_uint(in, 8), steps = get_uint(in, 8);
  ds.labels.resize(samples);
  for (auto& l : ds.labels) l = get_uint(in, 4);
  ds.spikes = DenseArray(Shape{samples, neurons, steps});
  std::size_t bit = 8;
  std::uint64_t byte = 0;
  for (double& v : ds.spikes.values()) {
    if (bit == 8) {
      byte = get_uint(in, 1);
      bit = 0;
    }
    v = (byte >> bit++) & 1u ? 1.0 : 0.0;
  }
  ds.validate();
  return ds;
}

std::uint64_t poisson_hash(const PoissonConfig& cfg) {
  std::ostringstream s;
  s << "poisson:" << cfg.class_count << ',' << cfg.neurons << ',' << cfg.timesteps << ','
    << std::bit_cast<std::uint64_t>(cfg.rate_lo) << ',' << std::bit_cast<std::uint64_t>(cfg.rate_hi)
    << ',' << cfg.n_per_class << ',' << cfg.seed;
  return hash_string(s.str());
}

std::uint64_t file_hash(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return fnv1a(bytes);
}

}  // namespace aia
