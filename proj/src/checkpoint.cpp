#include "aia/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "aia/errors.hpp"

namespace aia {

namespace {

using nlohmann::json;

constexpr const char* kFormat = "aia-snn-checkpoint";
constexpr int kVersion = 1;

json encode_values(std::span<const double> values) {
  json arr = json::array();
  for (double v : values) arr.push_back(encode_double_hex(v));
  return arr;
}

std::vector<double> decode_values(const json& arr, std::size_t expected, const std::string& what) {
  if (!arr.is_array() || arr.size() != expected) {
    throw DataError("checkpoint: " + what + " must hold " + std::to_string(expected) + " values");
  }
  std::vector<double> out;
  out.reserve(expected);
  for (const json& v : arr) out.push_back(decode_double_hex(v.get<std::string>()));
  return out;
}

}  // namespace

std::string encode_double_hex(double v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(std::bit_cast<std::uint64_t>(v)));
  return buf;
}

double decode_double_hex(const std::string& hex) {
  if (hex.size() != 16) throw DataError("checkpoint: bad hex double '" + hex + "'");
  std::uint64_t bits = 0;
  for (char c : hex) {
    int d;
    if (c >= '0' && c <= '9') d = c - '0';
    else if (c >= 'a' && c <= 'f') d = c - 'a' + 10;
    else if (c >= 'A' && c <= 'F') d = c - 'A' + 10;
    else throw DataError("checkpoint: bad hex double '" + hex + "'");
    bits = (bits << 4) | static_cast<std::uint64_t>(d);
  }
  return std::bit_cast<double>(bits);
}

std::string checkpoint_to_string(const Network& net) {
  json doc;
  doc["format"] = kFormat;
  doc["version"] = kVersion;
  doc["seed"] = net.seed;
  doc["input_width"] = net.input_width;
  doc["timesteps"] = net.timesteps;
  json layers = json::array();
  for (const Layer& l : net.layers) {
    json jl;
    jl["model"] = std::string(to_string(l.neuron.model));
    jl["out"] = l.out_width();
    jl["in"] = l.in_width();
    jl["v_th"] = encode_double_hex(l.neuron.v_th);
    jl["lambda"] = encode_double_hex(l.neuron.lambda);
    jl["surrogate_width"] = encode_double_hex(l.neuron.surrogate_width);
    jl["plif_raw"] = encode_double_hex(l.neuron.plif_raw);
    jl["w"] = encode_values(l.w.values());
    if (l.beta) jl["beta"] = encode_values(l.beta->beta);
    layers.push_back(std::move(jl));
  }
  doc["layers"] = std::move(layers);
  return doc.dump(1);
}

Network checkpoint_from_string(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw DataError(std::string("checkpoint: invalid JSON: ") + e.what());
  }
  try {
    if (doc.at("format") != kFormat) throw DataError("checkpoint: unrecognized format tag");
    if (doc.at("version") != kVersion) throw DataError("checkpoint: unsupported version");
    Network net;
    net.seed = doc.at("seed").get<std::uint64_t>();
    net.input_width = doc.at("input_width").get<std::size_t>();
    net.timesteps = doc.at("timesteps").get<std::size_t>();
    for (const json& jl : doc.at("layers")) {
      Layer l;
      l.neuron.model = parse_neuron_model(jl.at("model").get<std::string>());
      l.neuron.v_th = decode_double_hex(jl.at("v_th"));
      l.neuron.lambda = decode_double_hex(jl.at("lambda"));
      l.neuron.surrogate_width = decode_double_hex(jl.at("surrogate_width"));
      l.neuron.plif_raw = decode_double_hex(jl.at("plif_raw"));
      const auto out = jl.at("out").get<std::size_t>();
      const auto in = jl.at("in").get<std::size_t>();
      l.w = DenseArray(Shape{out, in}, decode_values(jl.at("w"), out * in, "w"));
      if (jl.contains("beta")) l.beta = CacheBeta{decode_values(jl.at("beta"), out, "beta")};
      net.layers.push_back(std::move(l));
    }
    net.validate();
    return net;
  } catch (const json::exception& e) {
    throw DataError(std::string("checkpoint: malformed document: ") + e.what());
  } catch (const ConfigError& e) {
    throw DataError(std::string("checkpoint: ") + e.what());
  } catch (const DimensionError& e) {
    throw DataError(std::string("checkpoint: ") + e.what());
  }
}

void save_checkpoint(const Network& net, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint " + path.string());
  out << checkpoint_to_string(net) << '\n';
  if (!out) throw IoError("failed writing checkpoint " + path.string());
}

Network load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read checkpoint " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return checkpoint_from_string(ss.str());
}

}  // namespace aia
