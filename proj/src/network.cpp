#include "aia/network.hpp"

#include <cmath>

#include "aia/errors.hpp"
#include "aia/random.hpp"

namespace aia {

NetworkSpec NetworkSpec::uniform(std::size_t input_width, std::vector<std::size_t> widths,
                                 std::size_t timesteps, const NeuronParams& neuron) {
  NetworkSpec spec;
  spec.input_width = input_width;
  spec.timesteps = timesteps;
  for (std::size_t w : widths) spec.layers.push_back({w, neuron});
  return spec;
}

NetworkSpec Network::spec() const {
  NetworkSpec s;
  s.input_width = input_width;
  s.timesteps = timesteps;
  for (const Layer& l : layers) s.layers.push_back({l.out_width(), l.neuron});
  return s;
}

void Network::validate() const {
  if (layers.empty()) throw ConfigError("network has no layers");
  if (timesteps == 0) throw ConfigError("timesteps must be >= 1");
  std::size_t expected_in = input_width;
  for (std::size_t n = 0; n < layers.size(); ++n) {
    const Layer& l = layers[n];
    if (l.w.rank() != 2 || l.in_width() != expected_in || l.out_width() == 0) {
      throw DimensionError("layer " + std::to_string(n) + ": weight shape " +
                           shape_string(l.w.shape()) + " does not take " +
                           std::to_string(expected_in) + " inputs");
    }
    l.neuron.validate();
    const bool cached = l.neuron.model == NeuronModel::CachedAIA;
    if (cached != l.beta.has_value()) {
      throw ConfigError("layer " + std::to_string(n) + ": beta must be present iff model is cached-aia");
    }
    if (cached && l.beta->beta.size() != l.out_width()) {
      throw DimensionError("layer " + std::to_string(n) + ": beta length mismatch");
    }
    expected_in = l.out_width();
  }
}

Network init_network(const NetworkSpec& spec, std::uint64_t seed) {
  if (spec.layers.empty()) throw ConfigError("init_network: empty layer list");
  if (spec.input_width == 0) throw ConfigError("init_network: input width must be >= 1");
  if (spec.timesteps == 0) throw ConfigError("init_network: timesteps must be >= 1");
  Rng rng(seed);
  Network net;
  net.input_width = spec.input_width;
  net.timesteps = spec.timesteps;
  net.seed = seed;
  std::size_t fan_in = spec.input_width;
  for (const LayerSpec& ls : spec.layers) {
    if (ls.width == 0) throw ConfigError("init_network: layer widths must be >= 1");
    ls.neuron.validate();
    Layer layer;
    layer.neuron = ls.neuron;
    layer.neuron.plif_raw = 0.0;
    layer.w = DenseArray(Shape{ls.width, fan_in});
    const double stddev = std::sqrt(2.0 / static_cast<double>(fan_in));
    for (double& v : layer.w.values()) v = rng.normal(0.0, stddev);
    if (ls.neuron.model == NeuronModel::CachedAIA) layer.beta = CacheBeta::ones(ls.width);
    net.layers.push_back(std::move(layer));
    fan_in = ls.width;
  }
  return net;
}

std::size_t parameter_count(const Network& net) {
  std::size_t count = 0;
  for (const Layer& l : net.layers) {
    count += l.w.size();
    if (l.beta) count += l.beta->beta.size();
    if (l.neuron.model == NeuronModel::PLIF) count += 1;
  }
  return count;
}

Network merge_beta(const Network& net) {
  Network merged = net;
  for (Layer& l : merged.layers) {
    if (!l.beta) continue;
    for (std::size_t i = 0; i < l.out_width(); ++i) {
      const double b = l.beta->beta[i];
      for (double& w : l.w.row(i)) w *= b;
    }
    l.beta.reset();
    l.neuron.model = NeuronModel::LIF;
  }
  return merged;
}

DenseArray firing_rates(const DenseArray& output_spikes) {
  if (output_spikes.rank() != 3) {
    throw DimensionError("firing_rates: expected (batch, classes, T), got " +
                         shape_string(output_spikes.shape()));
  }
  const std::size_t batch = output_spikes.extent(0), classes = output_spikes.extent(1),
                    steps = output_spikes.extent(2);
  DenseArray rates(Shape{batch, classes});
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t c = 0; c < classes; ++c) {
      double acc = 0.0;
      for (std::size_t t = 0; t < steps; ++t) acc += output_spikes.at(b, c, t);
      rates.at(b, c) = acc / static_cast<double>(steps);
    }
  }
  return rates;
}

LossResult readout_and_loss(const DenseArray& output_spikes, std::span<const std::size_t> labels) {
  LossResult result;
  result.readout = firing_rates(output_spikes);
  const std::size_t batch = result.readout.extent(0), classes = result.readout.extent(1);
  if (labels.size() != batch) {
    throw DimensionError("readout_and_loss: " + std::to_string(labels.size()) + " labels for batch of " +
                         std::to_string(batch));
  }
  if (batch == 0) throw EmptyInputError("readout_and_loss: empty batch");
  result.d_readout = DenseArray(Shape{batch, classes});
  result.predictions.resize(batch);
  double total = 0.0;
  std::vector<double> prob(classes);
  for (std::size_t b = 0; b < batch; ++b) {
    if (labels[b] >= classes) {
      throw DataError("label " + std::to_string(labels[b]) + " out of range for " +
                      std::to_string(classes) + " classes");
    }
    std::span<const double> r = result.readout.row(b);
    const double peak = r[argmax(r)];
    double z = 0.0;
    for (std::size_t c = 0; c < classes; ++c) {
      prob[c] = std::exp(r[c] - peak);
      z += prob[c];
    }
    for (double& p : prob) p /= z;
    total += -(r[labels[b]] - peak - std::log(z));
    for (std::size_t c = 0; c < classes; ++c) {
      result.d_readout.at(b, c) =
          (prob[c] - (c == labels[b] ? 1.0 : 0.0)) / static_cast<double>(batch);
    }
    result.predictions[b] = argmax(r);
  }
  result.loss = total / static_cast<double>(batch);
  return result;
}

}  // namespace aia
