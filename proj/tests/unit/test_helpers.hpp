#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "aia/network.hpp"
#include "aia/random.hpp"

namespace testutil {

inline aia::Network make_net(aia::NeuronModel model, std::vector<aia::DenseArray> weights,
                             std::size_t timesteps) {
  aia::Network net;
  net.input_width = weights.front().extent(1);
  net.timesteps = timesteps;
  for (auto& w : weights) {
    aia::Layer layer;
    layer.neuron = aia::NeuronParams::for_model(model);
    if (model == aia::NeuronModel::CachedAIA) layer.beta = aia::CacheBeta::ones(w.extent(0));
    layer.w = std::move(w);
    net.layers.push_back(std::move(layer));
  }
  return net;
}

inline aia::Network retag(aia::Network net, aia::NeuronModel model) {
  for (auto& layer : net.layers) {
    layer.neuron.model = model;
    if (model == aia::NeuronModel::CachedAIA && !layer.beta) {
      layer.beta = aia::CacheBeta::ones(layer.out_width());
    }
    if (model != aia::NeuronModel::CachedAIA) layer.beta.reset();
  }
  return net;
}

// Random binary spike input (batch, width, T).
inline aia::DenseArray random_spikes(std::size_t batch, std::size_t width, std::size_t t,
                                     double p, std::uint64_t seed) {
  aia::Rng rng(seed);
  aia::DenseArray a(aia::Shape{batch, width, t});
  for (double& v : a.values()) v = rng.bernoulli(p) ? 1.0 : 0.0;
  return a;
}

inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("aia_unit_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testutil
