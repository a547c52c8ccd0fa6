#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "aia/neuron.hpp"
#include "aia/numerics.hpp"

namespace aia {

struct LayerSpec {
  std::size_t width = 0;
  NeuronParams neuron;
};

struct NetworkSpec {
  std::size_t input_width = 0;
  std::size_t timesteps = 10;
  std::vector<LayerSpec> layers;

  // Same neuron parameters on every layer.
  static NetworkSpec uniform(std::size_t input_width, std::vector<std::size_t> widths,
                             std::size_t timesteps, const NeuronParams& neuron);
};

// One fully-connected spiking layer. `w` is (out x in).
struct Layer {
  DenseArray w;
  NeuronParams neuron;
  std::optional<CacheBeta> beta;  // present iff neuron.model == CachedAIA

  std::size_t in_width() const { return w.extent(1); }
  std::size_t out_width() const { return w.extent(0); }
};

struct Network {
  std::size_t input_width = 0;
  std::size_t timesteps = 0;
  std::uint64_t seed = 0;
  std::vector<Layer> layers;

  std::size_t class_count() const { return layers.empty() ? 0 : layers.back().out_width(); }
  NetworkSpec spec() const;
  // Throws ConfigError/DimensionError on broken topology or parameters.
  void validate() const;
};

// Kaiming-normal weights (std = sqrt(2 / fan_in)), beta = 1, plif_raw = 0.
Network init_network(const NetworkSpec& spec, std::uint64_t seed);

// Trainable scalars: weights, plus beta entries and plif_raw where present.
std::size_t parameter_count(const Network& net);

// Folds every CachedAIA layer's beta into its weight rows (w'_ij = beta_i w_ij);
// the merged layer becomes a plain LIF layer with no cache.
Network merge_beta(const Network& net);

struct LossResult {
  double loss = 0.0;
  DenseArray readout;    // (batch, classes): firing rate per class
  DenseArray d_readout;  // dL/d readout
  std::vector<std::size_t> predictions;
};

// Output firing rates over `output_spikes` (batch, classes, T), then
// mean-over-batch softmax cross-entropy. Ties in prediction go to the lower
// class index.
LossResult readout_and_loss(const DenseArray& output_spikes, std::span<const std::size_t> labels);

// Readout only (no labels).
DenseArray firing_rates(const DenseArray& output_spikes);

}  // namespace aia
