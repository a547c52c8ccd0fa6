#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "aia/bptt.hpp"
#include "aia/data.hpp"
#include "aia/network.hpp"

namespace aia {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Bias-corrected Adam over one flat parameter block.
class Adam {
 public:
  Adam(const AdamConfig& cfg, std::size_t size);

  void step(std::span<double> params, std::span<const double> grads);
  std::size_t steps_taken() const { return steps_; }

 private:
  AdamConfig cfg_;
  std::vector<double> m_;
  std::vector<double> v_;
  std::size_t steps_ = 0;
};

// One Adam instance per parameter tensor of a network (w, beta, plif_raw).
class NetworkOptimizer {
 public:
  NetworkOptimizer(const AdamConfig& cfg, const Network& net);
  void step(Network& net, const GradientSet& grads);

 private:
  std::vector<Adam> weights_;
  std::vector<Adam> betas_;
  std::vector<Adam> leaks_;
};

struct TrainConfig {
  std::size_t epochs = 50;
  std::size_t batch_size = 10;
  AdamConfig adam;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
};

struct EpochMetrics {
  std::size_t epoch = 0;
  std::uint64_t shuffle_seed = 0;
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  double test_loss = 0.0;
  double test_accuracy = 0.0;
  double wall_seconds = 0.0;
};

struct RunMetrics {
  std::string model;
  std::vector<EpochMetrics> epochs;
  std::vector<std::uint64_t> test_spike_counts;  // per layer, final network

  // Flat "epoch,split,loss,accuracy" table; wall-clock is left out so reruns
  // are byte-identical.
  std::string to_csv() const;
  std::string to_json() const;
};

struct EvalResult {
  double loss = 0.0;
  double accuracy = 0.0;
  std::vector<std::uint64_t> spike_counts;  // per layer, summed over samples
  DenseArray readout;                       // (samples, classes)
  std::vector<std::size_t> predictions;
};

EvalResult evaluate(const Network& net, const Dataset& ds, std::size_t batch_size = 50,
                    std::size_t threads = 1);

struct TrainResult {
  Network network;
  RunMetrics metrics;
};

// Throws DivergenceError naming the first non-finite parameter.
TrainResult train(const Network& net, const Dataset& train_set, const Dataset& test_set,
                  const TrainConfig& cfg);

// Name of the first non-finite parameter entry ("layer1.w[2,3]"), or "".
std::string first_nonfinite_parameter(const Network& net);

}  // namespace aia
