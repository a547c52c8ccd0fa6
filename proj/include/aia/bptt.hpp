#pragma once

#include <span>
#include <vector>

#include "aia/network.hpp"
#include "aia/neuron.hpp"
#include "aia/numerics.hpp"

namespace aia {

// Per-layer record of one forward pass; every array is (batch, neurons, T).
// `x` is the weighted input sum_j w_ij o_j before any beta scaling, `u` the
// potential after integration (before the next step's reset), `o` the spikes.
struct LayerTape {
  DenseArray x;
  DenseArray u;
  DenseArray o;
};

struct BpttTape {
  SpikeMode mode = SpikeMode::Hard;
  std::size_t batch = 0;
  std::size_t timesteps = 0;
  DenseArray input;  // (batch, input_width, T)
  std::vector<LayerTape> layers;
  bool complete = false;

  const DenseArray& output_spikes() const { return layers.back().o; }
};

struct ForwardResult {
  BpttTape tape;
  DenseArray readout;  // (batch, classes)
};

// Unrolls the network over T steps from the zero state.
ForwardResult forward_record(const Network& net, const DenseArray& input,
                             SpikeMode mode = SpikeMode::Hard, std::size_t threads = 1);

LossResult readout_and_loss(const BpttTape& tape, std::span<const std::size_t> labels);

struct GradientSet {
  std::vector<DenseArray> dW;
  std::vector<std::vector<double>> dBeta;  // empty for layers without beta
  std::vector<double> dPlifRaw;            // 0 for non-PLIF layers
  // Per-timestep weight-gradient contributions [layer][t], summed over the
  // batch; filled only when BackwardOptions::record_steps is set.
  std::vector<std::vector<DenseArray>> dW_steps;

  static GradientSet zeros_like(const Network& net, bool with_steps = false);
  void accumulate(const GradientSet& other);
};

// Two algebraically equal forms of the AIA weight update.
enum class AiaForm {
  WeightedInput,  // (sum_k w_ik o_k) * dL/du_i * o_j
  Gated,          // o_j * sum_k o_k w_ik (dL/du_i o_k)
};

struct BackwardOptions {
  bool record_steps = false;
  AiaForm aia_form = AiaForm::WeightedInput;
  std::size_t threads = 1;
};

// Backward for any mix of layer models; each layer applies its own rule.
GradientSet backward(const BpttTape& tape, const DenseArray& d_readout, const Network& net,
                     const BackwardOptions& options = {});

// Rule-specific entry points; they reject networks containing other models.
GradientSet backward_lif(const BpttTape& tape, const DenseArray& d_readout, const Network& net,
                         const BackwardOptions& options = {});
GradientSet backward_aia(const BpttTape& tape, const DenseArray& d_readout, const Network& net,
                         const BackwardOptions& options = {});
GradientSet backward_cached_aia(const BpttTape& tape, const DenseArray& d_readout,
                                const Network& net, const BackwardOptions& options = {});
GradientSet backward_plif(const BpttTape& tape, const DenseArray& d_readout, const Network& net,
                          const BackwardOptions& options = {});

// Single-timestep AIA weight updates for one layer, given weights (out x in),
// presynaptic spikes o (in) and dL/du (out).
DenseArray aia_update_weighted_input(const DenseArray& w, std::span<const double> o_pre,
                                     std::span<const double> delta);
DenseArray aia_update_gated(const DenseArray& w, std::span<const double> o_pre,
                            std::span<const double> delta);

}  // namespace aia
