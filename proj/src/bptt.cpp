#include "aia/bptt.hpp"

#include <functional>

#include "aia/errors.hpp"
#include "aia/parallel.hpp"

namespace aia {

namespace {

void check_input(const Network& net, const DenseArray& input) {
  if (input.rank() != 3 || input.extent(1) != net.input_width ||
      input.extent(2) != net.timesteps) {
    throw DimensionError("forward_record: input " + shape_string(input.shape()) +
                         " does not match (batch, " + std::to_string(net.input_width) + ", " +
                         std::to_string(net.timesteps) + ")");
  }
}

// Forward for one sample, writing into the tape slices of index b.
void forward_sample(const Network& net, BpttTape& tape, std::size_t b) {
  const std::size_t steps = net.timesteps;
  std::vector<NeuronState> states;
  for (const Layer& l : net.layers) states.push_back(NeuronState::zeros(l.out_width()));

  std::vector<double> in(net.input_width), x, drive;
  for (std::size_t t = 0; t < steps; ++t) {
    in.resize(net.input_width);
    for (std::size_t j = 0; j < net.input_width; ++j) in[j] = tape.input.at(b, j, t);
    for (std::size_t n = 0; n < net.layers.size(); ++n) {
      const Layer& layer = net.layers[n];
      const std::size_t width = layer.out_width();
      x.assign(width, 0.0);
      matvec(layer.w, in, x);
      drive = x;
      if (layer.beta) {
        for (std::size_t i = 0; i < width; ++i) drive[i] = layer.beta->beta[i] * x[i];
      }
      NeuronState& s = states[n];
      integrate(s.u, s.o, drive, effective_leak(layer.neuron), layer.neuron, tape.mode);
      LayerTape& lt = tape.layers[n];
      for (std::size_t i = 0; i < width; ++i) {
        lt.x.at(b, i, t) = x[i];
        lt.u.at(b, i, t) = s.u[i];
        lt.o.at(b, i, t) = s.o[i];
      }
      in = s.o;
    }
  }
}

void check_tape(const BpttTape& tape, const DenseArray& d_readout, const Network& net) {
  if (!tape.complete || tape.layers.size() != net.layers.size() ||
      tape.timesteps != net.timesteps) {
    throw StateError("backward: tape is incomplete or does not belong to this network");
  }
  for (std::size_t n = 0; n < net.layers.size(); ++n) {
    const Shape expect{tape.batch, net.layers[n].out_width(), tape.timesteps};
    const LayerTape& lt = tape.layers[n];
    if (lt.x.shape() != expect || lt.u.shape() != expect || lt.o.shape() != expect) {
      throw StateError("backward: tape layer " + std::to_string(n) + " has wrong shape");
    }
  }
  if (d_readout.shape() != Shape{tape.batch, net.class_count()}) {
    throw DimensionError("backward: upstream gradient " + shape_string(d_readout.shape()) +
                         " does not match (batch, classes)");
  }
}

// Backward for one sample; gradients summed over timesteps into `grads`.
void backward_sample(const BpttTape& tape, const DenseArray& d_readout, const Network& net,
                     const BackwardOptions& options, std::size_t b, GradientSet& grads) {
  const std::size_t steps = tape.timesteps;
  const bool exact_reset = tape.mode == SpikeMode::Smoothed;

  // dL/do for the current layer, (neurons x T).
  std::size_t width = net.class_count();
  std::vector<double> g_o(width * steps);
  for (std::size_t c = 0; c < width; ++c) {
    for (std::size_t t = 0; t < steps; ++t) {
      g_o[c * steps + t] = d_readout.at(b, c) / static_cast<double>(steps);
    }
  }

  for (std::size_t n = net.layers.size(); n-- > 0;) {
    const Layer& layer = net.layers[n];
    const LayerTape& lt = tape.layers[n];
    const NeuronParams& p = layer.neuron;
    const NeuronModel model = p.model;
    const double leak = effective_leak(p);
    const std::size_t in_width = layer.in_width();
    const DenseArray& pre = n == 0 ? tape.input : tape.layers[n - 1].o;
    const bool need_spatial = n > 0;

    std::vector<double> g_in(need_spatial ? in_width * steps : 0, 0.0);
    std::vector<double> delta(width), delta_next(width, 0.0), coef(width), spatial(width);
    std::vector<double> pre_t(in_width);
    DenseArray& dW = grads.dW[n];
    double d_leak = 0.0;

    for (std::size_t t = steps; t-- > 0;) {
      const bool has_next = t + 1 < steps;
      for (std::size_t i = 0; i < width; ++i) {
        const double u = lt.u.at(b, i, t);
        const double o = lt.o.at(b, i, t);
        double go = g_o[i * steps + t];
        double carry = 0.0;
        if (has_next) {
          carry = delta_next[i] * leak * (1.0 - o);
          if (exact_reset) go += delta_next[i] * (-leak * u);
          if (model == NeuronModel::PLIF) d_leak += delta_next[i] * u * (1.0 - o);
        }
        delta[i] = go * spike_derivative(u, p, tape.mode) + carry;
      }
      for (std::size_t j = 0; j < in_width; ++j) pre_t[j] = pre.at(b, j, t);

      for (std::size_t i = 0; i < width; ++i) {
        switch (model) {
          case NeuronModel::AIA:
            coef[i] = lt.x.at(b, i, t) * delta[i];
            spatial[i] = delta[i];
            break;
          case NeuronModel::CachedAIA:
            coef[i] = layer.beta->beta[i] * delta[i];
            spatial[i] = coef[i];
            grads.dBeta[n][i] += delta[i] * lt.x.at(b, i, t);
            break;
          default:
            coef[i] = delta[i];
            spatial[i] = delta[i];
        }
      }

      if (model == NeuronModel::AIA && options.aia_form == AiaForm::Gated) {
        DenseArray step = aia_update_gated(layer.w, pre_t, delta);
        for (std::size_t k = 0; k < dW.size(); ++k) dW[k] += step[k];
        if (options.record_steps) {
          DenseArray& rec = grads.dW_steps[n][t];
          for (std::size_t k = 0; k < rec.size(); ++k) rec[k] += step[k];
        }
      } else {
        for (std::size_t i = 0; i < width; ++i) {
          if (coef[i] == 0.0) continue;
          std::span<double> row = dW.row(i);
          for (std::size_t j = 0; j < in_width; ++j) {
            if (pre_t[j] != 0.0) row[j] += coef[i] * pre_t[j];
          }
          if (options.record_steps) {
            std::span<double> rec = grads.dW_steps[n][t].row(i);
            for (std::size_t j = 0; j < in_width; ++j) {
              if (pre_t[j] != 0.0) rec[j] += coef[i] * pre_t[j];
            }
          }
        }
      }

      if (need_spatial) {
        for (std::size_t i = 0; i < width; ++i) {
          if (spatial[i] == 0.0) continue;
          std::span<const double> row = layer.w.row(i);
          for (std::size_t j = 0; j < in_width; ++j) g_in[j * steps + t] += row[j] * spatial[i];
        }
      }
      delta_next = delta;
    }

    if (model == NeuronModel::PLIF) {
      const double s = logistic(p.plif_raw);
      grads.dPlifRaw[n] += d_leak * s * (1.0 - s);
    }
    g_o = std::move(g_in);
    width = in_width;
  }
}

GradientSet backward_checked(const BpttTape& tape, const DenseArray& d_readout, const Network& net,
                             const BackwardOptions& options,
                             std::initializer_list<NeuronModel> allowed, const char* name) {
  for (std::size_t n = 0; n < net.layers.size(); ++n) {
    bool ok = false;
    for (NeuronModel m : allowed) ok = ok || net.layers[n].neuron.model == m;
    if (!ok) {
      throw ConfigError(std::string(name) + ": layer " + std::to_string(n) + " uses model " +
                        std::string(to_string(net.layers[n].neuron.model)));
    }
  }
  return backward(tape, d_readout, net, options);
}

}  // namespace

ForwardResult forward_record(const Network& net, const DenseArray& input, SpikeMode mode,
                             std::size_t threads) {
  net.validate();
  check_input(net, input);
  ForwardResult result;
  BpttTape& tape = result.tape;
  tape.mode = mode;
  tape.batch = input.extent(0);
  tape.timesteps = net.timesteps;
  tape.input = input;
  for (const Layer& l : net.layers) {
    const Shape shape{tape.batch, l.out_width(), tape.timesteps};
    tape.layers.push_back({DenseArray(shape), DenseArray(shape), DenseArray(shape)});
  }
  parallel_for(tape.batch, threads, [&](std::size_t b) { forward_sample(net, tape, b); });
  for (const LayerTape& lt : tape.layers) require_finite(lt.u.values(), "forward_record potential");
  tape.complete = true;
  result.readout = firing_rates(tape.output_spikes());
  return result;
}

LossResult readout_and_loss(const BpttTape& tape, std::span<const std::size_t> labels) {
  if (!tape.complete) throw StateError("readout_and_loss: incomplete tape");
  return readout_and_loss(tape.output_spikes(), labels);
}

GradientSet GradientSet::zeros_like(const Network& net, bool with_steps) {
  GradientSet g;
  for (const Layer& l : net.layers) {
    g.dW.emplace_back(l.w.shape());
    g.dBeta.emplace_back(l.beta ? l.beta->beta.size() : 0, 0.0);
    g.dPlifRaw.push_back(0.0);
    if (with_steps) g.dW_steps.emplace_back(net.timesteps, DenseArray(l.w.shape()));
  }
  return g;
}

void GradientSet::accumulate(const GradientSet& other) {
  for (std::size_t n = 0; n < dW.size(); ++n) {
    for (std::size_t k = 0; k < dW[n].size(); ++k) dW[n][k] += other.dW[n][k];
    for (std::size_t k = 0; k < dBeta[n].size(); ++k) dBeta[n][k] += other.dBeta[n][k];
    dPlifRaw[n] += other.dPlifRaw[n];
  }
  for (std::size_t n = 0; n < dW_steps.size() && n < other.dW_steps.size(); ++n) {
    for (std::size_t t = 0; t < dW_steps[n].size(); ++t) {
      for (std::size_t k = 0; k < dW_steps[n][t].size(); ++k) {
        dW_steps[n][t][k] += other.dW_steps[n][t][k];
      }
    }
  }
}

GradientSet backward(const BpttTape& tape, const DenseArray& d_readout, const Network& net,
                     const BackwardOptions& options) {
  check_tape(tape, d_readout, net);
  std::vector<GradientSet> per_sample(tape.batch);
  parallel_for(tape.batch, options.threads, [&](std::size_t b) {
    per_sample[b] = GradientSet::zeros_like(net, options.record_steps);
    backward_sample(tape, d_readout, net, options, b, per_sample[b]);
  });
  GradientSet total = GradientSet::zeros_like(net, options.record_steps);
  for (const GradientSet& g : per_sample) total.accumulate(g);
  for (std::size_t n = 0; n < total.dW.size(); ++n) {
    require_finite(total.dW[n].values(), "gradient of layer " + std::to_string(n) + " weights");
    require_finite(total.dBeta[n], "gradient of layer " + std::to_string(n) + " beta");
  }
  require_finite(total.dPlifRaw, "gradient of plif_raw");
  return total;
}

GradientSet backward_lif(const BpttTape& tape, const DenseArray& d_readout, const Network& net,
                         const BackwardOptions& options) {
  return backward_checked(tape, d_readout, net, options, {NeuronModel::LIF, NeuronModel::IF},
                          "backward_lif");
}

GradientSet backward_aia(const BpttTape& tape, const DenseArray& d_readout, const Network& net,
                         const BackwardOptions& options) {
  return backward_checked(tape, d_readout, net, options, {NeuronModel::AIA}, "backward_aia");
}

GradientSet backward_cached_aia(const BpttTape& tape, const DenseArray& d_readout,
                                const Network& net, const BackwardOptions& options) {
  return backward_checked(tape, d_readout, net, options, {NeuronModel::CachedAIA},
                          "backward_cached_aia");
}

GradientSet backward_plif(const BpttTape& tape, const DenseArray& d_readout, const Network& net,
                          const BackwardOptions& options) {
  return backward_checked(tape, d_readout, net, options, {NeuronModel::PLIF}, "backward_plif");
}

DenseArray aia_update_weighted_input(const DenseArray& w, std::span<const double> o_pre,
                                     std::span<const double> delta) {
  if (w.rank() != 2 || w.extent(1) != o_pre.size() || w.extent(0) != delta.size()) {
    throw DimensionError("aia_update_weighted_input: shape mismatch");
  }
  std::vector<double> x(delta.size());
  matvec(w, o_pre, x);
  DenseArray out(w.shape());
  for (std::size_t i = 0; i < delta.size(); ++i) {
    for (std::size_t j = 0; j < o_pre.size(); ++j) out.at(i, j) = x[i] * delta[i] * o_pre[j];
  }
  return out;
}

DenseArray aia_update_gated(const DenseArray& w, std::span<const double> o_pre,
                            std::span<const double> delta) {
  if (w.rank() != 2 || w.extent(1) != o_pre.size() || w.extent(0) != delta.size()) {
    throw DimensionError("aia_update_gated: shape mismatch");
  }
  DenseArray out(w.shape());
  for (std::size_t i = 0; i < delta.size(); ++i) {
    double assoc = 0.0;
    for (std::size_t k = 0; k < o_pre.size(); ++k) {
      const double lif_term = delta[i] * o_pre[k];
      assoc += o_pre[k] * w.at(i, k) * lif_term;
    }
    for (std::size_t j = 0; j < o_pre.size(); ++j) out.at(i, j) = o_pre[j] * assoc;
  }
  return out;
}

}  // namespace aia
