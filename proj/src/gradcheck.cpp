#include "aia/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>

#include "aia/errors.hpp"
#include "aia/random.hpp"

namespace aia {

namespace {

// A perturbation of one weight entry, optionally restricted to one
// (sample, timestep) pair.
struct WeightNudge {
  std::size_t layer = 0, row = 0, col = 0;
  std::optional<std::size_t> sample;
  std::optional<std::size_t> step;
  double delta = 0.0;
};

// Straight-line smoothed forward and loss, written independently of
// forward_record. If `record_x` is given it receives layer `record_layer`'s
// weighted input as (batch, neurons, T).
double smoothed_loss(const Network& net, const DenseArray& input, std::span<const std::size_t> labels,
                     const std::optional<WeightNudge>& nudge, DenseArray* record_x = nullptr,
                     std::size_t record_layer = 0) {
  const std::size_t batch = input.extent(0), steps = net.timesteps;
  const std::size_t classes = net.class_count();
  double loss = 0.0;
  for (std::size_t b = 0; b < batch; ++b) {
    std::vector<std::vector<double>> u(net.layers.size()), o(net.layers.size());
    for (std::size_t n = 0; n < net.layers.size(); ++n) {
      u[n].assign(net.layers[n].out_width(), 0.0);
      o[n].assign(net.layers[n].out_width(), 0.0);
    }
    std::vector<double> counts(classes, 0.0);
    for (std::size_t t = 0; t < steps; ++t) {
      std::vector<double> in(net.input_width);
      for (std::size_t j = 0; j < in.size(); ++j) in[j] = input.at(b, j, t);
      for (std::size_t n = 0; n < net.layers.size(); ++n) {
        const Layer& l = net.layers[n];
        const NeuronParams& p = l.neuron;
        double leak = p.lambda;
        if (p.model == NeuronModel::IF) leak = 1.0;
        if (p.model == NeuronModel::PLIF) leak = 1.0 / (1.0 + std::exp(-p.plif_raw));
        for (std::size_t i = 0; i < l.out_width(); ++i) {
          double x = 0.0;
          for (std::size_t j = 0; j < l.in_width(); ++j) {
            double w = l.w.at(i, j);
            if (nudge && nudge->layer == n && nudge->row == i && nudge->col == j &&
                (!nudge->sample || *nudge->sample == b) && (!nudge->step || *nudge->step == t)) {
              w += nudge->delta;
            }
            x += w * in[j];
          }
          if (record_x && n == record_layer) record_x->at(b, i, t) = x;
          const double drive = l.beta ? l.beta->beta[i] * x : x;
          u[n][i] = leak * u[n][i] * (1.0 - o[n][i]) + drive;
        }
        for (std::size_t i = 0; i < l.out_width(); ++i) {
          o[n][i] = 1.0 / (1.0 + std::exp(-(u[n][i] - p.v_th) / p.surrogate_width));
        }
        in = o[n];
      }
      for (std::size_t c = 0; c < classes; ++c) counts[c] += in[c];
    }
    // Softmax cross-entropy on the firing rate.
    double peak = -1e300;
    for (double& c : counts) {
      c /= static_cast<double>(steps);
      peak = std::max(peak, c);
    }
    double z = 0.0;
    for (double c : counts) z += std::exp(c - peak);
    loss += -(counts[labels[b]] - peak - std::log(z));
  }
  return loss / static_cast<double>(batch);
}

double rel_error(double analytic, double numeric, double floor) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / denom;
}

}  // namespace

std::string GradcheckReport::to_text() const {
  std::string out;
  char buf[160];
  for (const GradcheckEntry& e : entries) {
    std::snprintf(buf, sizeof buf, "%-10s %-16s %.3e %s\n", std::string(to_string(model)).c_str(),
                  e.parameter.c_str(), e.max_rel_error, e.pass ? "PASS" : "FAIL");
    out += buf;
  }
  return out;
}

GradcheckReport gradcheck(const Network& net, const DenseArray& input,
                          std::span<const std::size_t> labels, const GradcheckOptions& options) {
  net.validate();
  ForwardResult fwd = forward_record(net, input, SpikeMode::Smoothed);
  LossResult loss = readout_and_loss(fwd.tape, labels);
  GradientSet analytic = backward(fwd.tape, loss.d_readout, net);
  if (options.tamper) options.tamper(analytic);

  const double h = options.step;
  const std::size_t batch = input.extent(0), steps = net.timesteps;
  GradcheckReport report;
  report.model = net.layers.front().neuron.model;
  report.pass = true;
  auto finish = [&](std::string name, double worst) {
    const bool ok = worst <= options.tolerance;
    report.entries.push_back({std::move(name), worst, ok});
    report.pass = report.pass && ok;
  };

  for (std::size_t n = 0; n < net.layers.size(); ++n) {
    const Layer& layer = net.layers[n];
    const std::string prefix = "layer" + std::to_string(n);
    double worst = 0.0;
    if (layer.neuron.model == NeuronModel::AIA) {
      DenseArray x(Shape{batch, layer.out_width(), steps});
      smoothed_loss(net, input, labels, std::nullopt, &x, n);
      for (std::size_t i = 0; i < layer.out_width(); ++i) {
        for (std::size_t j = 0; j < layer.in_width(); ++j) {
          double numeric = 0.0;
          for (std::size_t b = 0; b < batch; ++b) {
            for (std::size_t t = 0; t < steps; ++t) {
              const double lp = smoothed_loss(net, input, labels, WeightNudge{n, i, j, b, t, h});
              const double lm = smoothed_loss(net, input, labels, WeightNudge{n, i, j, b, t, -h});
              numeric += x.at(b, i, t) * (lp - lm) / (2.0 * h);
            }
          }
          worst = std::max(worst, rel_error(analytic.dW[n].at(i, j), numeric, options.error_floor));
        }
      }
    } else {
      for (std::size_t i = 0; i < layer.out_width(); ++i) {
        for (std::size_t j = 0; j < layer.in_width(); ++j) {
          const double lp = smoothed_loss(net, input, labels, WeightNudge{n, i, j, {}, {}, h});
          const double lm = smoothed_loss(net, input, labels, WeightNudge{n, i, j, {}, {}, -h});
          worst = std::max(worst, rel_error(analytic.dW[n].at(i, j), (lp - lm) / (2.0 * h),
                                            options.error_floor));
        }
      }
    }
    finish(prefix + ".w", worst);

    if (layer.beta) {
      worst = 0.0;
      for (std::size_t i = 0; i < layer.out_width(); ++i) {
        Network plus = net, minus = net;
        plus.layers[n].beta->beta[i] += h;
        minus.layers[n].beta->beta[i] -= h;
        const double numeric = (smoothed_loss(plus, input, labels, std::nullopt) -
                                smoothed_loss(minus, input, labels, std::nullopt)) / (2.0 * h);
        worst = std::max(worst, rel_error(analytic.dBeta[n][i], numeric, options.error_floor));
      }
      finish(prefix + ".beta", worst);
    }
    if (layer.neuron.model == NeuronModel::PLIF) {
      Network plus = net, minus = net;
      plus.layers[n].neuron.plif_raw += h;
      minus.layers[n].neuron.plif_raw -= h;
      const double numeric = (smoothed_loss(plus, input, labels, std::nullopt) -
                              smoothed_loss(minus, input, labels, std::nullopt)) / (2.0 * h);
      finish(prefix + ".plif_raw", rel_error(analytic.dPlifRaw[n], numeric, options.error_floor));
    }
  }
  return report;
}

std::vector<GradcheckReport> gradcheck_suite(const GradcheckSuiteConfig& cfg,
                                             const GradcheckOptions& options) {
  if (cfg.input_width == 0 || cfg.hidden == 0 || cfg.classes == 0 || cfg.timesteps == 0 ||
      cfg.batch == 0) {
    throw ConfigError("gradcheck: all sizes must be >= 1");
  }
  Rng rng(cfg.seed);
  DenseArray input(Shape{cfg.batch, cfg.input_width, cfg.timesteps});
  for (double& v : input.values()) v = rng.bernoulli(0.6) ? 1.0 : 0.0;
  std::vector<std::size_t> labels(cfg.batch);
  for (auto& l : labels) l = rng.index(cfg.classes);

  std::vector<GradcheckReport> reports;
  for (NeuronModel model : {NeuronModel::LIF, NeuronModel::IF, NeuronModel::PLIF, NeuronModel::AIA,
                            NeuronModel::CachedAIA}) {
    NetworkSpec spec = NetworkSpec::uniform(cfg.input_width, {cfg.hidden, cfg.classes},
                                            cfg.timesteps, NeuronParams::for_model(model));
    Network net = init_network(spec, mix_seed(cfg.seed, static_cast<std::uint64_t>(model)));
    for (Layer& l : net.layers) {
      for (double& w : l.w.values()) w *= cfg.weight_scale;
      if (l.beta) {
        for (double& b : l.beta->beta) b = rng.uniform(0.5, 1.5);
      }
      if (model == NeuronModel::PLIF) l.neuron.plif_raw = rng.uniform(-1.0, 1.0);
    }
    reports.push_back(gradcheck(net, input, labels, options));
  }
  return reports;
}

}  // namespace aia
