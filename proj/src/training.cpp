#include "aia/training.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>

#include <json.hpp>

#include "aia/errors.hpp"
#include "aia/random.hpp"

namespace aia {

namespace {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

Adam::Adam(const AdamConfig& cfg, std::size_t size) : cfg_(cfg), m_(size, 0.0), v_(size, 0.0) {
  if (!(cfg.learning_rate >= 0.0)) throw ConfigError("learning_rate must be >= 0");
}

void Adam::step(std::span<double> params, std::span<const double> grads) {
  if (params.size() != m_.size() || grads.size() != m_.size()) {
    throw DimensionError("Adam::step: parameter block size changed");
  }
  ++steps_;
  const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(steps_));
  for (std::size_t k = 0; k < params.size(); ++k) {
    m_[k] = cfg_.beta1 * m_[k] + (1.0 - cfg_.beta1) * grads[k];
    v_[k] = cfg_.beta2 * v_[k] + (1.0 - cfg_.beta2) * grads[k] * grads[k];
    const double m_hat = m_[k] / c1;
    const double v_hat = v_[k] / c2;
    params[k] -= cfg_.learning_rate * m_hat / (std::sqrt(v_hat) + cfg_.eps);
  }
}

NetworkOptimizer::NetworkOptimizer(const AdamConfig& cfg, const Network& net) {
  for (const Layer& l : net.layers) {
    weights_.emplace_back(cfg, l.w.size());
    betas_.emplace_back(cfg, l.beta ? l.beta->beta.size() : 0);
    leaks_.emplace_back(cfg, 1);
  }
}

void NetworkOptimizer::step(Network& net, const GradientSet& grads) {
  for (std::size_t n = 0; n < net.layers.size(); ++n) {
    Layer& l = net.layers[n];
    weights_[n].step(l.w.values(), grads.dW[n].values());
    if (l.beta) betas_[n].step(l.beta->beta, grads.dBeta[n]);
    if (l.neuron.model == NeuronModel::PLIF) {
      leaks_[n].step(std::span<double>(&l.neuron.plif_raw, 1),
                     std::span<const double>(&grads.dPlifRaw[n], 1));
    }
  }
}

std::string first_nonfinite_parameter(const Network& net) {
  for (std::size_t n = 0; n < net.layers.size(); ++n) {
    const Layer& l = net.layers[n];
    const std::string prefix = "layer" + std::to_string(n);
    for (std::size_t i = 0; i < l.out_width(); ++i) {
      for (std::size_t j = 0; j < l.in_width(); ++j) {
        if (!std::isfinite(l.w.at(i, j))) {
          return prefix + ".w[" + std::to_string(i) + "," + std::to_string(j) + "]";
        }
      }
    }
    if (l.beta) {
      for (std::size_t i = 0; i < l.beta->beta.size(); ++i) {
        if (!std::isfinite(l.beta->beta[i])) return prefix + ".beta[" + std::to_string(i) + "]";
      }
    }
    if (!std::isfinite(l.neuron.plif_raw)) return prefix + ".plif_raw";
  }
  return "";
}

EvalResult evaluate(const Network& net, const Dataset& ds, std::size_t batch_size, std::size_t threads) {
  if (ds.neurons() != net.input_width || ds.timesteps() != net.timesteps) {
    throw DimensionError("evaluate: dataset (" + std::to_string(ds.neurons()) + " neurons, T=" +
                         std::to_string(ds.timesteps()) + ") does not fit network (" +
                         std::to_string(net.input_width) + ", T=" + std::to_string(net.timesteps) + ")");
  }
  if (ds.class_count > net.class_count()) throw DimensionError("evaluate: more classes than outputs");
  batch_size = std::max<std::size_t>(1, batch_size);
  EvalResult result;
  result.spike_counts.assign(net.layers.size(), 0);
  result.readout = DenseArray(Shape{ds.size(), net.class_count()});
  double loss_sum = 0.0;
  std::size_t correct = 0;
  for (std::size_t start = 0; start < ds.size(); start += batch_size) {
    const std::size_t end = std::min(ds.size(), start + batch_size);
    std::vector<std::size_t> idx(end - start);
    std::iota(idx.begin(), idx.end(), start);
    const std::vector<std::size_t> labels = ds.gather_labels(idx);
    ForwardResult fwd = forward_record(net, ds.gather(idx), SpikeMode::Hard, threads);
    LossResult loss = readout_and_loss(fwd.tape, labels);
    loss_sum += loss.loss * static_cast<double>(idx.size());
    for (std::size_t k = 0; k < idx.size(); ++k) {
      if (loss.predictions[k] == labels[k]) ++correct;
      result.predictions.push_back(loss.predictions[k]);
      for (std::size_t c = 0; c < net.class_count(); ++c) {
        result.readout.at(start + k, c) = loss.readout.at(k, c);
      }
    }
    for (std::size_t n = 0; n < net.layers.size(); ++n) {
      std::uint64_t count = 0;
      for (double v : fwd.tape.layers[n].o.values()) count += v != 0.0;
      result.spike_counts[n] += count;
    }
  }
  if (ds.size() > 0) {
    result.loss = loss_sum / static_cast<double>(ds.size());
    result.accuracy = static_cast<double>(correct) / static_cast<double>(ds.size());
  }
  return result;
}

TrainResult train(const Network& initial, const Dataset& train_set, const Dataset& test_set,
                  const TrainConfig& cfg) {
  if (cfg.batch_size == 0) throw ConfigError("batch_size must be >= 1");
  if (!(cfg.adam.learning_rate >= 0.0)) throw ConfigError("learning_rate must be >= 0");
  if (train_set.neurons() != initial.input_width || train_set.timesteps() != initial.timesteps) {
    throw DimensionError("train: dataset shape does not match network input");
  }
  if (train_set.size() == 0) throw EmptyInputError("train: empty training set");

  TrainResult result{initial, {}};
  Network& net = result.network;
  result.metrics.model = std::string(to_string(net.layers.front().neuron.model));
  NetworkOptimizer optimizer(cfg.adam, net);
  std::vector<std::size_t> order(train_set.size());

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) try {
    const auto started = std::chrono::steady_clock::now();
    EpochMetrics em;
    em.epoch = epoch;
    em.shuffle_seed = mix_seed(cfg.seed, epoch);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(em.shuffle_seed);
    rng.shuffle(std::span<std::size_t>(order));

    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      std::span<const std::size_t> idx(order.data() + start, end - start);
      const std::vector<std::size_t> labels = train_set.gather_labels(idx);
      ForwardResult fwd = forward_record(net, train_set.gather(idx), SpikeMode::Hard, cfg.threads);
      LossResult loss = readout_and_loss(fwd.tape, labels);
      if (!std::isfinite(loss.loss)) {
        const std::string bad = first_nonfinite_parameter(net);
        throw DivergenceError("loss became non-finite in epoch " + std::to_string(epoch) +
                              (bad.empty() ? "" : "; first bad parameter " + bad));
      }
      loss_sum += loss.loss * static_cast<double>(idx.size());
      for (std::size_t k = 0; k < idx.size(); ++k) correct += loss.predictions[k] == labels[k];

      BackwardOptions opts;
      opts.threads = cfg.threads;
      GradientSet grads = backward(fwd.tape, loss.d_readout, net, opts);
      optimizer.step(net, grads);
      const std::string bad = first_nonfinite_parameter(net);
      if (!bad.empty()) {
        throw DivergenceError("parameter " + bad + " became non-finite in epoch " + std::to_string(epoch));
      }
    }
    em.train_loss = loss_sum / static_cast<double>(train_set.size());
    em.train_accuracy = static_cast<double>(correct) / static_cast<double>(train_set.size());
    if (test_set.size() > 0) {
      EvalResult ev = evaluate(net, test_set, 50, cfg.threads);
      em.test_loss = ev.loss;
      em.test_accuracy = ev.accuracy;
      if (epoch == cfg.epochs) result.metrics.test_spike_counts = ev.spike_counts;
    }
    em.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    result.metrics.epochs.push_back(em);
  } catch (const NumericError& e) {
    const std::string bad = first_nonfinite_parameter(net);
    throw DivergenceError("training blew up in epoch " + std::to_string(epoch) + " (" + e.what() + ")" +
                          (bad.empty() ? "" : "; first bad parameter " + bad));
  }
  if (cfg.epochs == 0 && test_set.size() > 0) {
    result.metrics.test_spike_counts = evaluate(net, test_set, 50, cfg.threads).spike_counts;
  }
  return result;
}

std::string RunMetrics::to_csv() const {
  std::string out = "epoch,split,loss,accuracy\n";
  for (const EpochMetrics& e : epochs) {
    out += std::to_string(e.epoch) + ",train," + format_double(e.train_loss) + "," +
           format_double(e.train_accuracy) + "\n";
    out += std::to_string(e.epoch) + ",test," + format_double(e.test_loss) + "," +
           format_double(e.test_accuracy) + "\n";
  }
  return out;
}

std::string RunMetrics::to_json() const {
  nlohmann::json doc;
  doc["model"] = model;
  nlohmann::json rows = nlohmann::json::array();
  for (const EpochMetrics& e : epochs) {
    rows.push_back({{"epoch", e.epoch},
                    {"shuffle_seed", e.shuffle_seed},
                    {"train_loss", e.train_loss},
                    {"train_accuracy", e.train_accuracy},
                    {"test_loss", e.test_loss},
                    {"test_accuracy", e.test_accuracy},
                    {"wall_seconds", e.wall_seconds}});
  }
  doc["epochs"] = std::move(rows);
  doc["test_spike_counts"] = test_spike_counts;
  return doc.dump(2);
}

}  // namespace aia
