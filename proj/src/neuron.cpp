#include "aia/neuron.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "aia/errors.hpp"
#include "aia/numerics.hpp"

namespace aia {

std::string_view to_string(NeuronModel model) {
  switch (model) {
    case NeuronModel::LIF: return "lif";
    case NeuronModel::IF: return "if";
    case NeuronModel::PLIF: return "plif";
    case NeuronModel::AIA: return "aia";
    case NeuronModel::CachedAIA: return "cached-aia";
  }
  return "unknown";
}

NeuronModel parse_neuron_model(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "lif") return NeuronModel::LIF;
  if (lower == "if") return NeuronModel::IF;
  if (lower == "plif") return NeuronModel::PLIF;
  if (lower == "aia") return NeuronModel::AIA;
  if (lower == "cached-aia" || lower == "cachedaia" || lower == "cached_aia") {
    return NeuronModel::CachedAIA;
  }
  throw ConfigError("unknown neuron model '" + std::string(name) +
                    "' (expected lif, if, plif, aia, cached-aia)");
}

NeuronParams NeuronParams::for_model(NeuronModel model) {
  NeuronParams p;
  p.model = model;
  if (model == NeuronModel::IF) p.lambda = 1.0;
  return p;
}

void NeuronParams::validate() const {
  if (!(v_th > 0.0) || !std::isfinite(v_th)) throw ConfigError("v_th must be positive and finite");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw ConfigError("lambda must lie in [0, 1]");
  if (!(surrogate_width > 0.0) || !std::isfinite(surrogate_width)) {
    throw ConfigError("surrogate_width must be positive and finite");
  }
  if (model == NeuronModel::IF && lambda != 1.0) throw ConfigError("IF neurons require lambda == 1");
  if (!std::isfinite(plif_raw)) throw ConfigError("plif_raw must be finite");
}

double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

double effective_leak(const NeuronParams& p) {
  switch (p.model) {
    case NeuronModel::IF: return 1.0;
    case NeuronModel::PLIF: return logistic(p.plif_raw);
    default: return p.lambda;
  }
}

double spike(double u, const NeuronParams& p, SpikeMode mode) {
  if (mode == SpikeMode::Hard) return u >= p.v_th ? 1.0 : 0.0;
  return logistic((u - p.v_th) / p.surrogate_width);
}

double spike_derivative(double u, const NeuronParams& p, SpikeMode mode) {
  const double a = p.surrogate_width;
  if (mode == SpikeMode::Hard) return std::abs(u - p.v_th) <= a / 2.0 ? 1.0 / a : 0.0;
  const double s = logistic((u - p.v_th) / a);
  return s * (1.0 - s) / a;
}

void integrate(std::span<double> u, std::span<double> o, std::span<const double> drive,
               double leak, const NeuronParams& p, SpikeMode mode) {
  for (std::size_t i = 0; i < u.size(); ++i) {
    u[i] = leak * u[i] * (1.0 - o[i]) + drive[i];
    o[i] = spike(u[i], p, mode);
  }
}

namespace {

NeuronState step_with(const NeuronState& state, std::span<const double> drive, double leak,
                      const NeuronParams& p) {
  if (drive.size() != state.size() || state.o.size() != state.u.size()) {
    throw DimensionError("neuron step: state has " + std::to_string(state.size()) +
                         " neurons, input has " + std::to_string(drive.size()));
  }
  require_finite(drive, "neuron step input");
  NeuronState next = state;
  integrate(next.u, next.o, drive, leak, p);
  return next;
}

}  // namespace

NeuronState lif_step(const NeuronState& state, std::span<const double> x, const NeuronParams& p) {
  return step_with(state, x, p.lambda, p);
}

NeuronState if_step(const NeuronState& state, std::span<const double> x, const NeuronParams& p) {
  return step_with(state, x, 1.0, p);
}

NeuronState plif_step(const NeuronState& state, std::span<const double> x, const NeuronParams& p) {
  return step_with(state, x, logistic(p.plif_raw), p);
}

NeuronState aia_step(const NeuronState& state, std::span<const double> x, const NeuronParams& p) {
  return step_with(state, x, p.lambda, p);
}

NeuronState cached_aia_step(const NeuronState& state, std::span<const double> x,
                            const NeuronParams& p, const CacheBeta& beta) {
  if (beta.beta.size() != state.size()) {
    throw DimensionError("cached_aia_step: beta has " + std::to_string(beta.beta.size()) +
                         " entries for " + std::to_string(state.size()) + " neurons");
  }
  if (x.size() != state.size()) {
    throw DimensionError("cached_aia_step: state has " + std::to_string(state.size()) +
                         " neurons, input has " + std::to_string(x.size()));
  }
  std::vector<double> drive(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) drive[i] = beta.beta[i] * x[i];
  return step_with(state, drive, p.lambda, p);
}

std::vector<double> surrogate_spike_derivative(std::span<const double> u, const NeuronParams& p) {
  require_finite(u, "surrogate_spike_derivative");
  std::vector<double> d(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) d[i] = spike_derivative(u[i], p, SpikeMode::Hard);
  return d;
}

}  // namespace aia
