#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace aia {

enum class NeuronModel { LIF, IF, PLIF, AIA, CachedAIA };

// Hard: Heaviside spikes with a rectangular surrogate in backward (training).
// Smoothed: logistic spikes with their exact derivative (gradient checking).
enum class SpikeMode { Hard, Smoothed };

std::string_view to_string(NeuronModel model);
// Accepts "lif", "if", "plif", "aia", "cached-aia" (case-insensitive).
NeuronModel parse_neuron_model(std::string_view name);

struct NeuronParams {
  NeuronModel model = NeuronModel::LIF;
  double v_th = 1.0;
  double lambda = 0.5;
  double plif_raw = 0.0;
  double surrogate_width = 1.0;

  // Defaults for `model`; IF gets lambda = 1.
  static NeuronParams for_model(NeuronModel model);

  // Throws ConfigError when an invariant is violated.
  void validate() const;
};

double logistic(double z);

// Leak actually applied by the update: 1 for IF, logistic(plif_raw) for
// PLIF, lambda otherwise.
double effective_leak(const NeuronParams& p);

struct NeuronState {
  std::vector<double> u;
  std::vector<double> o;

  static NeuronState zeros(std::size_t n) { return {std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)}; }
  std::size_t size() const { return u.size(); }

  friend bool operator==(const NeuronState&, const NeuronState&) = default;
};

// Per-neuron cache scalars of a CachedAIA layer.
struct CacheBeta {
  std::vector<double> beta;

  static CacheBeta ones(std::size_t n) { return {std::vector<double>(n, 1.0)}; }
};

// Spike nonlinearity for one potential value.
double spike(double u, const NeuronParams& p, SpikeMode mode);
// d spike / du: rectangular surrogate in Hard mode, exact logistic slope in
// Smoothed mode.
double spike_derivative(double u, const NeuronParams& p, SpikeMode mode);

// Shared update kernel: u' = leak*u*(1-o) + drive, o' = spike(u').
// `drive` is the already-transformed input f(x).
void integrate(std::span<double> u, std::span<double> o, std::span<const double> drive,
               double leak, const NeuronParams& p, SpikeMode mode = SpikeMode::Hard);

NeuronState lif_step(const NeuronState& state, std::span<const double> x, const NeuronParams& p);
NeuronState if_step(const NeuronState& state, std::span<const double> x, const NeuronParams& p);
NeuronState plif_step(const NeuronState& state, std::span<const double> x, const NeuronParams& p);
// Forward f(x) = x; AIA differs from LIF only in its weight-gradient rule.
NeuronState aia_step(const NeuronState& state, std::span<const double> x, const NeuronParams& p);
// Forward f(x) = beta * x, elementwise per postsynaptic neuron.
NeuronState cached_aia_step(const NeuronState& state, std::span<const double> x,
                            const NeuronParams& p, const CacheBeta& beta);

// Rectangular window: 1/a where |u - v_th| <= a/2, else 0.
std::vector<double> surrogate_spike_derivative(std::span<const double> u, const NeuronParams& p);

}  // namespace aia
