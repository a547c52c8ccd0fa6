#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "aia/bptt.hpp"
#include "aia/network.hpp"

namespace aia {

struct GradcheckEntry {
  std::string parameter;  // e.g. "layer0.w", "layer1.beta", "layer0.plif_raw"
  double max_rel_error = 0.0;
  bool pass = false;
};

struct GradcheckReport {
  NeuronModel model = NeuronModel::LIF;
  std::vector<GradcheckEntry> entries;
  bool pass = false;

  // One line per parameter tensor: "<model> <parameter> <max_rel_error> PASS|FAIL".
  std::string to_text() const;
};

struct GradcheckOptions {
  double step = 1e-4;
  double tolerance = 1e-3;
  // Entries are compared as |a - n| / max(|a|, |n|, error_floor).
  double error_floor = 1e-6;
  // Test hook applied to the analytic gradients before comparison.
  std::function<void(GradientSet&)> tamper;
};

// Compares smoothed-mode analytic gradients against central differences of
// the smoothed loss. AIA weights are checked against differences taken with
// respect to per-(sample, timestep) copies of each weight, scaled by the
// recorded weighted input, since the AIA rule modulates only the local weight
// update.
GradcheckReport gradcheck(const Network& net, const DenseArray& input,
                          std::span<const std::size_t> labels, const GradcheckOptions& options = {});

struct GradcheckSuiteConfig {
  std::size_t input_width = 4;
  std::size_t hidden = 6;
  std::size_t classes = 3;
  std::size_t timesteps = 3;
  std::size_t batch = 2;
  std::uint64_t seed = 1;
  // Spread of the random weights; larger values make more neurons cross
  // threshold in the smoothed forward.
  double weight_scale = 1.0;
};

// Runs gradcheck for LIF, IF, PLIF, AIA and CachedAIA on random 2-layer nets.
// Non-trivial beta and plif_raw values are drawn so their gradients are tested
// away from the initialization point.
std::vector<GradcheckReport> gradcheck_suite(const GradcheckSuiteConfig& cfg,
                                             const GradcheckOptions& options = {});

}  // namespace aia
