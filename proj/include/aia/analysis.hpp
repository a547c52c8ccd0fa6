#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "aia/data.hpp"
#include "aia/network.hpp"

namespace aia {

struct SpikeCountReport {
  std::vector<std::size_t> widths;
  std::vector<std::uint64_t> counts;  // total spikes per layer over the set
  std::size_t samples = 0;
  std::size_t timesteps = 0;

  // Upper bound samples * width * T for layer n.
  std::uint64_t bound(std::size_t n) const;
  // Header: layer,width,spikes,bound
  std::string to_csv() const;
};

SpikeCountReport spike_count_report(const Network& net, const Dataset& ds, std::size_t threads = 1);

// Header: layer,width,spikes_a,spikes_b,delta,bound
std::string paired_spike_csv(const SpikeCountReport& a, const SpikeCountReport& b);

struct WeightShiftReport {
  std::vector<double> edges;
  std::vector<std::size_t> count_a;
  std::vector<std::size_t> count_b;
  std::vector<double> delta;  // (count_b - count_a) / total weights
  std::size_t total_weights = 0;

  // Header: bin_lo,bin_hi,count_a,count_b,delta
  std::string to_csv() const;
};

// Histogram change of all weights between two same-shaped networks.
WeightShiftReport weight_shift_report(const Network& a, const Network& b, std::span<const double> edges);

// `bins` equal bins over [-m, m] with m the largest |w| in either network,
// so every weight is covered. An odd bin count centres a bin on 0.
std::vector<double> default_weight_edges(const Network& a, const Network& b, std::size_t bins = 21);

}  // namespace aia
