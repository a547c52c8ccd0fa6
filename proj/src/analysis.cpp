#include "aia/analysis.hpp"

#include <cmath>
#include <cstdio>

#include "aia/errors.hpp"
#include "aia/training.hpp"

namespace aia {

namespace {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void require_same_shape(const Network& a, const Network& b) {
  bool same = a.layers.size() == b.layers.size() && a.input_width == b.input_width;
  for (std::size_t n = 0; same && n < a.layers.size(); ++n) {
    same = a.layers[n].w.shape() == b.layers[n].w.shape();
  }
  if (!same) throw DimensionError("networks have different layer shapes");
}

std::vector<double> all_weights(const Network& net) {
  std::vector<double> out;
  for (const Layer& l : net.layers) out.insert(out.end(), l.w.values().begin(), l.w.values().end());
  return out;
}

}  // namespace

std::uint64_t SpikeCountReport::bound(std::size_t n) const {
  return static_cast<std::uint64_t>(samples) * widths.at(n) * timesteps;
}

std::string SpikeCountReport::to_csv() const {
  std::string out = "layer,width,spikes,bound\n";
  for (std::size_t n = 0; n < counts.size(); ++n) {
    out += std::to_string(n) + "," + std::to_string(widths[n]) + "," + std::to_string(counts[n]) + "," +
           std::to_string(bound(n)) + "\n";
  }
  return out;
}

SpikeCountReport spike_count_report(const Network& net, const Dataset& ds, std::size_t threads) {
  SpikeCountReport report;
  for (const Layer& l : net.layers) report.widths.push_back(l.out_width());
  report.samples = ds.size();
  report.timesteps = net.timesteps;
  report.counts = evaluate(net, ds, 50, threads).spike_counts;
  return report;
}

std::string paired_spike_csv(const SpikeCountReport& a, const SpikeCountReport& b) {
  if (a.widths != b.widths) throw DimensionError("paired_spike_csv: layer widths differ");
  std::string out = "layer,width,spikes_a,spikes_b,delta,bound\n";
  for (std::size_t n = 0; n < a.counts.size(); ++n) {
    const auto delta = static_cast<long long>(b.counts[n]) - static_cast<long long>(a.counts[n]);
    out += std::to_string(n) + "," + std::to_string(a.widths[n]) + "," + std::to_string(a.counts[n]) +
           "," + std::to_string(b.counts[n]) + "," + std::to_string(delta) + "," +
           std::to_string(std::max(a.bound(n), b.bound(n))) + "\n";
  }
  return out;
}

WeightShiftReport weight_shift_report(const Network& a, const Network& b, std::span<const double> edges) {
  require_same_shape(a, b);
  WeightShiftReport report;
  report.edges.assign(edges.begin(), edges.end());
  const std::vector<double> wa = all_weights(a), wb = all_weights(b);
  report.count_a = histogram(wa, edges);
  report.count_b = histogram(wb, edges);
  report.total_weights = wa.size();
  for (std::size_t k = 0; k < report.count_a.size(); ++k) {
    report.delta.push_back((static_cast<double>(report.count_b[k]) - static_cast<double>(report.count_a[k])) /
                           static_cast<double>(report.total_weights));
  }
  return report;
}

std::string WeightShiftReport::to_csv() const {
  std::string out = "bin_lo,bin_hi,count_a,count_b,delta\n";
  for (std::size_t k = 0; k < delta.size(); ++k) {
    out += format_double(edges[k]) + "," + format_double(edges[k + 1]) + "," + std::to_string(count_a[k]) +
           "," + std::to_string(count_b[k]) + "," + format_double(delta[k]) + "\n";
  }
  return out;
}

std::vector<double> default_weight_edges(const Network& a, const Network& b, std::size_t bins) {
  if (bins == 0) throw ConfigError("default_weight_edges: need at least one bin");
  double m = 0.0;
  for (const Network* net : {&a, &b}) {
    for (const Layer& l : net->layers) {
      for (double w : l.w.values()) m = std::max(m, std::abs(w));
    }
  }
  if (m == 0.0) m = 1.0;
  std::vector<double> edges(bins + 1);
  for (std::size_t k = 0; k <= bins; ++k) {
    edges[k] = -m + 2.0 * m * static_cast<double>(k) / static_cast<double>(bins);
  }
  edges.front() = -m;
  edges.back() = m;
  return edges;
}

}  // namespace aia
