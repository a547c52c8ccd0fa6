#include "aia/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "aia/errors.hpp"

namespace aia {

namespace {

std::size_t element_count(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

bool is_scalar(const DenseArray& a) { return a.rank() == 0; }

template <typename Op>
DenseArray binary(const DenseArray& a, const DenseArray& b, Op op, const char* name) {
  if (a.shape() == b.shape()) {
    DenseArray out(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = op(a[i], b[i]);
    require_finite(out.values(), name);
    return out;
  }
  if (is_scalar(b)) {
    DenseArray out(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = op(a[i], b[0]);
    require_finite(out.values(), name);
    return out;
  }
  if (is_scalar(a)) {
    DenseArray out(b.shape());
    for (std::size_t i = 0; i < b.size(); ++i) out[i] = op(a[0], b[i]);
    require_finite(out.values(), name);
    return out;
  }
  throw DimensionError(std::string(name) + ": incompatible shapes " + shape_string(a.shape()) +
                       " and " + shape_string(b.shape()));
}

void require_nonempty(const DenseArray& a, const char* name) {
  if (a.empty()) throw EmptyInputError(std::string(name) + ": empty input");
}

}  // namespace

std::string shape_string(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

DenseArray::DenseArray(Shape shape, double fill)
    : shape_(std::move(shape)), data_(element_count(shape_), fill) {}

DenseArray::DenseArray(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (element_count(shape_) != data_.size()) {
    throw DimensionError("DenseArray: shape " + shape_string(shape_) + " needs " +
                         std::to_string(element_count(shape_)) + " values, got " +
                         std::to_string(data_.size()));
  }
}

DenseArray DenseArray::vector(std::initializer_list<double> values) {
  return DenseArray(Shape{values.size()}, std::vector<double>(values));
}

DenseArray DenseArray::matrix(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r ? rows.begin()->size() : 0;
  std::vector<double> data;
  data.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw DimensionError("DenseArray::matrix: ragged rows");
    data.insert(data.end(), row.begin(), row.end());
  }
  return DenseArray(Shape{r, c}, std::move(data));
}

bool DenseArray::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

void require_finite(std::span<const double> values, const std::string& what) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      throw NumericError(what + ": non-finite value at index " + std::to_string(i));
    }
  }
}

DenseArray matmul(const DenseArray& a, const DenseArray& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.extent(1) != b.extent(0)) {
    throw DimensionError("matmul: cannot multiply " + shape_string(a.shape()) + " by " +
                         shape_string(b.shape()));
  }
  const std::size_t m = a.extent(0), k = a.extent(1), n = b.extent(1);
  DenseArray out(Shape{m, n});
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t p = 0; p < k; ++p) acc += a.at(i, p) * b.at(p, j);
      out.at(i, j) = acc;
    }
  }
  require_finite(out.values(), "matmul");
  return out;
}

void matvec(const DenseArray& m, std::span<const double> x, std::span<double> y) {
  if (m.rank() != 2 || m.extent(1) != x.size() || m.extent(0) != y.size()) {
    throw DimensionError("matvec: matrix " + shape_string(m.shape()) + " with vector [" +
                         std::to_string(x.size()) + "] into [" + std::to_string(y.size()) + "]");
  }
  const std::size_t cols = x.size();
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double* w = m.values().data() + i * cols;
    double acc = 0.0;
    for (std::size_t j = 0; j < cols; ++j) acc += w[j] * x[j];
    y[i] = acc;
  }
}

DenseArray add(const DenseArray& a, const DenseArray& b) {
  return binary(a, b, std::plus<>(), "add");
}

DenseArray sub(const DenseArray& a, const DenseArray& b) {
  return binary(a, b, std::minus<>(), "sub");
}

DenseArray mul(const DenseArray& a, const DenseArray& b) {
  return binary(a, b, std::multiplies<>(), "mul");
}

DenseArray scale(const DenseArray& a, double factor) {
  return binary(a, DenseArray::scalar(factor), std::multiplies<>(), "scale");
}

DenseArray heaviside_ge(const DenseArray& a, double threshold) {
  return heaviside_ge(a, DenseArray::scalar(threshold));
}

DenseArray heaviside_ge(const DenseArray& a, const DenseArray& threshold) {
  return binary(a, threshold, [](double u, double th) { return u >= th ? 1.0 : 0.0; },
                "heaviside_ge");
}

double sum(const DenseArray& a) {
  require_nonempty(a, "sum");
  double acc = 0.0;
  for (double v : a.values()) acc += v;
  return acc;
}

double mean(const DenseArray& a) { return sum(a) / static_cast<double>(a.size()); }

DenseArray sum(const DenseArray& a, std::size_t axis) {
  require_nonempty(a, "sum");
  if (axis >= a.rank()) {
    throw DimensionError("sum: axis " + std::to_string(axis) + " out of range for " +
                         shape_string(a.shape()));
  }
  Shape out_shape = a.shape();
  out_shape.erase(out_shape.begin() + static_cast<std::ptrdiff_t>(axis));
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= a.extent(i);
  for (std::size_t i = axis + 1; i < a.rank(); ++i) inner *= a.extent(i);
  const std::size_t n = a.extent(axis);
  DenseArray out(out_shape);
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t k = 0; k < n; ++k) {
      for (std::size_t i = 0; i < inner; ++i) {
        out[o * inner + i] += a[(o * n + k) * inner + i];
      }
    }
  }
  return out;
}

DenseArray mean(const DenseArray& a, std::size_t axis) {
  DenseArray s = sum(a, axis);
  return scale(s, 1.0 / static_cast<double>(a.extent(axis)));
}

std::size_t argmax(std::span<const double> values) {
  if (values.empty()) throw EmptyInputError("argmax: empty input");
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

std::size_t argmax(const DenseArray& a) { return argmax(a.values()); }

std::vector<std::size_t> histogram(std::span<const double> values, std::span<const double> edges) {
  if (values.empty()) throw EmptyInputError("histogram: empty input");
  if (edges.size() < 2) throw DimensionError("histogram: need at least two bin edges");
  if (!std::is_sorted(edges.begin(), edges.end()) ||
      std::adjacent_find(edges.begin(), edges.end()) != edges.end()) {
    throw DimensionError("histogram: bin edges must be strictly increasing");
  }
  require_finite(values, "histogram");
  std::vector<std::size_t> counts(edges.size() - 1, 0);
  for (double v : values) {
    if (v < edges.front() || v > edges.back()) continue;
    auto it = std::upper_bound(edges.begin(), edges.end(), v);
    std::size_t bin = static_cast<std::size_t>(it - edges.begin()) - 1;
    if (bin == counts.size()) bin = counts.size() - 1;  // v == last edge
    ++counts[bin];
  }
  return counts;
}

std::vector<std::size_t> histogram(const DenseArray& a, std::span<const double> edges) {
  return histogram(a.values(), edges);
}

}  // namespace aia
