#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace aia {

using Shape = std::vector<std::size_t>;

std::string shape_string(const Shape& shape);

// Dense row-major array of doubles. A rank-0 array (empty shape) holds a
// single scalar.
class DenseArray {
 public:
  DenseArray() : shape_{0} {}
  explicit DenseArray(Shape shape, double fill = 0.0);
  DenseArray(Shape shape, std::vector<double> data);

  static DenseArray scalar(double v) { return DenseArray(Shape{}, {v}); }
  static DenseArray vector(std::initializer_list<double> values);
  static DenseArray matrix(std::initializer_list<std::initializer_list<double>> rows);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  std::size_t extent(std::size_t axis) const { return shape_.at(axis); }
  bool empty() const { return data_.empty(); }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }
  const std::vector<double>& raw() const { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  double& at(std::size_t r, std::size_t c) { return data_[r * shape_[1] + c]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * shape_[1] + c]; }

  double& at(std::size_t a, std::size_t b, std::size_t c) {
    return data_[(a * shape_[1] + b) * shape_[2] + c];
  }
  double at(std::size_t a, std::size_t b, std::size_t c) const {
    return data_[(a * shape_[1] + b) * shape_[2] + c];
  }

  // Row r of a 2D array.
  std::span<double> row(std::size_t r) { return {data_.data() + r * shape_[1], shape_[1]}; }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * shape_[1], shape_[1]};
  }

  bool all_finite() const;

  friend bool operator==(const DenseArray&, const DenseArray&) = default;

 private:
  Shape shape_;
  std::vector<double> data_;
};

// Throws NumericError naming `what` if any value is NaN/Inf.
void require_finite(std::span<const double> values, const std::string& what);

DenseArray matmul(const DenseArray& a, const DenseArray& b);

// y = m * x for a 2D matrix and a vector span; fixed left-to-right summation.
void matvec(const DenseArray& m, std::span<const double> x, std::span<double> y);

DenseArray add(const DenseArray& a, const DenseArray& b);
DenseArray sub(const DenseArray& a, const DenseArray& b);
DenseArray mul(const DenseArray& a, const DenseArray& b);
DenseArray scale(const DenseArray& a, double factor);
// 1.0 where a >= threshold, else 0.0.
DenseArray heaviside_ge(const DenseArray& a, double threshold);
DenseArray heaviside_ge(const DenseArray& a, const DenseArray& threshold);

double sum(const DenseArray& a);
double mean(const DenseArray& a);
// Reduces along `axis`, dropping it from the shape.
DenseArray sum(const DenseArray& a, std::size_t axis);
DenseArray mean(const DenseArray& a, std::size_t axis);
// Flat index of the maximum; ties resolve to the lowest index.
std::size_t argmax(std::span<const double> values);
std::size_t argmax(const DenseArray& a);

// Counts per bin [edges[k], edges[k+1]); the last bin is closed on the right.
// Values outside [edges.front(), edges.back()] are not counted.
std::vector<std::size_t> histogram(std::span<const double> values, std::span<const double> edges);
std::vector<std::size_t> histogram(const DenseArray& a, std::span<const double> edges);

}  // namespace aia
