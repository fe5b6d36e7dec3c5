#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <numeric>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace docqg::nd {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

inline std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

/// Dense row-major array of rank 1 or 2. A rank-1 array of length n is
/// treated as a 1 x n row wherever a matrix view is needed.
template <typename T>
class Array {
 public:
  using value_type = T;

  Array() = default;

  explicit Array(Shape shape, T fill = T{0})
      : shape_(std::move(shape)), values_(shape_size(shape_), fill) {
    validate_shape();
  }

  Array(Shape shape, std::vector<T> values)
      : shape_(std::move(shape)), values_(std::move(values)) {
    validate_shape();
    if (values_.size() != shape_size(shape_)) {
      throw std::invalid_argument("Array: " + std::to_string(values_.size()) +
                                  " values do not fill shape " +
                                  shape_string(shape_));
    }
  }

  static Array row(std::initializer_list<T> values) {
    return Array({1, values.size()}, std::vector<T>(values));
  }

  static Array vector(std::initializer_list<T> values) {
    return Array({values.size()}, std::vector<T>(values));
  }

  static Array matrix(std::initializer_list<std::initializer_list<T>> rows) {
    const std::size_t n = rows.size();
    const std::size_t m = n ? rows.begin()->size() : 0;
    std::vector<T> values;
    values.reserve(n * m);
    for (const auto& r : rows) {
      if (r.size() != m) throw std::invalid_argument("Array::matrix: ragged rows");
      values.insert(values.end(), r.begin(), r.end());
    }
    return Array({n, m}, std::move(values));
  }

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  std::size_t rows() const { return shape_.size() == 2 ? shape_[0] : 1; }
  std::size_t cols() const {
    return shape_.empty() ? 0 : shape_.back();
  }

  T* data() { return values_.data(); }
  const T* data() const { return values_.data(); }
  std::span<T> values() { return values_; }
  std::span<const T> values() const { return values_; }
  std::vector<T>& storage() { return values_; }
  const std::vector<T>& storage() const { return values_; }

  T& operator[](std::size_t i) { return values_[i]; }
  const T& operator[](std::size_t i) const { return values_[i]; }
  T& at(std::size_t r, std::size_t c) { return values_[r * cols() + c]; }
  const T& at(std::size_t r, std::size_t c) const {
    return values_[r * cols() + c];
  }

  std::span<const T> row_span(std::size_t r) const {
    return std::span<const T>(values_).subspan(r * cols(), cols());
  }

  bool all_finite() const {
    return std::all_of(values_.begin(), values_.end(),
                       [](T v) { return std::isfinite(v); });
  }

  void fill(T v) { std::fill(values_.begin(), values_.end(), v); }

  friend bool operator==(const Array& a, const Array& b) {
    return a.shape_ == b.shape_ && a.values_ == b.values_;
  }

 private:
  void validate_shape() const {
    if (shape_.empty() || shape_.size() > 2) {
      throw std::invalid_argument("Array: rank must be 1 or 2, got shape " +
                                  shape_string(shape_));
    }
    for (auto e : shape_) {
      if (e == 0) {
        throw std::invalid_argument("Array: zero extent in shape " +
                                    shape_string(shape_));
      }
    }
  }

  Shape shape_;
  std::vector<T> values_;
};

template <typename To, typename From>
Array<To> cast(const Array<From>& a) {
  std::vector<To> out(a.values().begin(), a.values().end());
  return Array<To>(a.shape(), std::move(out));
}

}  // namespace docqg::nd
