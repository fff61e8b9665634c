#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <limits>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "homnet/error.hpp"

namespace homnet {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>{});
}

inline std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << ']';
  return os.str();
}

/// Dense row-major array. Value type; copies are deep.
template <typename T>
struct Tensor {
  Shape shape;
  std::vector<T> data;

  Tensor() = default;
  explicit Tensor(Shape s, T fill = T{0}) : shape(std::move(s)), data(shape_size(shape), fill) {}
  Tensor(Shape s, std::vector<T> values) : shape(std::move(s)), data(std::move(values)) {
    if (data.size() != shape_size(shape)) {
      throw Error(ErrorCode::ShapeMismatch, "tensor data length " + std::to_string(data.size()) +
                                                " does not match shape " + shape_string(shape));
    }
  }

  static Tensor matrix(std::size_t rows, std::size_t cols, std::initializer_list<T> values) {
    return Tensor({rows, cols}, std::vector<T>(values));
  }

  std::size_t size() const { return data.size(); }
  std::size_t rank() const { return shape.size(); }
  std::size_t rows() const { return shape.at(0); }
  std::size_t cols() const { return shape.size() > 1 ? shape[1] : 1; }

  T& operator()(std::size_t r, std::size_t c) { return data[r * shape[1] + c]; }
  const T& operator()(std::size_t r, std::size_t c) const { return data[r * shape[1] + c]; }

  std::span<T> span() { return data; }
  std::span<const T> span() const { return data; }

  // Branch-free so the compiler can vectorize it; NaN fails the comparison.
  bool all_finite() const {
    constexpr T kMax = std::numeric_limits<T>::max();
    int bad = 0;
    for (const T& v : data) bad |= !(std::abs(v) <= kMax);
    return bad == 0;
  }

  template <typename U>
  Tensor<U> cast() const {
    Tensor<U> out;
    out.shape = shape;
    out.data.assign(data.begin(), data.end());
    return out;
  }

  friend bool operator==(const Tensor&, const Tensor&) = default;
};

}  // namespace homnet
