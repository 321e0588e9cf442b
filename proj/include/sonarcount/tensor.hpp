#pragma once

#include <cstddef>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace sonarcount {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_size(const Shape& s) {
  return std::accumulate(s.begin(), s.end(), std::size_t{1}, std::multiplies<>());
}

inline std::string shape_string(const Shape& s) {
  std::string out = "[";
  for (std::size_t i = 0; i < s.size(); ++i) out += (i ? "x" : "") + std::to_string(s[i]);
  return out + "]";
}

/// Dense row-major tensor.
template <typename T>
struct Tensor {
  Shape shape;
  std::vector<T> values;

  Tensor() = default;
  explicit Tensor(Shape s, T fill = T(0)) : shape(std::move(s)), values(shape_size(shape), fill) {}
  Tensor(Shape s, std::vector<T> v) : shape(std::move(s)), values(std::move(v)) {
    if (values.size() != shape_size(shape)) {
      throw std::invalid_argument("tensor: " + std::to_string(values.size()) + " values do not fill " +
                                  shape_string(shape));
    }
  }

  std::size_t size() const { return values.size(); }
  T* data() { return values.data(); }
  const T* data() const { return values.data(); }
  T& operator[](std::size_t i) { return values[i]; }
  const T& operator[](std::size_t i) const { return values[i]; }

  template <typename U>
  Tensor<U> cast() const {
    return Tensor<U>(shape, std::vector<U>(values.begin(), values.end()));
  }

  friend bool operator==(const Tensor&, const Tensor&) = default;
};

}  // namespace sonarcount
