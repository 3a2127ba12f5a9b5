#pragma once

#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "crydet/errors.hpp"

namespace crydet {

// Dense row-major tensor. Weights/activations are float; the gradient engine
// is also instantiated at double for the finite-difference suite.
template <typename T>
struct BasicTensor {
  std::vector<int64_t> shape;
  std::vector<T> data;

  BasicTensor() = default;

  explicit BasicTensor(std::vector<int64_t> s)
      : shape(std::move(s)), data(count(shape), T{0}) {}

  BasicTensor(std::vector<int64_t> s, std::vector<T> d)
      : shape(std::move(s)), data(std::move(d)) {
    if (static_cast<int64_t>(data.size()) != count(shape)) {
      throw DimensionError("tensor data length does not match shape");
    }
  }

  static BasicTensor zeros(std::vector<int64_t> s) { return BasicTensor(std::move(s)); }

  static BasicTensor full(std::vector<int64_t> s, T v) {
    BasicTensor t(std::move(s));
    std::fill(t.data.begin(), t.data.end(), v);
    return t;
  }

  static int64_t count(const std::vector<int64_t>& s) {
    int64_t n = 1;
    for (int64_t d : s) {
      if (d < 0) throw DimensionError("negative dimension");
      n *= d;
    }
    return n;
  }

  int64_t numel() const { return static_cast<int64_t>(data.size()); }
  int rank() const { return static_cast<int>(shape.size()); }

  int64_t dim(int i) const { return shape.at(static_cast<size_t>(i)); }

  T& operator[](int64_t i) { return data[static_cast<size_t>(i)]; }
  const T& operator[](int64_t i) const { return data[static_cast<size_t>(i)]; }

  T& at2(int64_t r, int64_t c) { return data[static_cast<size_t>(r * shape[1] + c)]; }
  const T& at2(int64_t r, int64_t c) const {
    return data[static_cast<size_t>(r * shape[1] + c)];
  }

  T& at4(int64_t n, int64_t c, int64_t y, int64_t x) {
    return data[static_cast<size_t>(((n * shape[1] + c) * shape[2] + y) * shape[3] + x)];
  }
  const T& at4(int64_t n, int64_t c, int64_t y, int64_t x) const {
    return data[static_cast<size_t>(((n * shape[1] + c) * shape[2] + y) * shape[3] + x)];
  }

  bool same_shape(const BasicTensor& other) const { return shape == other.shape; }

  std::string shape_str() const {
    std::ostringstream oss;
    oss << "[";
    for (size_t i = 0; i < shape.size(); ++i) {
      if (i) oss << ",";
      oss << shape[i];
    }
    oss << "]";
    return oss.str();
  }

  template <typename U>
  BasicTensor<U> cast() const {
    BasicTensor<U> out;
    out.shape = shape;
    out.data.resize(data.size());
    for (size_t i = 0; i < data.size(); ++i) out.data[i] = static_cast<U>(data[i]);
    return out;
  }
};

using Tensor = BasicTensor<float>;
using Tensor64 = BasicTensor<double>;

inline std::string shape_to_string(const std::vector<int64_t>& s) {
  std::ostringstream oss;
  oss << "[";
  for (size_t i = 0; i < s.size(); ++i) {
    if (i) oss << ",";
    oss << s[i];
  }
  oss << "]";
  return oss.str();
}

template <typename T>
inline void require_shape(const BasicTensor<T>& t, const std::vector<int64_t>& shape,
                          const char* what) {
  if (t.shape != shape) {
    throw DimensionError(std::string(what) + ": expected " + shape_to_string(shape) +
                         ", got " + t.shape_str());
  }
}

}  // namespace crydet
