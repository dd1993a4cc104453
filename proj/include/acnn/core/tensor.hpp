#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "acnn/core/error.hpp"

namespace acnn {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_numel(const Shape& s) {
  return std::accumulate(s.begin(), s.end(), std::size_t{1}, std::multiplies<>());
}

inline std::string shape_string(const Shape& s) {
  std::string out = "[";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(s[i]);
  }
  return out + "]";
}

/// Dense row-major real array. Rank-4 tensors are (batch, channel, height, width).
template <class T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;
  explicit Tensor(Shape shape, T fill = T{0})
      : shape_(std::move(shape)), data_(shape_numel(shape_), fill) {}
  Tensor(Shape shape, std::vector<T> data) : shape_(std::move(shape)), data_(std::move(data)) {
    require(data_.size() == shape_numel(shape_), ErrorCategory::shape_mismatch,
            "tensor data length does not match shape " + shape_string(shape_));
  }

  static Tensor nchw(std::size_t n, std::size_t c, std::size_t h, std::size_t w, T fill = T{0}) {
    return Tensor(Shape{n, c, h, w}, fill);
  }

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t dim(std::size_t i) const { return shape_.at(i); }
  std::size_t numel() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  // rank-4 accessors
  std::size_t n() const { return shape_.at(0); }
  std::size_t c() const { return shape_.at(1); }
  std::size_t h() const { return shape_.at(2); }
  std::size_t w() const { return shape_.at(3); }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  T& at(std::size_t b, std::size_t ch, std::size_t r, std::size_t col) {
    return data_[((b * shape_[1] + ch) * shape_[2] + r) * shape_[3] + col];
  }
  const T& at(std::size_t b, std::size_t ch, std::size_t r, std::size_t col) const {
    return data_[((b * shape_[1] + ch) * shape_[2] + r) * shape_[3] + col];
  }

  T* data() noexcept { return data_.data(); }
  const T* data() const noexcept { return data_.data(); }
  std::span<T> values() noexcept { return data_; }
  std::span<const T> values() const noexcept { return data_; }
  std::vector<T>& storage() noexcept { return data_; }
  const std::vector<T>& storage() const noexcept { return data_; }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

  void reshape(Shape s) {
    require(shape_numel(s) == data_.size(), ErrorCategory::shape_mismatch,
            "cannot reshape " + shape_string(shape_) + " to " + shape_string(s));
    shape_ = std::move(s);
  }

  bool all_finite() const noexcept {
    return std::all_of(data_.begin(), data_.end(), [](T v) { return std::isfinite(v); });
  }

  template <class U>
  Tensor<U> cast() const {
    Tensor<U> out(shape_);
    std::transform(data_.begin(), data_.end(), out.data(), [](T v) { return static_cast<U>(v); });
    return out;
  }

  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

 private:
  Shape shape_;
  std::vector<T> data_;
};

/// Network feature array in single precision.
using ChannelTensor = Tensor<float>;

}  // namespace acnn
