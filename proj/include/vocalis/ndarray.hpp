// Copyright 2026 Vocalis Authors
// Dense row-major n-dimensional array.
//
// Licensed under the Apache License, Version 2.0

#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace vocalis::nn {

// Row-major tensor of a floating scalar type. Shapes are small vectors of
// positive extents; data length always equals the product of extents.
template <typename T>
class NdArray {
 public:
  NdArray() = default;

  explicit NdArray(std::vector<int> shape, T fill = T(0))
      : shape_(std::move(shape)), data_(checked_size(shape_), fill) {}

  NdArray(std::vector<int> shape, std::vector<T> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    if (data_.size() != checked_size(shape_)) {
      throw std::invalid_argument("NdArray: data length does not match shape");
    }
  }

  const std::vector<int>& shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  int extent(int axis) const { return shape_.at(static_cast<std::size_t>(axis)); }
  std::size_t size() const { return data_.size(); }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::vector<T>& flat() { return data_; }
  const std::vector<T>& flat() const { return data_; }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  // Indexed access for the ranks the models use.
  T& at2(int i, int j) { return data_[static_cast<std::size_t>(i) * shape_[1] + j]; }
  const T& at2(int i, int j) const {
    return data_[static_cast<std::size_t>(i) * shape_[1] + j];
  }
  T& at3(int i, int j, int k) {
    return data_[(static_cast<std::size_t>(i) * shape_[1] + j) * shape_[2] + k];
  }
  const T& at3(int i, int j, int k) const {
    return data_[(static_cast<std::size_t>(i) * shape_[1] + j) * shape_[2] + k];
  }
  T& at4(int i, int j, int k, int l) {
    return data_[((static_cast<std::size_t>(i) * shape_[1] + j) * shape_[2] + k) * shape_[3] + l];
  }
  const T& at4(int i, int j, int k, int l) const {
    return data_[((static_cast<std::size_t>(i) * shape_[1] + j) * shape_[2] + k) * shape_[3] + l];
  }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

  bool same_shape(const NdArray& other) const { return shape_ == other.shape_; }

  bool all_finite() const {
    for (const T& v : data_) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  }

  std::string shape_str() const {
    std::ostringstream os;
    os << '(';
    for (std::size_t i = 0; i < shape_.size(); ++i) {
      if (i) os << ',';
      os << shape_[i];
    }
    os << ')';
    return os.str();
  }

  template <typename U>
  NdArray<U> cast() const {
    NdArray<U> out(shape_);
    for (std::size_t i = 0; i < data_.size(); ++i) out[i] = static_cast<U>(data_[i]);
    return out;
  }

 private:
  static std::size_t checked_size(const std::vector<int>& shape) {
    std::size_t n = 1;
    for (int e : shape) {
      if (e <= 0) throw std::invalid_argument("NdArray: extents must be positive");
      n *= static_cast<std::size_t>(e);
    }
    return n;
  }

  std::vector<int> shape_;
  std::vector<T> data_;
};

template <typename T>
void require_finite(const NdArray<T>& a, const char* where) {
  if (!a.all_finite()) {
    throw std::runtime_error(std::string("non-finite values produced by ") + where);
  }
}

}  // namespace vocalis::nn
