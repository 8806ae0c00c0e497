// Copyright 2026 The vaelfa Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace vaelfa {

struct Shape {
  std::size_t channels = 0;
  std::size_t height = 0;
  std::size_t width = 0;

  std::size_t plane() const noexcept { return height * width; }
  std::size_t size() const noexcept { return channels * height * width; }
  bool operator==(const Shape&) const = default;
};

std::string to_string(const Shape& shape);

// Dense C x H x W array in channel-height-width row-major order.
//
// LatentTensor (float) is the storage type read from and written to disk.
// WorkTensor (double) carries intermediate fields whose exactness matters,
// such as the high-frequency residual of a decomposition.
template <typename T>
class BasicTensor {
 public:
  using value_type = T;

  BasicTensor() = default;
  BasicTensor(Shape shape, std::vector<T> data, std::string label = {});

  static BasicTensor filled(Shape shape, T value);
  static BasicTensor zeros(Shape shape) { return filled(shape, T{0}); }

  const Shape& shape() const noexcept { return shape_; }
  std::size_t channels() const noexcept { return shape_.channels; }
  std::size_t height() const noexcept { return shape_.height; }
  std::size_t width() const noexcept { return shape_.width; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  std::span<const T> data() const noexcept { return data_; }
  std::span<T> data() noexcept { return data_; }
  std::span<const T> channel(std::size_t c) const;
  std::span<T> channel(std::size_t c);

  T& operator()(std::size_t c, std::size_t i, std::size_t j) {
    return data_[(c * shape_.height + i) * shape_.width + j];
  }
  T operator()(std::size_t c, std::size_t i, std::size_t j) const {
    return data_[(c * shape_.height + i) * shape_.width + j];
  }

  const std::string& label() const noexcept { return label_; }
  void set_label(std::string label) { label_ = std::move(label); }

  bool all_finite() const noexcept;

 private:
  Shape shape_;
  std::vector<T> data_;
  std::string label_;
};

using LatentTensor = BasicTensor<float>;
using WorkTensor = BasicTensor<double>;

// Throws NumericError naming `what` if any element is NaN or infinite.
template <typename T>
void require_finite(const BasicTensor<T>& t, const std::string& what);

WorkTensor widen(const LatentTensor& t);
// Rounds to float; throws NumericError if the result is not finite.
LatentTensor narrow(const WorkTensor& t, const std::string& what = "tensor");

// Elementwise a - b evaluated in double.
WorkTensor difference(const LatentTensor& a, const LatentTensor& b);

}  // namespace vaelfa
