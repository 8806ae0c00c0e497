// Copyright 2026 The vaelfa Authors
// SPDX-License-Identifier: Apache-2.0

#include "vaelfa/tensor.hpp"

#include <algorithm>
#include <cmath>

#include "vaelfa/errors.hpp"

namespace vaelfa {

std::string to_string(const Shape& shape) {
  return "(" + std::to_string(shape.channels) + ", " +
         std::to_string(shape.height) + ", " + std::to_string(shape.width) +
         ")";
}

template <typename T>
BasicTensor<T>::BasicTensor(Shape shape, std::vector<T> data, std::string label)
    : shape_(shape), data_(std::move(data)), label_(std::move(label)) {
  if (shape_.channels == 0 || shape_.height == 0 || shape_.width == 0) {
    throw FormatError("tensor dimensions must be >= 1, got " +
                      to_string(shape_));
  }
  if (data_.size() != shape_.size()) {
    throw FormatError("tensor data length " + std::to_string(data_.size()) +
                      " does not match shape " + to_string(shape_));
  }
}

template <typename T>
BasicTensor<T> BasicTensor<T>::filled(Shape shape, T value) {
  return BasicTensor(shape, std::vector<T>(shape.size(), value));
}

template <typename T>
std::span<const T> BasicTensor<T>::channel(std::size_t c) const {
  return std::span<const T>(data_).subspan(c * shape_.plane(), shape_.plane());
}

template <typename T>
std::span<T> BasicTensor<T>::channel(std::size_t c) {
  return std::span<T>(data_).subspan(c * shape_.plane(), shape_.plane());
}

template <typename T>
bool BasicTensor<T>::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(),
                     [](T v) { return std::isfinite(v); });
}

template <typename T>
void require_finite(const BasicTensor<T>& t, const std::string& what) {
  const auto data = t.data();
  for (std::size_t k = 0; k < data.size(); ++k) {
    if (!std::isfinite(data[k])) {
      const std::size_t plane = t.shape().plane();
      throw NumericError(what + ": non-finite value at channel " +
                         std::to_string(k / plane) + ", offset " +
                         std::to_string(k % plane));
    }
  }
}

WorkTensor widen(const LatentTensor& t) {
  std::vector<double> out(t.data().begin(), t.data().end());
  return WorkTensor(t.shape(), std::move(out), t.label());
}

LatentTensor narrow(const WorkTensor& t, const std::string& what) {
  std::vector<float> out(t.size());
  std::transform(t.data().begin(), t.data().end(), out.begin(),
                 [](double v) { return static_cast<float>(v); });
  LatentTensor result(t.shape(), std::move(out), t.label());
  require_finite(result, what);
  return result;
}

WorkTensor difference(const LatentTensor& a, const LatentTensor& b) {
  if (a.shape() != b.shape()) {
    throw FormatError("shape mismatch: " + to_string(a.shape()) + " vs " +
                      to_string(b.shape()));
  }
  std::vector<double> out(a.size());
  for (std::size_t k = 0; k < out.size(); ++k) {
    out[k] = static_cast<double>(a.data()[k]) - static_cast<double>(b.data()[k]);
  }
  return WorkTensor(a.shape(), std::move(out));
}

template class BasicTensor<float>;
template class BasicTensor<double>;
template void require_finite(const BasicTensor<float>&, const std::string&);
template void require_finite(const BasicTensor<double>&, const std::string&);

}  // namespace vaelfa
