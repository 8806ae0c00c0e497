// Copyright 2026 The vaelfa Authors
// SPDX-License-Identifier: Apache-2.0

#include "vaelfa/pooling.hpp"

#include <algorithm>
#include <vector>

#include "vaelfa/errors.hpp"

namespace vaelfa {

void PoolingFilterSpec::validate() const {
  if (window < 1 || window % 2 == 0) {
    throw FormatError("pooling window must be a positive odd integer, got " +
                      std::to_string(window));
  }
}

template <typename T>
BasicTensor<T> low_pass(const BasicTensor<T>& z, const PoolingFilterSpec& spec) {
  spec.validate();
  const long h = static_cast<long>(z.height());
  const long w = static_cast<long>(z.width());
  const long pad = spec.padding();
  const double inv = 1.0 / static_cast<double>(spec.window);

  std::vector<T> out(z.size());
  std::vector<double> rows(static_cast<std::size_t>(h * w));
  // Replicate padding clamps each axis independently, so the 2-D window mean
  // factors into a horizontal pass followed by a vertical pass.
  for (std::size_t c = 0; c < z.channels(); ++c) {
    const auto in = z.channel(c);
    for (long i = 0; i < h; ++i) {
      for (long j = 0; j < w; ++j) {
        double acc = 0.0;
        for (long d = -pad; d <= pad; ++d) {
          const long jj = std::clamp(j + d, 0L, w - 1);
          acc += static_cast<double>(in[static_cast<std::size_t>(i * w + jj)]);
        }
        rows[static_cast<std::size_t>(i * w + j)] = acc * inv;
      }
    }
    auto dst = std::span<T>(out).subspan(c * z.shape().plane(), z.shape().plane());
    for (long i = 0; i < h; ++i) {
      for (long j = 0; j < w; ++j) {
        double acc = 0.0;
        for (long d = -pad; d <= pad; ++d) {
          const long ii = std::clamp(i + d, 0L, h - 1);
          acc += rows[static_cast<std::size_t>(ii * w + j)];
        }
        dst[static_cast<std::size_t>(i * w + j)] = static_cast<T>(acc * inv);
      }
    }
  }
  return BasicTensor<T>(z.shape(), std::move(out), z.label());
}

WorkTensor FrequencyDecomposition::recombine() const {
  std::vector<double> out(low.size());
  for (std::size_t k = 0; k < out.size(); ++k) {
    out[k] = static_cast<double>(low.data()[k]) + high.data()[k];
  }
  return WorkTensor(low.shape(), std::move(out));
}

FrequencyDecomposition decompose(const LatentTensor& z,
                                 const PoolingFilterSpec& spec) {
  LatentTensor low = low_pass(z, spec);
  WorkTensor high = difference(z, low);
  return {std::move(low), std::move(high), spec};
}

template BasicTensor<float> low_pass(const BasicTensor<float>&,
                                     const PoolingFilterSpec&);
template BasicTensor<double> low_pass(const BasicTensor<double>&,
                                      const PoolingFilterSpec&);

}  // namespace vaelfa
