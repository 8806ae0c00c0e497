// Copyright 2026 The vaelfa Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "vaelfa/tensor.hpp"

namespace vaelfa {

// Square average-pooling window, stride 1, replicate padding of
// (window - 1) / 2 on every side. The window must be odd so the output keeps
// the input's spatial size.
struct PoolingFilterSpec {
  int window = 9;

  int padding() const noexcept { return (window - 1) / 2; }
  void validate() const;
};

// Channel-wise box filter. Accumulates in double.
template <typename T>
BasicTensor<T> low_pass(const BasicTensor<T>& z, const PoolingFilterSpec& spec);

// Paired low/high split of a latent. `high` is the exact residual z - low,
// held in double so that low + high reproduces z with no rounding.
struct FrequencyDecomposition {
  LatentTensor low;
  WorkTensor high;
  PoolingFilterSpec spec;

  WorkTensor recombine() const;
};

FrequencyDecomposition decompose(const LatentTensor& z,
                                 const PoolingFilterSpec& spec);

}  // namespace vaelfa
