// Copyright 2026 The vaelfa Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "vaelfa/tensor.hpp"

namespace vaelfa {

struct LatentMetrics {
  double l1 = 0.0;           // mean |a - b|
  double l2 = 0.0;           // sqrt(mean (a - b)^2)
  double ssim_global = 1.0;  // channel-averaged global SSIM (latent domain)
};

// Global (single-window) SSIM per channel with K1 = 0.01, K2 = 0.03 and the
// dynamic range taken from the channel's joint min/max over both inputs.
LatentMetrics latent_metrics(const LatentTensor& a, const LatentTensor& b);

}  // namespace vaelfa
