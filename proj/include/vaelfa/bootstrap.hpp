// Copyright 2026 The vaelfa Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>

namespace vaelfa {

struct BootstrapSummary {
  double mean = 0.0;  // mean of the paired differences a - b
  double lo = 0.0;
  double hi = 0.0;
  double confidence = 0.95;
};

// Percentile bootstrap over paired differences a[i] - b[i], resampling pairs
// with replacement.
BootstrapSummary paired_bootstrap(std::span<const double> a,
                                  std::span<const double> b,
                                  std::size_t resamples = 1000,
                                  std::uint64_t seed = 0,
                                  double confidence = 0.95);

}  // namespace vaelfa
