// Copyright 2026 The vaelfa Authors
// SPDX-License-Identifier: Apache-2.0

#include "vaelfa/bootstrap.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

namespace vaelfa {

BootstrapSummary paired_bootstrap(std::span<const double> a,
                                  std::span<const double> b,
                                  std::size_t resamples, std::uint64_t seed,
                                  double confidence) {
  if (a.size() != b.size() || a.empty()) {
    throw std::invalid_argument("paired_bootstrap needs equal, non-empty samples");
  }
  if (resamples == 0 || !(confidence > 0.0 && confidence < 1.0)) {
    throw std::invalid_argument("paired_bootstrap: bad resamples or confidence");
  }
  const std::size_t n = a.size();
  std::vector<double> diff(n);
  for (std::size_t i = 0; i < n; ++i) diff[i] = a[i] - b[i];

  BootstrapSummary s;
  s.confidence = confidence;
  double total = 0.0;
  for (double d : diff) total += d;
  s.mean = total / static_cast<double>(n);

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::vector<double> means(resamples);
  for (auto& m : means) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += diff[pick(rng)];
    m = acc / static_cast<double>(n);
  }
  std::sort(means.begin(), means.end());
  const double tail = (1.0 - confidence) / 2.0;
  auto quantile = [&](double q) {
    const double pos = q * static_cast<double>(resamples - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, resamples - 1);
    const double frac = pos - static_cast<double>(lo);
    return means[lo] + frac * (means[hi] - means[lo]);
  };
  s.lo = quantile(tail);
  s.hi = quantile(1.0 - tail);
  return s;
}

}  // namespace vaelfa
