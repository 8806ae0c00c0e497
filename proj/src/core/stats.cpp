// Copyright 2026 The vaelfa Authors
// SPDX-License-Identifier: Apache-2.0

#include "vaelfa/stats.hpp"

#include <cmath>

namespace vaelfa {

template <typename T>
ChannelStats channel_mean_std(const BasicTensor<T>& u) {
  const std::size_t channels = u.channels();
  const double n = static_cast<double>(u.shape().plane());
  ChannelStats s{std::vector<double>(channels), std::vector<double>(channels)};
  for (std::size_t c = 0; c < channels; ++c) {
    const auto plane = u.channel(c);
    double sum = 0.0;
    for (T v : plane) sum += static_cast<double>(v);
    const double mean = sum / n;
    // Two-pass variance; the centered sum avoids cancellation.
    double sq = 0.0;
    for (T v : plane) {
      const double d = static_cast<double>(v) - mean;
      sq += d * d;
    }
    s.means[c] = mean;
    s.stds[c] = std::sqrt(sq / n);
  }
  return s;
}

template ChannelStats channel_mean_std(const BasicTensor<float>&);
template ChannelStats channel_mean_std(const BasicTensor<double>&);

}  // namespace vaelfa
