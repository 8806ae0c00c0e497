// Copyright 2026 The vaelfa Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "vaelfa/tensor.hpp"

namespace vaelfa {

// Per-channel spatial mean and population standard deviation (1/HW).
struct ChannelStats {
  std::vector<double> means;
  std::vector<double> stds;

  std::size_t channels() const noexcept { return means.size(); }
};

template <typename T>
ChannelStats channel_mean_std(const BasicTensor<T>& u);

}  // namespace vaelfa
