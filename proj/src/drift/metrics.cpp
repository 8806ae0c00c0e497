// Copyright 2026 The vaelfa Authors
// SPDX-License-Identifier: Apache-2.0

#include "vaelfa/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "vaelfa/errors.hpp"

namespace vaelfa {
namespace {

constexpr double kK1 = 0.01;
constexpr double kK2 = 0.03;

double global_ssim(std::span<const float> x, std::span<const float> y) {
  const double n = static_cast<double>(x.size());
  double lo = x[0], hi = x[0];
  double mx = 0.0, my = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    lo = std::min({lo, static_cast<double>(x[k]), static_cast<double>(y[k])});
    hi = std::max({hi, static_cast<double>(x[k]), static_cast<double>(y[k])});
    mx += x[k];
    my += y[k];
  }
  mx /= n;
  my /= n;
  double vx = 0.0, vy = 0.0, cov = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double dx = x[k] - mx;
    const double dy = y[k] - my;
    vx += dx * dx;
    vy += dy * dy;
    cov += dx * dy;
  }
  vx /= n;
  vy /= n;
  cov /= n;
  const double range = hi - lo;
  if (range == 0.0) return 1.0;  // both channels are the same constant
  const double c1 = (kK1 * range) * (kK1 * range);
  const double c2 = (kK2 * range) * (kK2 * range);
  return ((2.0 * mx * my + c1) * (2.0 * cov + c2)) /
         ((mx * mx + my * my + c1) * (vx + vy + c2));
}

}  // namespace

LatentMetrics latent_metrics(const LatentTensor& a, const LatentTensor& b) {
  if (a.shape() != b.shape()) {
    throw FormatError("latent_metrics: shape mismatch " + to_string(a.shape()) +
                      " vs " + to_string(b.shape()));
  }
  LatentMetrics m;
  double abs_sum = 0.0, sq_sum = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d =
        static_cast<double>(a.data()[k]) - static_cast<double>(b.data()[k]);
    abs_sum += std::abs(d);
    sq_sum += d * d;
  }
  const double n = static_cast<double>(a.size());
  m.l1 = abs_sum / n;
  m.l2 = std::sqrt(sq_sum / n);
  double ssim = 0.0;
  for (std::size_t c = 0; c < a.channels(); ++c) {
    ssim += global_ssim(a.channel(c), b.channel(c));
  }
  m.ssim_global = ssim / static_cast<double>(a.channels());
  return m;
}

}  // namespace vaelfa
