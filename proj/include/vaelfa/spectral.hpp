// Copyright 2026 The vaelfa Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>
#include <ostream>
#include <vector>

#include "vaelfa/tensor.hpp"

namespace vaelfa {

// Per-channel |DFT|^2 under the unitary normalization (transform scaled by
// 1/sqrt(HW)), so the grid sums to the channel's energy. Same layout as the
// source tensor: cell (c, u, v) holds frequency indices (u, v) in FFT order.
struct PowerGrid {
  Shape shape;
  std::vector<double> power;

  std::span<const double> channel(std::size_t c) const {
    return std::span<const double>(power).subspan(c * shape.plane(),
                                                  shape.plane());
  }
};

template <typename T>
PowerGrid power_spectrum_2d(const BasicTensor<T>& z, bool remove_dc);

// Signed frequency index of FFT bin k along an axis of length n, in
// [-n/2, n/2).
long signed_frequency(std::size_t k, std::size_t n) noexcept;

// Radius of cell (u, v) with each axis normalized by its half-length, scaled
// by 1/sqrt(2) so the grid corner lands on r = 1.
double normalized_radius(std::size_t u, std::size_t v, std::size_t height,
                         std::size_t width) noexcept;

// Bin index for a normalized radius in [0, 1] with `bins` equal-width bins;
// r = 1 falls in the last bin.
std::size_t radial_bin(double r, std::size_t bins) noexcept;

struct RadialSpectrum {
  std::vector<double> bin_edges;  // bins + 1 edges from 0 to 1
  std::vector<double> power;      // mean power of the cells in each bin
  std::vector<std::size_t> counts;

  std::size_t bins() const noexcept { return power.size(); }
  double r_mid(std::size_t b) const { return 0.5 * (bin_edges[b] + bin_edges[b + 1]); }
};

inline constexpr std::size_t kDefaultRadialBins = 50;
inline constexpr double kDefaultRadiusSplit = 0.2;
inline constexpr double kDefaultPowerFloor = 1e-12;

// Channel-averaged radial power spectrum. Throws std::invalid_argument for
// bins < 2.
template <typename T>
RadialSpectrum radial_spectrum(const BasicTensor<T>& z, std::size_t bins,
                               bool remove_dc = false);

// Relative difference 100 * (a - b) / b per bin. Bins whose reference power
// is below `floor` stay undefined.
struct SpectrumDiff {
  std::vector<double> bin_edges;
  std::vector<std::optional<double>> delta_percent;
  std::vector<double> power;            // numerator spectrum a
  std::vector<double> reference_power;  // denominator spectrum b
  std::vector<std::size_t> counts;

  double r_mid(std::size_t b) const { return 0.5 * (bin_edges[b] + bin_edges[b + 1]); }
};

SpectrumDiff relative_spectrum_diff(const RadialSpectrum& a,
                                    const RadialSpectrum& b,
                                    double floor = kDefaultPowerFloor);

struct BandEnergy {
  double low = 0.0;
  double high = 0.0;
};

// DC-removed spectral energy below vs at-or-above `r_split`, averaged over
// channels. Throws std::invalid_argument unless 0 < r_split < 1.
template <typename T>
BandEnergy band_energy(const BasicTensor<T>& z, double r_split);

// Per channel: |HW * sigma_c^2 - sum of DC-removed power| / max(HW * sigma_c^2, tiny).
template <typename T>
std::vector<double> parseval_check(const BasicTensor<T>& z);

// CSV: r_mid,power,count
void write_spectrum_csv(std::ostream& out, const RadialSpectrum& s);
// CSV: r_mid,power,reference_power,count,delta_percent (nan when undefined)
void write_spectrum_diff_csv(std::ostream& out, const SpectrumDiff& d);

}  // namespace vaelfa
