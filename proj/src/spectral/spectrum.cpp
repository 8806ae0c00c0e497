// Copyright 2026 The vaelfa Authors
// SPDX-License-Identifier: Apache-2.0

#include "vaelfa/spectral.hpp"

#include <fftw3.h>

#include <cmath>
#include <memory>
#include <mutex>
#include <stdexcept>

#include "vaelfa/errors.hpp"
#include "vaelfa/format.hpp"
#include "vaelfa/stats.hpp"

namespace vaelfa {
namespace {

// FFTW's planner is not thread-safe; execution on distinct buffers is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwBuffer {
  explicit FftwBuffer(std::size_t n)
      : ptr(fftw_alloc_complex(n)) {
    if (ptr == nullptr) throw std::bad_alloc();
  }
  ~FftwBuffer() { fftw_free(ptr); }
  FftwBuffer(const FftwBuffer&) = delete;
  FftwBuffer& operator=(const FftwBuffer&) = delete;

  fftw_complex* ptr;
};

struct PlanDeleter {
  void operator()(fftw_plan_s* p) const {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(p);
  }
};
using Plan = std::unique_ptr<fftw_plan_s, PlanDeleter>;

}  // namespace

template <typename T>
PowerGrid power_spectrum_2d(const BasicTensor<T>& z, bool remove_dc) {
  const std::size_t h = z.height();
  const std::size_t w = z.width();
  const std::size_t plane = h * w;
  FftwBuffer buf(plane);
  Plan plan;
  {
    std::lock_guard lock(planner_mutex());
    plan.reset(fftw_plan_dft_2d(static_cast<int>(h), static_cast<int>(w),
                                buf.ptr, buf.ptr, FFTW_FORWARD, FFTW_ESTIMATE));
  }
  if (!plan) throw std::runtime_error("fftw planning failed");

  const double norm = 1.0 / static_cast<double>(plane);  // (1/sqrt(HW))^2
  PowerGrid grid{z.shape(), std::vector<double>(z.size())};
  for (std::size_t c = 0; c < z.channels(); ++c) {
    const auto in = z.channel(c);
    double mean = 0.0;
    if (remove_dc) {
      for (T v : in) mean += static_cast<double>(v);
      mean /= static_cast<double>(plane);
    }
    for (std::size_t k = 0; k < plane; ++k) {
      buf.ptr[k][0] = static_cast<double>(in[k]) - mean;
      buf.ptr[k][1] = 0.0;
    }
    fftw_execute(plan.get());
    double* out = grid.power.data() + c * plane;
    for (std::size_t k = 0; k < plane; ++k) {
      out[k] = (buf.ptr[k][0] * buf.ptr[k][0] + buf.ptr[k][1] * buf.ptr[k][1]) *
               norm;
    }
    if (remove_dc) out[0] = 0.0;  // exact zero rather than rounding residue
  }
  return grid;
}

long signed_frequency(std::size_t k, std::size_t n) noexcept {
  // FFT order: 0, 1, ..., ceil(n/2)-1, then the negative half.
  const std::size_t half = n / 2;
  const long kk = static_cast<long>(k);
  return k < n - half ? kk : kk - static_cast<long>(n);
}

double normalized_radius(std::size_t u, std::size_t v, std::size_t height,
                         std::size_t width) noexcept {
  const double fu = static_cast<double>(signed_frequency(u, height)) /
                    (static_cast<double>(height) / 2.0);
  const double fv = static_cast<double>(signed_frequency(v, width)) /
                    (static_cast<double>(width) / 2.0);
  return std::sqrt(fu * fu + fv * fv) / std::sqrt(2.0);
}

std::size_t radial_bin(double r, std::size_t bins) noexcept {
  if (!(r > 0.0)) return 0;
  const auto b = static_cast<std::size_t>(r * static_cast<double>(bins));
  return b >= bins ? bins - 1 : b;
}

template <typename T>
RadialSpectrum radial_spectrum(const BasicTensor<T>& z, std::size_t bins,
                               bool remove_dc) {
  if (bins < 2) {
    throw std::invalid_argument("radial spectrum needs at least 2 bins");
  }
  const PowerGrid grid = power_spectrum_2d(z, remove_dc);
  const std::size_t h = z.height();
  const std::size_t w = z.width();

  RadialSpectrum s;
  s.bin_edges.resize(bins + 1);
  for (std::size_t b = 0; b <= bins; ++b) {
    s.bin_edges[b] = static_cast<double>(b) / static_cast<double>(bins);
  }
  s.power.assign(bins, 0.0);
  s.counts.assign(bins, 0);

  const double inv_c = 1.0 / static_cast<double>(z.channels());
  for (std::size_t u = 0; u < h; ++u) {
    for (std::size_t v = 0; v < w; ++v) {
      double cell = 0.0;
      for (std::size_t c = 0; c < z.channels(); ++c) {
        cell += grid.channel(c)[u * w + v];
      }
      const std::size_t b = radial_bin(normalized_radius(u, v, h, w), bins);
      s.power[b] += cell * inv_c;
      ++s.counts[b];
    }
  }
  for (std::size_t b = 0; b < bins; ++b) {
    if (s.counts[b] > 0) s.power[b] /= static_cast<double>(s.counts[b]);
  }
  return s;
}

SpectrumDiff relative_spectrum_diff(const RadialSpectrum& a,
                                    const RadialSpectrum& b, double floor) {
  if (a.bin_edges != b.bin_edges) {
    throw std::invalid_argument("spectra use different radial binning");
  }
  SpectrumDiff d;
  d.bin_edges = a.bin_edges;
  d.power = a.power;
  d.reference_power = b.power;
  d.counts = b.counts;
  d.delta_percent.resize(a.bins());
  for (std::size_t k = 0; k < a.bins(); ++k) {
    if (b.power[k] >= floor && b.power[k] > 0.0) {
      d.delta_percent[k] = 100.0 * (a.power[k] - b.power[k]) / b.power[k];
    }
  }
  return d;
}

template <typename T>
BandEnergy band_energy(const BasicTensor<T>& z, double r_split) {
  if (!(r_split > 0.0 && r_split < 1.0)) {
    throw std::invalid_argument("r_split must lie in (0, 1)");
  }
  const PowerGrid grid = power_spectrum_2d(z, /*remove_dc=*/true);
  const std::size_t h = z.height();
  const std::size_t w = z.width();
  BandEnergy e;
  for (std::size_t u = 0; u < h; ++u) {
    for (std::size_t v = 0; v < w; ++v) {
      double cell = 0.0;
      for (std::size_t c = 0; c < z.channels(); ++c) {
        cell += grid.channel(c)[u * w + v];
      }
      (normalized_radius(u, v, h, w) < r_split ? e.low : e.high) += cell;
    }
  }
  const double inv_c = 1.0 / static_cast<double>(z.channels());
  e.low *= inv_c;
  e.high *= inv_c;
  return e;
}

template <typename T>
std::vector<double> parseval_check(const BasicTensor<T>& z) {
  constexpr double kTiny = 1e-30;
  const PowerGrid grid = power_spectrum_2d(z, /*remove_dc=*/true);
  const ChannelStats stats = channel_mean_std(z);
  const double n = static_cast<double>(z.shape().plane());
  std::vector<double> out(z.channels());
  for (std::size_t c = 0; c < z.channels(); ++c) {
    const double lhs = n * stats.stds[c] * stats.stds[c];
    double rhs = 0.0;
    for (double p : grid.channel(c)) rhs += p;
    out[c] = std::abs(lhs - rhs) / std::max(lhs, kTiny);
  }
  return out;
}

void write_spectrum_csv(std::ostream& out, const RadialSpectrum& s) {
  out << "r_mid,power,count\n";
  for (std::size_t b = 0; b < s.bins(); ++b) {
    out << format_double(s.r_mid(b)) << ',' << format_double(s.power[b]) << ','
        << s.counts[b] << '\n';
  }
}

void write_spectrum_diff_csv(std::ostream& out, const SpectrumDiff& d) {
  out << "r_mid,power,reference_power,count,delta_percent\n";
  for (std::size_t b = 0; b < d.delta_percent.size(); ++b) {
    out << format_double(d.r_mid(b)) << ',' << format_double(d.power[b]) << ','
        << format_double(d.reference_power[b]) << ',' << d.counts[b] << ','
        << (d.delta_percent[b] ? format_double(*d.delta_percent[b]) : "nan")
        << '\n';
  }
}

template PowerGrid power_spectrum_2d(const BasicTensor<float>&, bool);
template PowerGrid power_spectrum_2d(const BasicTensor<double>&, bool);
template RadialSpectrum radial_spectrum(const BasicTensor<float>&, std::size_t, bool);
template RadialSpectrum radial_spectrum(const BasicTensor<double>&, std::size_t, bool);
template BandEnergy band_energy(const BasicTensor<float>&, double);
template BandEnergy band_energy(const BasicTensor<double>&, double);
template std::vector<double> parseval_check(const BasicTensor<float>&);
template std::vector<double> parseval_check(const BasicTensor<double>&);

}  // namespace vaelfa
