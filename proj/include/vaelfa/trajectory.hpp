// Copyright 2026 The vaelfa Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "vaelfa/alignment.hpp"
#include "vaelfa/spectral.hpp"
#include "vaelfa/stats.hpp"
#include "vaelfa/transitions.hpp"

namespace vaelfa {

struct DriftOptions {
  double r_split = kDefaultRadiusSplit;
  std::size_t bins = kDefaultRadialBins;
  PoolingFilterSpec pool{9};  // defines the low band for stat displacement
};

// Drift of one turn's latent relative to round 0.
struct TurnRecord {
  std::size_t turn = 0;
  double l1 = 0.0;
  double l2 = 0.0;
  double ssim = 1.0;
  double low_band_energy = 0.0;   // of z_k - z_0, below r_split
  double high_band_energy = 0.0;  // of z_k - z_0, at or above r_split
  double mu_disp = 0.0;     // mean_c |mu_c(L z_k) - mu_c(L z_0)|
  double sigma_disp = 0.0;  // mean_c |sigma_c(L z_k) - sigma_c(L z_0)|
  RadialSpectrum spectrum;  // DC-removed spectrum of z_k - z_0
};

struct DriftReport {
  // Echoed as "# key=value" lines ahead of the CSV table.
  std::vector<std::pair<std::string, std::string>> header;
  std::vector<TurnRecord> turns;
};

class DriftMeter {
 public:
  DriftMeter(const LatentTensor& z0, const DriftOptions& opts);

  TurnRecord measure(const LatentTensor& zk, std::size_t turn) const;
  const LatentTensor& origin() const noexcept { return z0_; }

 private:
  LatentTensor z0_;
  DriftOptions opts_;
  ChannelStats low0_;
};

struct Trajectory {
  DriftReport report;
  std::vector<LatentTensor> latents;  // round 0..K when kept
};

// K turns of z <- T(z), with an lfa_step after each transition when `lfa` is
// set. Operators with a VAE stage are bound to z0 as their reference.
Trajectory run_no_op_trajectory(const TransitionOperator& op,
                                const LatentTensor& z0, std::size_t turns,
                                const std::optional<AlignmentConfig>& lfa,
                                const DriftOptions& opts = {},
                                bool keep_latents = false);

// Alternates forward/backward for 2n turns; one report row per completed
// pair (row index = pair index).
Trajectory run_cycle_trajectory(const TransitionOperator& forward,
                                const TransitionOperator& backward,
                                const LatentTensor& z0, std::size_t pairs,
                                const std::optional<AlignmentConfig>& lfa,
                                const DriftOptions& opts = {},
                                bool keep_latents = false);

struct AttributionResult {
  RadialSpectrum dit;  // spectrum of z_K - z_0 along the DiT-only loop
  RadialSpectrum vae;  // same along the VAE-only loop
  SpectrumDiff diff;   // 100 * (dit - vae) / vae
};

AttributionResult run_attribution(const LatentTensor& z0,
                                  const TransitionOperator& dit_op,
                                  const TransitionOperator& vae_op,
                                  std::size_t turns, const DriftOptions& opts = {},
                                  double floor = kDefaultPowerFloor);

// CSV: turn,l1,l2,ssim,low_band_energy,high_band_energy,mu_disp,sigma_disp
void write_drift_report_csv(std::ostream& out, const DriftReport& report);

}  // namespace vaelfa
