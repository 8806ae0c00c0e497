// Copyright 2026 The vaelfa Authors
// SPDX-License-Identifier: Apache-2.0

#include "vaelfa/trajectory.hpp"

#include <cmath>
#include <stdexcept>

#include "vaelfa/metrics.hpp"

namespace vaelfa {

DriftMeter::DriftMeter(const LatentTensor& z0, const DriftOptions& opts)
    : z0_(z0), opts_(opts), low0_(channel_mean_std(low_pass(z0, opts.pool))) {}

TurnRecord DriftMeter::measure(const LatentTensor& zk, std::size_t turn) const {
  TurnRecord r;
  r.turn = turn;
  const LatentMetrics m = latent_metrics(zk, z0_);
  r.l1 = m.l1;
  r.l2 = m.l2;
  r.ssim = m.ssim_global;

  const WorkTensor diff = difference(zk, z0_);
  const BandEnergy e = band_energy(diff, opts_.r_split);
  r.low_band_energy = e.low;
  r.high_band_energy = e.high;
  r.spectrum = radial_spectrum(diff, opts_.bins, /*remove_dc=*/true);

  const ChannelStats lk = channel_mean_std(low_pass(zk, opts_.pool));
  const double inv_c = 1.0 / static_cast<double>(zk.channels());
  for (std::size_t c = 0; c < zk.channels(); ++c) {
    r.mu_disp += std::abs(lk.means[c] - low0_.means[c]) * inv_c;
    r.sigma_disp += std::abs(lk.stds[c] - low0_.stds[c]) * inv_c;
  }
  return r;
}

namespace {

TransitionOperator bind(const TransitionOperator& op, const LatentTensor& z0) {
  return op.uses_vae() && !op.vae_reference ? with_reference(op, z0) : op;
}

// Applies one transition and, when enabled, the alignment step.
class Stepper {
 public:
  Stepper(const LatentTensor& z0, const std::optional<AlignmentConfig>& lfa)
      : lfa_(lfa) {
    if (lfa_) state_ = lfa_init(z0, *lfa_);
  }

  LatentTensor advance(const TransitionOperator& op, const LatentTensor& z,
                       std::uint64_t turn) {
    LatentTensor next = apply_transition(op, z, turn);
    if (!lfa_) return next;
    LfaStepResult step = lfa_step(next, *state_, *lfa_);
    state_ = std::move(step.state);
    return std::move(step.z_hat);
  }

 private:
  std::optional<AlignmentConfig> lfa_;
  std::optional<LfaState> state_;
};

}  // namespace

Trajectory run_no_op_trajectory(const TransitionOperator& op,
                                const LatentTensor& z0, std::size_t turns,
                                const std::optional<AlignmentConfig>& lfa,
                                const DriftOptions& opts, bool keep_latents) {
  if (turns < 1) throw std::invalid_argument("trajectory needs at least one turn");
  const TransitionOperator bound = bind(op, z0);
  const DriftMeter meter(z0, opts);
  Stepper stepper(z0, lfa);

  Trajectory t;
  if (keep_latents) t.latents.push_back(z0);
  LatentTensor z = z0;
  for (std::size_t k = 1; k <= turns; ++k) {
    z = stepper.advance(bound, z, k);
    t.report.turns.push_back(meter.measure(z, k));
    if (keep_latents) t.latents.push_back(z);
  }
  return t;
}

Trajectory run_cycle_trajectory(const TransitionOperator& forward,
                                const TransitionOperator& backward,
                                const LatentTensor& z0, std::size_t pairs,
                                const std::optional<AlignmentConfig>& lfa,
                                const DriftOptions& opts, bool keep_latents) {
  if (pairs < 1) throw std::invalid_argument("cycle needs at least one pair");
  const TransitionOperator fwd = bind(forward, z0);
  const TransitionOperator bwd = bind(backward, z0);
  const DriftMeter meter(z0, opts);
  Stepper stepper(z0, lfa);

  Trajectory t;
  if (keep_latents) t.latents.push_back(z0);
  LatentTensor z = z0;
  for (std::size_t p = 1; p <= pairs; ++p) {
    z = stepper.advance(fwd, z, 2 * p - 1);
    if (keep_latents) t.latents.push_back(z);
    z = stepper.advance(bwd, z, 2 * p);
    if (keep_latents) t.latents.push_back(z);
    t.report.turns.push_back(meter.measure(z, p));
  }
  return t;
}

AttributionResult run_attribution(const LatentTensor& z0,
                                  const TransitionOperator& dit_op,
                                  const TransitionOperator& vae_op,
                                  std::size_t turns, const DriftOptions& opts,
                                  double floor) {
  if (turns < 1) throw std::invalid_argument("attribution needs at least one turn");
  auto final_latent = [&](const TransitionOperator& op) {
    const TransitionOperator bound = bind(op, z0);
    LatentTensor z = z0;
    for (std::size_t k = 1; k <= turns; ++k) z = apply_transition(bound, z, k);
    return z;
  };
  AttributionResult r;
  r.dit = radial_spectrum(difference(final_latent(dit_op), z0), opts.bins, true);
  r.vae = radial_spectrum(difference(final_latent(vae_op), z0), opts.bins, true);
  r.diff = relative_spectrum_diff(r.dit, r.vae, floor);
  return r;
}

}  // namespace vaelfa
