// Copyright 2026 The vaelfa Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "vaelfa/pooling.hpp"
#include "vaelfa/stats.hpp"
#include "vaelfa/tensor.hpp"

namespace vaelfa {

// Latent-space stand-ins for one editing turn. The synthetic models exist to
// exercise the measurement and alignment machinery on drift with a known
// spectral signature; they are not models of any particular network.

// Persistent low-frequency bias plus a small per-turn high-band perturbation:
//   z' = low_gain * L(z) + (z - L(z)) + direction * low_bias_scale * L(F)
//        + high_noise_scale * (n_k - L(n_k))
// F is a fixed field (seeded by bias_seed) made of a unit-normal per-channel
// offset plus 0.5-std white spatial noise; n_k is fresh unit noise per turn.
struct SyntheticDitParams {
  double low_bias_scale = 0.05;
  double low_gain = 1.01;
  double high_noise_scale = 0.005;
  std::uint64_t bias_seed = 0;
  double direction = 1.0;  // -1 gives the additive inverse bias
  PoolingFilterSpec pool{9};

  static SyntheticDitParams identity() { return {0.0, 1.0, 0.0, 0, 1.0, {9}}; }
  void validate() const;
};

// Spectrally flat noise, then the low component L(z) is replaced by a
// moment-adjusted copy whose channel statistics move toward a reference by
// `low_regularize`:
//   mu' = mu + lambda (mu_ref - mu),  sigma' = sigma + lambda (sigma_ref - sigma)
struct SyntheticVaeParams {
  double flat_noise_scale = 0.01;
  double low_regularize = 0.1;
  PoolingFilterSpec pool{9};

  void validate() const;
};

// Latent -> latent command. Placeholders: {input}, {output} (required), and
// optionally {turn} and {seed}.
struct ExternalTransitionParams {
  std::string command;
  double timeout_seconds = 300.0;
  std::filesystem::path workdir;
};

enum class TransitionKind { kSyntheticDit, kSyntheticVae, kComposed, kExternalAdapter };

std::string_view to_string(TransitionKind kind) noexcept;
TransitionKind parse_transition_kind(std::string_view text);

struct TransitionOperator {
  TransitionKind kind = TransitionKind::kSyntheticDit;
  SyntheticDitParams dit = SyntheticDitParams::identity();
  SyntheticVaeParams vae;
  ExternalTransitionParams external;
  std::uint64_t seed = 0;
  // Low-band statistics the VAE model is pulled toward; unset means no pull.
  std::optional<ChannelStats> vae_reference;

  static TransitionOperator identity();
  static TransitionOperator synthetic_dit(const SyntheticDitParams& p,
                                          std::uint64_t seed);
  static TransitionOperator synthetic_vae(const SyntheticVaeParams& p,
                                          std::uint64_t seed);
  // VAE round trip applied after the DiT transition.
  static TransitionOperator composed(const SyntheticDitParams& dit,
                                     const SyntheticVaeParams& vae,
                                     std::uint64_t seed);
  static TransitionOperator external_adapter(const ExternalTransitionParams& p,
                                             std::uint64_t seed);

  bool uses_vae() const noexcept {
    return kind == TransitionKind::kSyntheticVae || kind == TransitionKind::kComposed;
  }
};

// Binds the VAE reference to the low-band statistics of `z0`.
TransitionOperator with_reference(TransitionOperator op, const LatentTensor& z0);

// Deterministic in (op, z, turn).
LatentTensor apply_transition(const TransitionOperator& op, const LatentTensor& z,
                              std::uint64_t turn);

// apply_transition(op, z, turn) - z in double. For composed operators the
// total also splits into the DiT term G(z) - z and the round-trip term
// Phi(z) - G(z).
struct NoOpBias {
  WorkTensor total;
  std::optional<WorkTensor> dit_term;
  std::optional<WorkTensor> vae_term;
};

NoOpBias no_op_bias(const TransitionOperator& op, const LatentTensor& z,
                    std::uint64_t turn = 1);

// Structured random latent: per-channel offsets, smooth structure and white
// texture. Used as z0 by the simulation harness.
LatentTensor synthetic_latent(const Shape& shape, std::uint64_t seed);

}  // namespace vaelfa
