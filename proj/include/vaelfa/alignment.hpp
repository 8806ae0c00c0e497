// Copyright 2026 The vaelfa Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vaelfa/pooling.hpp"
#include "vaelfa/stats.hpp"
#include "vaelfa/tensor.hpp"

namespace vaelfa {

enum class AnchorMode { kEma, kFixed, kPrev };
enum class AlignScope { kLowOnly, kHighOnly, kBoth };

std::string_view to_string(AnchorMode mode) noexcept;
std::string_view to_string(AlignScope scope) noexcept;
AnchorMode parse_anchor_mode(std::string_view text);
AlignScope parse_align_scope(std::string_view text);

struct AlignmentConfig {
  PoolingFilterSpec pool{9};
  double alpha_mu = 0.95;
  double alpha_sigma = 0.85;
  double epsilon = 1e-5;
  AnchorMode anchor_mode = AnchorMode::kEma;
  AlignScope scope = AlignScope::kLowOnly;
  // Substitute sigma = epsilon for zero-sigma channels instead of failing.
  bool allow_zero_sigma = false;

  bool aligns_low() const noexcept { return scope != AlignScope::kHighOnly; }
  bool aligns_high() const noexcept { return scope != AlignScope::kLowOnly; }
  void validate() const;
};

// Per-channel momentum targets: mean and log standard deviation.
struct AnchorState {
  std::vector<double> m_mu;
  std::vector<double> m_log_sigma;
  std::uint64_t turn = 0;
  AnchorMode mode = AnchorMode::kEma;

  std::size_t channels() const noexcept { return m_mu.size(); }
  bool operator==(const AnchorState&) const = default;
};

// Initializes targets from the statistics of the initial band component.
// Throws NumericError listing every zero-sigma channel unless
// cfg.allow_zero_sigma is set.
template <typename T>
AnchorState anchor_init(const BasicTensor<T>& band0, const AlignmentConfig& cfg);

// Consumes the pre-alignment band component of turn state.turn + 1.
template <typename T>
AnchorState anchor_update(const AnchorState& state, const BasicTensor<T>& band_k,
                          const AlignmentConfig& cfg);

// Channel-wise moment matching of a band component onto the anchor targets:
//   out_c = m_mu[c] + exp(m_log_sigma[c]) / (sigma_c + eps) * (x_c - mu_c)
template <typename T>
BasicTensor<T> align_low(const BasicTensor<T>& band, const AnchorState& state,
                         const AlignmentConfig& cfg);

// Anchors for one alignment chain. `high` is present only when the scope
// aligns the high band.
struct LfaState {
  AnchorState low;
  std::optional<AnchorState> high;

  std::uint64_t turn() const noexcept { return low.turn; }
};

LfaState lfa_init(const LatentTensor& z0, const AlignmentConfig& cfg);

struct LfaStepResult {
  LatentTensor z_hat;
  LfaState state;
  // Intermediates, exposed for reporting and verification.
  FrequencyDecomposition pre;  // decomposition of the transition output
  WorkTensor low_out;          // low band after alignment (or unchanged)
  WorkTensor high_out;         // high band after alignment (or unchanged)
  WorkTensor z_hat_work;       // low_out + high_out before rounding to float
};

// One turn: decompose, align with the turn k-1 anchors, recombine, then
// update the anchors from the pre-alignment components.
LfaStepResult lfa_step(const LatentTensor& z_tilde, const LfaState& state,
                       const AlignmentConfig& cfg);

// Line-oriented text record: version, mode, turn and channel count, then one
// "c m_mu m_log_sigma" line per channel.
std::string serialize_anchor(const AnchorState& state);
AnchorState deserialize_anchor(std::string_view text,
                               std::optional<std::size_t> expected_channels =
                                   std::nullopt);

}  // namespace vaelfa
