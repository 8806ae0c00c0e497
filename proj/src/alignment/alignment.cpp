// Copyright 2026 The vaelfa Authors
// SPDX-License-Identifier: Apache-2.0

#include "vaelfa/alignment.hpp"

#include <cmath>

#include "vaelfa/errors.hpp"

namespace vaelfa {

std::string_view to_string(AnchorMode mode) noexcept {
  switch (mode) {
    case AnchorMode::kEma:
      return "ema";
    case AnchorMode::kFixed:
      return "fixed";
    case AnchorMode::kPrev:
      return "prev";
  }
  return "?";
}

std::string_view to_string(AlignScope scope) noexcept {
  switch (scope) {
    case AlignScope::kLowOnly:
      return "low_only";
    case AlignScope::kHighOnly:
      return "high_only";
    case AlignScope::kBoth:
      return "both";
  }
  return "?";
}

AnchorMode parse_anchor_mode(std::string_view text) {
  if (text == "ema") return AnchorMode::kEma;
  if (text == "fixed") return AnchorMode::kFixed;
  if (text == "prev") return AnchorMode::kPrev;
  throw FormatError("unknown anchor mode '" + std::string(text) +
                    "' (expected ema, fixed or prev)");
}

AlignScope parse_align_scope(std::string_view text) {
  if (text == "low_only") return AlignScope::kLowOnly;
  if (text == "high_only") return AlignScope::kHighOnly;
  if (text == "both") return AlignScope::kBoth;
  throw FormatError("unknown alignment scope '" + std::string(text) +
                    "' (expected low_only, high_only or both)");
}

void AlignmentConfig::validate() const {
  pool.validate();
  if (!(epsilon > 0.0)) throw FormatError("epsilon must be > 0");
  if (anchor_mode == AnchorMode::kEma) {
    if (!(alpha_mu > 0.0 && alpha_mu < 1.0)) {
      throw FormatError("alpha_mu must lie in (0, 1)");
    }
    if (!(alpha_sigma > 0.0 && alpha_sigma < 1.0)) {
      throw FormatError("alpha_sigma must lie in (0, 1)");
    }
  }
}

namespace {

// log sigma per channel, with zero-sigma channels either rejected or
// replaced by epsilon.
std::vector<double> log_sigmas(const ChannelStats& s, const AlignmentConfig& cfg,
                               std::string_view context) {
  std::vector<double> out(s.channels());
  std::string bad;
  for (std::size_t c = 0; c < s.channels(); ++c) {
    double sigma = s.stds[c];
    if (!(sigma > 0.0)) {
      if (!cfg.allow_zero_sigma) {
        bad += (bad.empty() ? "" : ", ") + std::to_string(c);
        continue;
      }
      sigma = cfg.epsilon;
    }
    out[c] = std::log(sigma);
  }
  if (!bad.empty()) {
    throw NumericError(std::string(context) +
                       ": zero standard deviation in channel(s) " + bad);
  }
  return out;
}

}  // namespace

template <typename T>
AnchorState anchor_init(const BasicTensor<T>& band0, const AlignmentConfig& cfg) {
  cfg.validate();
  const ChannelStats s = channel_mean_std(band0);
  AnchorState state;
  state.m_log_sigma = log_sigmas(s, cfg, "anchor_init");
  state.m_mu = s.means;
  state.turn = 0;
  state.mode = cfg.anchor_mode;
  return state;
}

template <typename T>
AnchorState anchor_update(const AnchorState& state, const BasicTensor<T>& band_k,
                          const AlignmentConfig& cfg) {
  if (band_k.channels() != state.channels()) {
    throw FormatError("anchor has " + std::to_string(state.channels()) +
                      " channels but latent has " +
                      std::to_string(band_k.channels()));
  }
  AnchorState next = state;
  next.turn = state.turn + 1;
  if (state.mode == AnchorMode::kFixed) return next;

  const ChannelStats s = channel_mean_std(band_k);
  const std::vector<double> log_sigma = log_sigmas(s, cfg, "anchor_update");
  if (state.mode == AnchorMode::kPrev) {
    next.m_mu = s.means;
    next.m_log_sigma = log_sigma;
    return next;
  }
  const double am = cfg.alpha_mu;
  const double as = cfg.alpha_sigma;
  for (std::size_t c = 0; c < state.channels(); ++c) {
    next.m_mu[c] = am * state.m_mu[c] + (1.0 - am) * s.means[c];
    next.m_log_sigma[c] = as * state.m_log_sigma[c] + (1.0 - as) * log_sigma[c];
  }
  return next;
}

template <typename T>
BasicTensor<T> align_low(const BasicTensor<T>& band, const AnchorState& state,
                         const AlignmentConfig& cfg) {
  if (band.channels() != state.channels()) {
    throw FormatError("anchor has " + std::to_string(state.channels()) +
                      " channels but latent has " +
                      std::to_string(band.channels()));
  }
  const ChannelStats s = channel_mean_std(band);
  std::vector<T> out(band.size());
  const std::size_t plane = band.shape().plane();
  for (std::size_t c = 0; c < band.channels(); ++c) {
    const double scale =
        std::exp(state.m_log_sigma[c]) / (s.stds[c] + cfg.epsilon);
    const double target = state.m_mu[c];
    const double mean = s.means[c];
    const auto in = band.channel(c);
    for (std::size_t k = 0; k < plane; ++k) {
      out[c * plane + k] =
          static_cast<T>(target + scale * (static_cast<double>(in[k]) - mean));
    }
  }
  BasicTensor<T> result(band.shape(), std::move(out), band.label());
  require_finite(result, "align_low");
  return result;
}

LfaState lfa_init(const LatentTensor& z0, const AlignmentConfig& cfg) {
  cfg.validate();
  const FrequencyDecomposition parts = decompose(z0, cfg.pool);
  LfaState state{anchor_init(parts.low, cfg), std::nullopt};
  if (cfg.aligns_high()) state.high = anchor_init(parts.high, cfg);
  return state;
}

LfaStepResult lfa_step(const LatentTensor& z_tilde, const LfaState& state,
                       const AlignmentConfig& cfg) {
  cfg.validate();
  if (cfg.aligns_high() && !state.high) {
    throw FormatError("scope '" + std::string(to_string(cfg.scope)) +
                      "' needs high-band anchors");
  }
  FrequencyDecomposition pre = decompose(z_tilde, cfg.pool);

  WorkTensor low_out = cfg.aligns_low()
                           ? widen(align_low(pre.low, state.low, cfg))
                           : widen(pre.low);
  WorkTensor high_out =
      cfg.aligns_high() ? align_low(pre.high, *state.high, cfg) : pre.high;

  std::vector<double> sum(z_tilde.size());
  for (std::size_t k = 0; k < sum.size(); ++k) {
    sum[k] = low_out.data()[k] + high_out.data()[k];
  }
  WorkTensor z_hat_work(z_tilde.shape(), std::move(sum));
  LatentTensor z_hat = narrow(z_hat_work, "lfa_step output");
  z_hat.set_label(z_tilde.label());

  // Anchors advance only after alignment has consumed the turn k-1 targets.
  LfaState next{anchor_update(state.low, pre.low, cfg), std::nullopt};
  if (state.high) {
    next.high = cfg.aligns_high() ? anchor_update(*state.high, pre.high, cfg)
                                  : *state.high;
    if (!cfg.aligns_high()) next.high->turn = next.low.turn;
  }
  return {std::move(z_hat), std::move(next), std::move(pre),
          std::move(low_out), std::move(high_out), std::move(z_hat_work)};
}

template AnchorState anchor_init(const BasicTensor<float>&, const AlignmentConfig&);
template AnchorState anchor_init(const BasicTensor<double>&, const AlignmentConfig&);
template AnchorState anchor_update(const AnchorState&, const BasicTensor<float>&,
                                   const AlignmentConfig&);
template AnchorState anchor_update(const AnchorState&, const BasicTensor<double>&,
                                   const AlignmentConfig&);
template BasicTensor<float> align_low(const BasicTensor<float>&,
                                      const AnchorState&, const AlignmentConfig&);
template BasicTensor<double> align_low(const BasicTensor<double>&,
                                       const AnchorState&, const AlignmentConfig&);

}  // namespace vaelfa
