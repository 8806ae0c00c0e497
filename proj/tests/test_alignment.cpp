// Copyright 2026 The vaelfa Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <cstring>

#include "doctest.h"
#include "support/oracles.hpp"
#include "vaelfa/alignment.hpp"
#include "vaelfa/errors.hpp"
#include "vaelfa/stats.hpp"

using namespace vaelfa;

namespace {

AlignmentConfig with_mode(AnchorMode m, AlignScope s = AlignScope::kLowOnly) {
  AlignmentConfig cfg;
  cfg.anchor_mode = m;
  cfg.scope = s;
  return cfg;
}

bool same_bits(const LatentTensor& a, const LatentTensor& b) {
  return a.shape() == b.shape() &&
         std::memcmp(a.data().data(), b.data().data(), a.size() * sizeof(float)) == 0;
}

}  // namespace

TEST_CASE("default parameters") {
  const AlignmentConfig cfg;
  CHECK(cfg.pool.window == 9);
  CHECK(cfg.alpha_mu == 0.95);
  CHECK(cfg.alpha_sigma == 0.85);
  CHECK(cfg.epsilon == 1e-5);
  CHECK(cfg.anchor_mode == AnchorMode::kEma);
  CHECK(cfg.scope == AlignScope::kLowOnly);
}

TEST_CASE("config validation") {
  AlignmentConfig cfg;
  cfg.alpha_mu = 1.0;
  CHECK_THROWS_AS(cfg.validate(), FormatError);
  cfg.anchor_mode = AnchorMode::kFixed;  // alphas unused
  CHECK_NOTHROW(cfg.validate());
  cfg.epsilon = 0.0;
  CHECK_THROWS_AS(cfg.validate(), FormatError);
  CHECK_THROWS_AS(parse_anchor_mode("momentum"), FormatError);
  CHECK(parse_align_scope("both") == AlignScope::kBoth);
}

TEST_CASE("anchor_init stores mean and log std") {
  const LatentTensor band = oracle::random_latent({3, 8, 8}, 1, 2.0, 1.0);
  const AnchorState a = anchor_init(band, AlignmentConfig{});
  CHECK(a.turn == 0);
  for (std::size_t c = 0; c < 3; ++c) {
    double m, s;
    oracle::mean_std(band, c, m, s);
    CHECK(a.m_mu[c] == doctest::Approx(m).epsilon(1e-12));
    CHECK(a.m_log_sigma[c] == doctest::Approx(std::log(s)).epsilon(1e-10));
  }
}

TEST_CASE("zero sigma is an error naming the channels") {
  std::vector<float> v(3 * 4, 1.0f);
  v[4] = 2.0f;  // channel 1 varies
  const LatentTensor band({3, 2, 2}, v);
  try {
    anchor_init(band, AlignmentConfig{});
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find("channel(s) 0, 2") != std::string::npos);
    CHECK(e.exit_code() == 3);
  }
  AlignmentConfig lax;
  lax.allow_zero_sigma = true;
  const AnchorState a = anchor_init(band, lax);
  CHECK(a.m_log_sigma[0] == doctest::Approx(std::log(1e-5)));
}

TEST_CASE("EMA update follows the recurrence") {
  const AlignmentConfig cfg;
  const LatentTensor b0 = oracle::random_latent({2, 6, 6}, 3);
  const LatentTensor b1 = oracle::random_latent({2, 6, 6}, 4, 3.0, 2.0);
  const AnchorState a0 = anchor_init(b0, cfg);
  const AnchorState a1 = anchor_update(a0, b1, cfg);
  CHECK(a1.turn == 1);
  for (std::size_t c = 0; c < 2; ++c) {
    double m, s;
    oracle::mean_std(b1, c, m, s);
    CHECK(a1.m_mu[c] == doctest::Approx(0.95 * a0.m_mu[c] + 0.05 * m));
    CHECK(a1.m_log_sigma[c] ==
          doctest::Approx(0.85 * a0.m_log_sigma[c] + 0.15 * std::log(s)));
  }
}

TEST_CASE("fixed keeps the initial targets and prev tracks the last turn") {
  const LatentTensor b0 = oracle::random_latent({2, 6, 6}, 5);
  const LatentTensor b1 = oracle::random_latent({2, 6, 6}, 6, 2.0, 1.0);
  const auto fixed = with_mode(AnchorMode::kFixed);
  const AnchorState f0 = anchor_init(b0, fixed);
  const AnchorState f1 = anchor_update(f0, b1, fixed);
  CHECK(f1.m_mu == f0.m_mu);
  CHECK(f1.m_log_sigma == f0.m_log_sigma);
  CHECK(f1.turn == 1);

  const auto prev = with_mode(AnchorMode::kPrev);
  const AnchorState p1 = anchor_update(anchor_init(b0, prev), b1, prev);
  const AnchorState direct = anchor_init(b1, prev);
  CHECK(p1.m_mu == direct.m_mu);
  CHECK(p1.m_log_sigma == direct.m_log_sigma);
}

TEST_CASE("align_low hits the anchor moments") {
  const AlignmentConfig cfg;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const LatentTensor band = oracle::random_latent({4, 10, 10}, seed, 1.5, 2.0);
    AnchorState a;
    a.m_mu = {0.3, -1.0, 2.0, 0.0};
    a.m_log_sigma = {0.0, -1.0, 0.5, -3.0};
    const LatentTensor out = align_low(band, a, cfg);
    const ChannelStats in = channel_mean_std(band);
    for (std::size_t c = 0; c < 4; ++c) {
      double m, s;
      oracle::mean_std(out, c, m, s);
      CHECK(std::abs(m - a.m_mu[c]) < 1e-5);
      CHECK(std::abs(s - std::exp(a.m_log_sigma[c]) * in.stds[c] / (in.stds[c] + 1e-5)) <
            1e-5);
    }
  }
}

TEST_CASE("align_low with epsilon 0 is an exact moment match") {
  AlignmentConfig cfg;
  cfg.epsilon = 0.0;
  const WorkTensor band = widen(oracle::random_latent({2, 8, 8}, 8, 3.0, 1.0));
  AnchorState a;
  a.m_mu = {1.0, -2.0};
  a.m_log_sigma = {std::log(0.5), std::log(4.0)};
  const ChannelStats s = channel_mean_std(align_low(band, a, cfg));
  CHECK(s.means[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(s.stds[1] == doctest::Approx(4.0).epsilon(1e-12));
}

TEST_CASE("channel mismatch is a format error") {
  const LatentTensor band = oracle::random_latent({3, 4, 4}, 2);
  const AnchorState a = anchor_init(oracle::random_latent({2, 4, 4}, 3), AlignmentConfig{});
  CHECK_THROWS_AS(align_low(band, a, AlignmentConfig{}), FormatError);
  CHECK_THROWS_AS(anchor_update(a, band, AlignmentConfig{}), FormatError);
}

TEST_CASE("lfa_step aligns with old anchors and updates from pre-alignment stats") {
  const AlignmentConfig cfg;
  const LatentTensor z0 = oracle::random_latent({3, 16, 16}, 10, 1.0, 1.0);
  const LatentTensor z1 = oracle::random_latent({3, 16, 16}, 11, 1.3, 2.0);
  const LfaState s0 = lfa_init(z0, cfg);
  const LfaStepResult r = lfa_step(z1, s0, cfg);

  const FrequencyDecomposition d = decompose(z1, cfg.pool);
  const LatentTensor expect_low = align_low(d.low, s0.low, cfg);
  for (std::size_t k = 0; k < z1.size(); ++k) {
    CHECK(r.low_out.data()[k] == static_cast<double>(expect_low.data()[k]));
    CHECK(r.high_out.data()[k] == d.high.data()[k]);
    CHECK(r.z_hat.data()[k] ==
          static_cast<float>(static_cast<double>(expect_low.data()[k]) + d.high.data()[k]));
  }
  CHECK(r.state.low == anchor_update(s0.low, d.low, cfg));
  CHECK_FALSE(r.state.high.has_value());
  CHECK(r.state.turn() == 1);
}

TEST_CASE("all anchor modes agree on turn 1") {
  const LatentTensor z0 = oracle::random_latent({4, 16, 16}, 20, 1.0, 1.0);
  const LatentTensor z1 = oracle::random_latent({4, 16, 16}, 21, 1.1, 1.0);
  const auto ema = lfa_step(z1, lfa_init(z0, with_mode(AnchorMode::kEma)),
                            with_mode(AnchorMode::kEma));
  const auto fixed = lfa_step(z1, lfa_init(z0, with_mode(AnchorMode::kFixed)),
                              with_mode(AnchorMode::kFixed));
  const auto prev = lfa_step(z1, lfa_init(z0, with_mode(AnchorMode::kPrev)),
                             with_mode(AnchorMode::kPrev));
  CHECK(same_bits(ema.z_hat, fixed.z_hat));
  CHECK(same_bits(ema.z_hat, prev.z_hat));
}

TEST_CASE("high_only scope leaves the low band untouched") {
  const auto cfg = with_mode(AnchorMode::kEma, AlignScope::kHighOnly);
  const LatentTensor z0 = oracle::random_latent({2, 16, 16}, 30);
  const LatentTensor z1 = oracle::random_latent({2, 16, 16}, 31, 2.0, 1.0);
  const LfaState s0 = lfa_init(z0, cfg);
  REQUIRE(s0.high.has_value());
  const LfaStepResult r = lfa_step(z1, s0, cfg);
  for (std::size_t k = 0; k < z1.size(); ++k) {
    CHECK(r.low_out.data()[k] == static_cast<double>(r.pre.low.data()[k]));
  }
  const ChannelStats hs = channel_mean_std(r.high_out);
  const ChannelStats pre = channel_mean_std(r.pre.high);
  for (std::size_t c = 0; c < 2; ++c) {
    CHECK(std::abs(hs.means[c] - s0.high->m_mu[c]) < 1e-9);
    CHECK(hs.stds[c] == doctest::Approx(std::exp(s0.high->m_log_sigma[c]) * pre.stds[c] /
                                        (pre.stds[c] + 1e-5)));
  }
  CHECK(r.state.high->turn == 1);
  CHECK(r.state.low.turn == 1);
}

TEST_CASE("both scope needs a high anchor") {
  const auto both = with_mode(AnchorMode::kEma, AlignScope::kBoth);
  const LatentTensor z = oracle::random_latent({2, 8, 8}, 1);
  LfaState st = lfa_init(z, AlignmentConfig{});
  CHECK_THROWS_AS(lfa_step(z, st, both), FormatError);
}

TEST_CASE("near idempotence on the anchor's own latent") {
  // Anchor built from z itself: a second pass changes z only by the epsilon
  // shrinkage of the low band.
  const auto cfg = with_mode(AnchorMode::kFixed);
  const LatentTensor z = oracle::random_latent({4, 32, 32}, 50, 1.0, 2.0);
  const LfaState s = lfa_init(z, cfg);
  const LfaStepResult once = lfa_step(z, s, cfg);
  const LfaStepResult twice = lfa_step(once.z_hat, once.state, cfg);
  double worst = 0.0;
  for (std::size_t k = 0; k < z.size(); ++k) {
    worst = std::max(worst, std::abs(double(once.z_hat.data()[k]) - z.data()[k]));
    worst = std::max(worst, std::abs(double(twice.z_hat.data()[k]) - once.z_hat.data()[k]));
  }
  CHECK(worst < 1e-3);
}

TEST_CASE("anchor record round trip") {
  const AnchorState a = anchor_init(oracle::random_latent({5, 8, 8}, 9, 1.0, 3.0),
                                    with_mode(AnchorMode::kPrev));
  AnchorState b = a;
  b.turn = 17;
  const std::string text = serialize_anchor(b);
  CHECK(text.rfind("vaelfa-anchor 1\nmode prev\nturn 17\nchannels 5\n0 ", 0) == 0);
  CHECK(deserialize_anchor(text) == b);
  CHECK(deserialize_anchor(text, 5) == b);
  CHECK_THROWS_AS(deserialize_anchor(text, 4), FormatError);
}

TEST_CASE("anchor records are parsed strictly") {
  const AnchorState a = anchor_init(oracle::random_latent({2, 4, 4}, 2), AlignmentConfig{});
  const std::string text = serialize_anchor(a);
  CHECK_THROWS_AS(deserialize_anchor(text.substr(0, text.size() - 1)), FormatError);
  CHECK_THROWS_AS(deserialize_anchor(text.substr(0, text.find("1 "))), FormatError);
  CHECK_THROWS_AS(deserialize_anchor("vaelfa-anchor 2\nmode ema\nturn 0\nchannels 1\n0 0 0\n"),
                  FormatError);
  CHECK_THROWS_AS(deserialize_anchor("vaelfa-anchor 1\nmode ema\nturn 0\nchannels 1\n1 0 0\n"),
                  FormatError);
  CHECK_THROWS_AS(deserialize_anchor("vaelfa-anchor 1\nmode ema\nturn 0\nchannels 1\n0 nan 0\n"),
                  FormatError);
  CHECK_THROWS_AS(deserialize_anchor("vaelfa-anchor 1\nmode ema\nturn 0\nchannels 1\n0 1 inf\n"),
                  FormatError);
  CHECK_THROWS_AS(deserialize_anchor("vaelfa-anchor 1\nmode odd\nturn 0\nchannels 1\n0 1 0\n"),
                  FormatError);
  CHECK_THROWS_AS(deserialize_anchor(""), FormatError);
  CHECK_THROWS_AS(deserialize_anchor("vaelfa-anchor 1\nmode ema\nturn 0\nchannels 2\n0 1 0\n"),
                  FormatError);
  CHECK_NOTHROW(deserialize_anchor("vaelfa-anchor 1\nmode ema\nturn 0\nchannels 1\n0 1 0\n"));
}
