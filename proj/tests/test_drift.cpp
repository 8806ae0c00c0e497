// Copyright 2026 The vaelfa Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "support/oracles.hpp"
#include "vaelfa/bootstrap.hpp"
#include "vaelfa/errors.hpp"
#include "vaelfa/experiment.hpp"
#include "vaelfa/metrics.hpp"
#include "vaelfa/process.hpp"
#include "vaelfa/stats.hpp"

using namespace vaelfa;
namespace fs = std::filesystem;

namespace {

bool same_bits(const LatentTensor& a, const LatentTensor& b) {
  return a.shape() == b.shape() &&
         std::memcmp(a.data().data(), b.data().data(), a.size() * sizeof(float)) == 0;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("identity operator leaves latents bitwise unchanged") {
  const LatentTensor z = oracle::random_latent({3, 12, 12}, 1, 2.0, 1.0);
  CHECK(same_bits(apply_transition(TransitionOperator::identity(), z, 1), z));
  const SyntheticVaeParams quiet{0.0, 0.0, {9}};
  CHECK(same_bits(apply_transition(TransitionOperator::synthetic_vae(quiet, 3), z, 2), z));
}

TEST_CASE("transitions are deterministic in op, latent and turn") {
  const LatentTensor z = oracle::random_latent({2, 16, 16}, 2);
  const auto op = with_reference(
      TransitionOperator::composed(SyntheticDitParams{}, SyntheticVaeParams{}, 9), z);
  CHECK(same_bits(apply_transition(op, z, 4), apply_transition(op, z, 4)));
  CHECK_FALSE(same_bits(apply_transition(op, z, 4), apply_transition(op, z, 5)));
}

TEST_CASE("DiT model is gain, bias and band-limited noise") {
  const LatentTensor z = oracle::random_latent({2, 16, 16}, 3, 1.0, 1.0);
  SyntheticDitParams p;
  p.high_noise_scale = 0.0;
  p.low_bias_scale = 0.0;
  const LatentTensor out = apply_transition(TransitionOperator::synthetic_dit(p, 0), z, 1);
  const WorkTensor low = low_pass(widen(z), p.pool);
  for (std::size_t k = 0; k < z.size(); ++k) {
    const double expect = z.data()[k] + 0.01 * low.data()[k];
    CHECK(out.data()[k] == doctest::Approx(expect).epsilon(1e-6));
  }
}

TEST_CASE("DiT bias adds a fixed low-frequency field with the given sign") {
  const LatentTensor z = LatentTensor::zeros({4, 64, 64});
  SyntheticDitParams p = SyntheticDitParams::identity();
  p.low_bias_scale = 0.05;
  p.bias_seed = 7;
  const NoOpBias up = no_op_bias(TransitionOperator::synthetic_dit(p, 1), z, 1);
  const NoOpBias up2 = no_op_bias(TransitionOperator::synthetic_dit(p, 2), z, 5);
  p.direction = -1.0;
  const NoOpBias down = no_op_bias(TransitionOperator::synthetic_dit(p, 1), z, 1);
  for (std::size_t k = 0; k < z.size(); ++k) {
    CHECK(up.total.data()[k] == up2.total.data()[k]);
    CHECK(down.total.data()[k] == doctest::Approx(-up.total.data()[k]).epsilon(1e-6));
  }
  const RadialSpectrum rs = radial_spectrum(up.total, 50, true);
  double low = 0.0, high = 0.0;
  for (std::size_t b = 1; b < 10; ++b) low += rs.power[b] / 9.0;
  for (std::size_t b = 25; b < 50; ++b) high += rs.power[b] / 25.0;
  CHECK(low > 100.0 * high);
}

TEST_CASE("VAE model moment-adjusts the low component toward its reference") {
  const LatentTensor z0 = oracle::random_latent({3, 24, 24}, 4, 1.0, 1.0);
  const LatentTensor z = oracle::random_latent({3, 24, 24}, 5, 2.0, 3.0);
  SyntheticVaeParams p;
  p.flat_noise_scale = 0.0;
  p.low_regularize = 0.25;
  const auto op = with_reference(TransitionOperator::synthetic_vae(p, 0), z0);
  const LatentTensor out = apply_transition(op, z, 1);
  const WorkTensor low = low_pass(widen(z), p.pool);
  // out = (z - L z) + adjusted(L z)
  std::vector<double> adj(z.size());
  for (std::size_t k = 0; k < z.size(); ++k) {
    adj[k] = double(out.data()[k]) - double(z.data()[k]) + low.data()[k];
  }
  const ChannelStats ref = channel_mean_std(low_pass(z0, p.pool));
  const ChannelStats before = channel_mean_std(low);
  const ChannelStats after = channel_mean_std(WorkTensor(z.shape(), adj));
  for (std::size_t c = 0; c < 3; ++c) {
    CHECK(after.means[c] ==
          doctest::Approx(before.means[c] + 0.25 * (ref.means[c] - before.means[c]))
              .epsilon(1e-5));
    CHECK(after.stds[c] ==
          doctest::Approx(before.stds[c] + 0.25 * (ref.stds[c] - before.stds[c]))
              .epsilon(1e-5));
  }
}

TEST_CASE("VAE flat noise is spectrally flat") {
  SyntheticVaeParams p;
  p.low_regularize = 0.0;
  p.flat_noise_scale = 0.1;
  const LatentTensor z = LatentTensor::zeros({8, 64, 64});
  const NoOpBias b = no_op_bias(TransitionOperator::synthetic_vae(p, 12), z, 1);
  const RadialSpectrum rs = radial_spectrum(b.total, 10, true);
  for (std::size_t k = 1; k < 9; ++k) CHECK(rs.power[k] == doctest::Approx(0.01).epsilon(0.15));
}

TEST_CASE("composed bias splits into DiT and round-trip terms") {
  const LatentTensor z = oracle::random_latent({2, 16, 16}, 6);
  const auto op = with_reference(
      TransitionOperator::composed(SyntheticDitParams{}, SyntheticVaeParams{}, 3), z);
  const NoOpBias b = no_op_bias(op, z, 2);
  REQUIRE(b.dit_term.has_value());
  REQUIRE(b.vae_term.has_value());
  const LatentTensor out = apply_transition(op, z, 2);
  for (std::size_t k = 0; k < z.size(); ++k) {
    CHECK(b.total.data()[k] == double(out.data()[k]) - double(z.data()[k]));
    CHECK(b.dit_term->data()[k] + b.vae_term->data()[k] ==
          doctest::Approx(b.total.data()[k]).epsilon(1e-9).scale(1.0));
  }
}

TEST_CASE("operator parameter validation") {
  SyntheticDitParams d;
  d.low_bias_scale = -1.0;
  CHECK_THROWS_AS(d.validate(), FormatError);
  SyntheticVaeParams v;
  v.low_regularize = 1.5;
  CHECK_THROWS_AS(v.validate(), FormatError);
  CHECK_THROWS_AS(parse_transition_kind("diffusion"), FormatError);
  CHECK(to_string(parse_transition_kind("composed")) == "composed");
}

TEST_CASE("synthetic latent is deterministic and structured") {
  const LatentTensor a = synthetic_latent({4, 32, 32}, 3);
  CHECK(same_bits(a, synthetic_latent({4, 32, 32}, 3)));
  CHECK_FALSE(same_bits(a, synthetic_latent({4, 32, 32}, 4)));
  const BandEnergy e = band_energy(a, 0.2);
  CHECK(e.low > 0.0);
  CHECK(e.high > 0.0);
}

TEST_CASE("latent metrics against direct formulas") {
  const LatentTensor a({1, 1, 4}, {0.0f, 1.0f, 2.0f, 3.0f});
  const LatentTensor b({1, 1, 4}, {1.0f, 1.0f, 2.0f, 5.0f});
  const LatentMetrics m = latent_metrics(a, b);
  CHECK(m.l1 == doctest::Approx(0.75));
  CHECK(m.l2 == doctest::Approx(std::sqrt(5.0 / 4.0)));
  // mu_a 1.5, mu_b 2.25, var_a 1.25, var_b 2.6875, cov 1.625, range 5
  const double c1 = 0.05 * 0.05, c2 = 0.15 * 0.15;
  const double ssim = (2 * 1.5 * 2.25 + c1) * (2 * 1.625 + c2) /
                      ((1.5 * 1.5 + 2.25 * 2.25 + c1) * (1.25 + 2.6875 + c2));
  CHECK(m.ssim_global == doctest::Approx(ssim));
  const LatentMetrics same = latent_metrics(a, a);
  CHECK(same.l1 == 0.0);
  CHECK(same.ssim_global == doctest::Approx(1.0));
  const LatentTensor k = LatentTensor::filled({1, 2, 2}, 3.0f);
  CHECK(latent_metrics(k, k).ssim_global == 1.0);
}

TEST_CASE("paired bootstrap") {
  const std::vector<double> a = {1.0, 2.0, 3.0, 4.0, 5.0};
  const std::vector<double> b(5, 1.0);
  const BootstrapSummary s = paired_bootstrap(a, b, 2000, 1, 0.9);
  CHECK(s.mean == doctest::Approx(2.0));
  CHECK(s.lo < s.mean);
  CHECK(s.hi > s.mean);
  CHECK(s.lo >= 0.0);
  CHECK(s.hi <= 4.0);
  const BootstrapSummary again = paired_bootstrap(a, b, 2000, 1, 0.9);
  CHECK(again.lo == s.lo);
  CHECK(again.hi == s.hi);
  const BootstrapSummary flat = paired_bootstrap(b, std::vector<double>(5, 0.5));
  CHECK(flat.lo == 0.5);
  CHECK(flat.hi == 0.5);
  CHECK_THROWS_AS(paired_bootstrap(a, std::vector<double>{1.0}), std::invalid_argument);
}

TEST_CASE("drift meter measures against round 0") {
  const LatentTensor z0 = oracle::random_latent({2, 16, 16}, 7, 1.0, 1.0);
  const DriftMeter meter(z0, DriftOptions{});
  const TurnRecord r0 = meter.measure(z0, 0);
  CHECK(r0.l1 == 0.0);
  CHECK(r0.l2 == 0.0);
  CHECK(r0.mu_disp == 0.0);
  CHECK(r0.spectrum.bins() == 50);
  std::vector<float> shifted(z0.data().begin(), z0.data().end());
  for (std::size_t k = 0; k < 256; ++k) shifted[k] += 0.5f;
  const TurnRecord r1 = meter.measure(LatentTensor(z0.shape(), shifted), 1);
  CHECK(r1.mu_disp == doctest::Approx(0.25).epsilon(1e-5));
  CHECK(r1.sigma_disp < 1e-5);
  CHECK(r1.low_band_energy == doctest::Approx(0.0).scale(1.0));
}

TEST_CASE("no-op trajectory with the identity operator stays at zero drift") {
  const LatentTensor z0 = oracle::random_latent({2, 16, 16}, 8);
  const Trajectory t = run_no_op_trajectory(TransitionOperator::identity(), z0, 4,
                                            std::nullopt, {}, true);
  REQUIRE(t.report.turns.size() == 4);
  REQUIRE(t.latents.size() == 5);
  for (const auto& r : t.report.turns) CHECK(r.l2 == 0.0);
  CHECK(t.report.turns.back().turn == 4);
}

TEST_CASE("no-op trajectory matches a hand loop with lfa_step") {
  const LatentTensor z0 = synthetic_latent({4, 32, 32}, 2);
  const auto op = TransitionOperator::synthetic_dit(SyntheticDitParams{}, 2);
  const AlignmentConfig cfg;
  const Trajectory t = run_no_op_trajectory(op, z0, 3, cfg, {}, true);
  LfaState st = lfa_init(z0, cfg);
  LatentTensor z = z0;
  for (std::uint64_t k = 1; k <= 3; ++k) {
    LfaStepResult r = lfa_step(apply_transition(op, z, k), st, cfg);
    st = r.state;
    z = r.z_hat;
    CHECK(same_bits(z, t.latents[k]));
  }
}

TEST_CASE("cycle reports one row per pair") {
  const LatentTensor z0 = synthetic_latent({2, 16, 16}, 3);
  auto fwd = TransitionOperator::synthetic_dit(SyntheticDitParams{}, 3);
  const Trajectory t =
      run_cycle_trajectory(fwd, fwd, z0, 3, std::nullopt, {}, true);
  CHECK(t.report.turns.size() == 3);
  CHECK(t.latents.size() == 7);
  CHECK(t.report.turns[2].turn == 3);
  CHECK(t.report.turns[1].l2 == latent_metrics(t.latents[4], z0).l2);
}

TEST_CASE("attribution with identity operators is undefined everywhere") {
  const LatentTensor z0 = synthetic_latent({2, 16, 16}, 4);
  const auto idv = TransitionOperator::synthetic_vae(SyntheticVaeParams{0.0, 0.0, {9}}, 0);
  const AttributionResult a = run_attribution(z0, TransitionOperator::identity(), idv, 3);
  for (const auto& d : a.diff.delta_percent) CHECK_FALSE(d.has_value());
  for (double p : a.dit.power) CHECK(p == 0.0);
}

TEST_CASE("drift report CSV layout") {
  DriftReport r;
  r.header = {{"seed", "3"}};
  TurnRecord t;
  t.turn = 1;
  t.l1 = 0.5;
  r.turns.push_back(t);
  std::ostringstream out;
  write_drift_report_csv(out, r);
  CHECK(out.str() ==
        "# seed=3\n"
        "turn,l1,l2,ssim,low_band_energy,high_band_energy,mu_disp,sigma_disp\n"
        "1,0.5,0,1,0,0,0,0\n");
}

TEST_CASE("key-value config parsing") {
  const KeyValueConfig kv = KeyValueConfig::parse(
      "# comment\n\n a = 1 \nb=two words\nc = x=y\nflag = yes\n");
  CHECK(kv.get_int("a", 0) == 1);
  CHECK(kv.get_string("b", "") == "two words");
  CHECK(kv.get_string("c", "") == "x=y");
  CHECK(kv.get_bool("flag", false));
  CHECK_NOTHROW(kv.check_all_used());
  CHECK_THROWS_AS(KeyValueConfig::parse("a = 1\na = 2\n"), FormatError);
  CHECK_THROWS_AS(KeyValueConfig::parse("just words\n"), FormatError);
  const KeyValueConfig extra = KeyValueConfig::parse("a = 1\ntypo = 2\n");
  extra.get_int("a", 0);
  CHECK_THROWS_AS(extra.check_all_used(), FormatError);
  CHECK_THROWS_AS(KeyValueConfig::parse("a = x\n").get_double("a", 0), FormatError);
  CHECK_THROWS_AS(KeyValueConfig::load("/nonexistent.cfg"), IoError);
}

TEST_CASE("experiment config schema") {
  const ExperimentConfig cfg = parse_experiment_config(KeyValueConfig::parse(
      "experiment = no_op\nseed = 4\nreplicates = 2\nturns = 3\n"
      "latent.channels = 2\nlatent.height = 16\nlatent.width = 16\n"
      "lfa.mode = on\nlfa.scope = both\nreport.spectrum_turns = 1, 3\n"));
  CHECK(cfg.kind == ExperimentKind::kNoOp);
  CHECK(cfg.replicates == 2);
  CHECK(cfg.lfa_mode == LfaRunMode::kOn);
  CHECK(cfg.lfa.scope == AlignScope::kBoth);
  CHECK(cfg.spectrum_turns == std::vector<std::size_t>{1, 3});
  CHECK(cfg.echo.size() == 10);
  CHECK(cfg.dit.low_bias_scale == 0.05);

  auto bad = [](const char* text) {
    CHECK_THROWS_AS(parse_experiment_config(KeyValueConfig::parse(text)), FormatError);
  };
  bad("seed = 1\n");
  bad("experiment = sweep\n");
  bad("experiment = no_op\nturns = 0\n");
  bad("experiment = no_op\nlfa.mode = maybe\n");
  bad("experiment = no_op\nlfa.alpha_mu = 1.2\n");
  bad("experiment = no_op\nunknown.key = 1\n");
  bad("experiment = no_op\nreport.bins = 1\n");
  bad("experiment = no_op\nop.kind = external_adapter\nexternal.command = cat\n");
}

TEST_CASE("backward cycle operator inverts the bias direction") {
  ExperimentConfig cfg;
  cfg.kind = ExperimentKind::kCycle;
  cfg.inverse_strength = 0.5;
  const TransitionOperator f = experiment_operator(cfg, 3);
  const TransitionOperator b = experiment_backward_operator(cfg, 3);
  CHECK(f.dit.bias_seed == 3);
  CHECK(b.dit.bias_seed == 3);
  CHECK(b.dit.direction == -0.5);
  CHECK(b.dit.low_gain == doctest::Approx(1.0 / 1.01));
}

TEST_CASE("simulate writes deterministic reports") {
  TempDir tmp("vaelfa-test");
  const ExperimentConfig cfg = parse_experiment_config(KeyValueConfig::parse(
      "experiment = no_op\nseed = 1\nreplicates = 3\nturns = 4\n"
      "latent.channels = 2\nlatent.height = 16\nlatent.width = 16\n"
      "bootstrap.resamples = 200\n"));
  const ExperimentOutcome a = run_experiment(cfg, tmp.path() / "a");
  const ExperimentOutcome b = run_experiment(cfg, tmp.path() / "b");
  CHECK(a.summary_line == b.summary_line);
  CHECK(a.summary_line.find("wins=3/3") != std::string::npos);
  REQUIRE(a.files.size() == b.files.size());
  CHECK(a.files.size() == 3 * 4 + 1);
  for (std::size_t i = 0; i < a.files.size(); ++i) {
    CHECK(a.files[i].filename() == b.files[i].filename());
    CHECK(slurp(a.files[i]) == slurp(b.files[i]));
  }
  const std::string report = slurp(tmp.path() / "a" / "report_s2_lfa.csv");
  CHECK(report.find("# replicate_seed=2\n") != std::string::npos);
  CHECK(report.find("# config.turns=4\n") != std::string::npos);
}

TEST_CASE("simulate attribution with identity operators writes nan deltas") {
  TempDir tmp("vaelfa-test");
  const ExperimentConfig cfg = parse_experiment_config(KeyValueConfig::parse(
      "experiment = attribution\nturns = 2\n"
      "latent.channels = 2\nlatent.height = 16\nlatent.width = 16\n"
      "dit.low_bias_scale = 0\ndit.low_gain = 1\ndit.high_noise_scale = 0\n"
      "vae.flat_noise_scale = 0\nvae.low_regularize = 0\n"));
  run_experiment(cfg, tmp.path());
  std::istringstream csv(slurp(tmp.path() / "attribution_s0.csv"));
  std::string line;
  std::size_t rows = 0;
  while (std::getline(csv, line)) {
    if (line.empty() || line[0] == '#' || line.rfind("r_mid", 0) == 0) continue;
    ++rows;
    CHECK(line.substr(line.rfind(',') + 1) == "nan");
  }
  CHECK(rows == 50);
}
