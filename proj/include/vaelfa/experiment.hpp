// Copyright 2026 The vaelfa Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "vaelfa/alignment.hpp"
#include "vaelfa/kv_config.hpp"
#include "vaelfa/trajectory.hpp"
#include "vaelfa/transitions.hpp"

namespace vaelfa {

using ConfigEntries = std::vector<std::pair<std::string, std::string>>;

// lfa.window, lfa.alpha_mu, lfa.alpha_sigma, lfa.epsilon, lfa.anchor_mode,
// lfa.scope, lfa.allow_zero_sigma (prefix configurable).
AlignmentConfig parse_alignment_config(const KeyValueConfig& kv,
                                       const std::string& prefix = "lfa.");
ConfigEntries alignment_config_entries(const AlignmentConfig& cfg,
                                       const std::string& prefix = "lfa.");

// dit.* keys; bias_seed defaults to `default_bias_seed`.
SyntheticDitParams parse_dit_params(const KeyValueConfig& kv,
                                    std::uint64_t default_bias_seed);
// vae.* keys.
SyntheticVaeParams parse_vae_params(const KeyValueConfig& kv);

// Operator file: op.kind, op.seed, then dit.*, vae.* or external.* keys.
TransitionOperator parse_operator_config(const KeyValueConfig& kv,
                                         std::uint64_t default_seed = 0);

enum class ExperimentKind { kNoOp, kCycle, kAttribution };
enum class LfaRunMode { kOff, kOn, kPaired };

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::kNoOp;
  std::uint64_t seed = 0;
  std::size_t replicates = 1;
  std::size_t turns = 10;
  std::size_t pairs = 5;

  Shape latent_shape{32, 64, 64};
  std::optional<std::filesystem::path> latent_path;

  TransitionKind op_kind = TransitionKind::kSyntheticDit;
  SyntheticDitParams dit;
  std::optional<std::uint64_t> bias_seed;  // unset: follow the replicate seed
  SyntheticVaeParams vae;
  ExternalTransitionParams external;
  double inverse_strength = 1.0;  // cycle backward bias = -strength * forward

  LfaRunMode lfa_mode = LfaRunMode::kPaired;
  AlignmentConfig lfa;

  DriftOptions drift;
  double power_floor = kDefaultPowerFloor;
  std::vector<std::size_t> spectrum_turns;  // empty: final turn only

  std::size_t resamples = 1000;
  double confidence = 0.95;

  ConfigEntries echo;  // the parsed file, echoed into report headers
};

// Throws FormatError (exit 2) on schema violations, including unknown keys.
ExperimentConfig parse_experiment_config(const KeyValueConfig& kv);

// Operators for one replicate seed.
TransitionOperator experiment_operator(const ExperimentConfig& cfg,
                                       std::uint64_t seed);
TransitionOperator experiment_backward_operator(const ExperimentConfig& cfg,
                                                std::uint64_t seed);
LatentTensor experiment_initial_latent(const ExperimentConfig& cfg,
                                       std::uint64_t seed);

struct ExperimentOutcome {
  std::string summary_line;
  std::vector<std::filesystem::path> files;
};

// Runs every replicate and writes reports, spectra and summary.csv into
// `out_dir`. Output depends only on the config.
ExperimentOutcome run_experiment(const ExperimentConfig& cfg,
                                 const std::filesystem::path& out_dir);

}  // namespace vaelfa
