// Copyright 2026 The vaelfa Authors
// SPDX-License-Identifier: Apache-2.0

#include "vaelfa/experiment.hpp"

#include <fstream>
#include <sstream>

#include "vaelfa/adapter.hpp"
#include "vaelfa/bootstrap.hpp"
#include "vaelfa/errors.hpp"
#include "vaelfa/format.hpp"
#include "vaelfa/npy.hpp"

namespace vaelfa {
namespace {

std::size_t positive_size(const KeyValueConfig& kv, const std::string& key,
                          long long fallback) {
  const long long v = kv.get_int(key, fallback);
  if (v < 1) throw FormatError(key + " must be >= 1");
  return static_cast<std::size_t>(v);
}

std::uint64_t non_negative(const KeyValueConfig& kv, const std::string& key,
                           long long fallback) {
  const long long v = kv.get_int(key, fallback);
  if (v < 0) throw FormatError(key + " must be >= 0");
  return static_cast<std::uint64_t>(v);
}

std::vector<std::size_t> parse_turn_list(const std::string& text,
                                         const std::string& key) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto first = item.find_first_not_of(' ');
    const auto last = item.find_last_not_of(' ');
    if (first == std::string::npos) continue;
    const long long v = parse_int(item.substr(first, last - first + 1), key);
    if (v < 1) throw FormatError(key + " entries must be >= 1");
    out.push_back(static_cast<std::size_t>(v));
  }
  return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

std::string_view to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::kNoOp:
      return "no_op";
    case ExperimentKind::kCycle:
      return "cycle";
    case ExperimentKind::kAttribution:
      return "attribution";
  }
  return "?";
}

}  // namespace

AlignmentConfig parse_alignment_config(const KeyValueConfig& kv,
                                       const std::string& prefix) {
  AlignmentConfig cfg;
  cfg.pool.window = static_cast<int>(kv.get_int(prefix + "window", cfg.pool.window));
  cfg.alpha_mu = kv.get_double(prefix + "alpha_mu", cfg.alpha_mu);
  cfg.alpha_sigma = kv.get_double(prefix + "alpha_sigma", cfg.alpha_sigma);
  cfg.epsilon = kv.get_double(prefix + "epsilon", cfg.epsilon);
  cfg.anchor_mode = parse_anchor_mode(kv.get_string(prefix + "anchor_mode", "ema"));
  cfg.scope = parse_align_scope(kv.get_string(prefix + "scope", "low_only"));
  cfg.allow_zero_sigma = kv.get_bool(prefix + "allow_zero_sigma", false);
  cfg.validate();
  return cfg;
}

ConfigEntries alignment_config_entries(const AlignmentConfig& cfg,
                                       const std::string& prefix) {
  return {
      {prefix + "window", std::to_string(cfg.pool.window)},
      {prefix + "alpha_mu", format_double(cfg.alpha_mu)},
      {prefix + "alpha_sigma", format_double(cfg.alpha_sigma)},
      {prefix + "epsilon", format_double(cfg.epsilon)},
      {prefix + "anchor_mode", std::string(to_string(cfg.anchor_mode))},
      {prefix + "scope", std::string(to_string(cfg.scope))},
      {prefix + "allow_zero_sigma", cfg.allow_zero_sigma ? "true" : "false"},
  };
}

SyntheticDitParams parse_dit_params(const KeyValueConfig& kv,
                                    std::uint64_t default_bias_seed) {
  SyntheticDitParams p;
  p.low_bias_scale = kv.get_double("dit.low_bias_scale", p.low_bias_scale);
  p.low_gain = kv.get_double("dit.low_gain", p.low_gain);
  p.high_noise_scale = kv.get_double("dit.high_noise_scale", p.high_noise_scale);
  p.bias_seed = non_negative(kv, "dit.bias_seed",
                             static_cast<long long>(default_bias_seed));
  p.direction = kv.get_double("dit.direction", p.direction);
  p.pool.window = static_cast<int>(kv.get_int("dit.window", p.pool.window));
  p.validate();
  return p;
}

SyntheticVaeParams parse_vae_params(const KeyValueConfig& kv) {
  SyntheticVaeParams p;
  p.flat_noise_scale = kv.get_double("vae.flat_noise_scale", p.flat_noise_scale);
  p.low_regularize = kv.get_double("vae.low_regularize", p.low_regularize);
  p.pool.window = static_cast<int>(kv.get_int("vae.window", p.pool.window));
  p.validate();
  return p;
}

namespace {

ExternalTransitionParams parse_external(const KeyValueConfig& kv) {
  ExternalTransitionParams p;
  p.command = kv.get_string("external.command", "");
  p.timeout_seconds = kv.get_double("external.timeout", p.timeout_seconds);
  p.workdir = kv.get_string("external.workdir", "");
  return p;
}

TransitionOperator build_operator(TransitionKind kind, const SyntheticDitParams& dit,
                                  const SyntheticVaeParams& vae,
                                  const ExternalTransitionParams& external,
                                  std::uint64_t seed) {
  switch (kind) {
    case TransitionKind::kSyntheticDit:
      return TransitionOperator::synthetic_dit(dit, seed);
    case TransitionKind::kSyntheticVae:
      return TransitionOperator::synthetic_vae(vae, seed);
    case TransitionKind::kComposed:
      return TransitionOperator::composed(dit, vae, seed);
    case TransitionKind::kExternalAdapter:
      return TransitionOperator::external_adapter(external, seed);
  }
  throw FormatError("unknown operator kind");
}

}  // namespace

TransitionOperator parse_operator_config(const KeyValueConfig& kv,
                                         std::uint64_t default_seed) {
  const TransitionKind kind = parse_transition_kind(kv.require_string("op.kind"));
  const std::uint64_t seed =
      non_negative(kv, "op.seed", static_cast<long long>(default_seed));
  const SyntheticDitParams dit = parse_dit_params(kv, seed);
  const SyntheticVaeParams vae = parse_vae_params(kv);
  const ExternalTransitionParams external = parse_external(kv);
  return build_operator(kind, dit, vae, external, seed);
}

ExperimentConfig parse_experiment_config(const KeyValueConfig& kv) {
  ExperimentConfig cfg;
  const std::string kind = kv.require_string("experiment");
  if (kind == "no_op") {
    cfg.kind = ExperimentKind::kNoOp;
  } else if (kind == "cycle") {
    cfg.kind = ExperimentKind::kCycle;
  } else if (kind == "attribution") {
    cfg.kind = ExperimentKind::kAttribution;
  } else {
    throw FormatError("unknown experiment '" + kind +
                      "' (expected no_op, cycle or attribution)");
  }
  cfg.seed = non_negative(kv, "seed", 0);
  cfg.replicates = positive_size(kv, "replicates", 1);
  cfg.turns = positive_size(kv, "turns", 10);
  cfg.pairs = positive_size(kv, "pairs", 5);

  cfg.latent_shape.channels = positive_size(kv, "latent.channels", 32);
  cfg.latent_shape.height = positive_size(kv, "latent.height", 64);
  cfg.latent_shape.width = positive_size(kv, "latent.width", 64);
  if (kv.has("latent.path")) cfg.latent_path = kv.get_string("latent.path", "");

  cfg.op_kind = parse_transition_kind(kv.get_string("op.kind", "synthetic_dit"));
  if (kv.has("dit.bias_seed")) {
    cfg.bias_seed = non_negative(kv, "dit.bias_seed", 0);
  }
  cfg.dit = parse_dit_params(kv, cfg.bias_seed.value_or(0));
  cfg.vae = parse_vae_params(kv);
  cfg.external = parse_external(kv);
  if (cfg.op_kind == TransitionKind::kExternalAdapter) {
    validate_command_template(cfg.external.command, "external.command");
  }
  cfg.inverse_strength = kv.get_double("cycle.inverse_strength", 1.0);

  const std::string lfa_mode = kv.get_string("lfa.mode", "paired");
  if (lfa_mode == "off") {
    cfg.lfa_mode = LfaRunMode::kOff;
  } else if (lfa_mode == "on") {
    cfg.lfa_mode = LfaRunMode::kOn;
  } else if (lfa_mode == "paired") {
    cfg.lfa_mode = LfaRunMode::kPaired;
  } else {
    throw FormatError("lfa.mode must be off, on or paired");
  }
  cfg.lfa = parse_alignment_config(kv, "lfa.");

  cfg.drift.r_split = kv.get_double("report.r_split", kDefaultRadiusSplit);
  if (!(cfg.drift.r_split > 0.0 && cfg.drift.r_split < 1.0)) {
    throw FormatError("report.r_split must lie in (0, 1)");
  }
  cfg.drift.bins = positive_size(kv, "report.bins", kDefaultRadialBins);
  if (cfg.drift.bins < 2) throw FormatError("report.bins must be >= 2");
  cfg.drift.pool = cfg.lfa.pool;
  cfg.power_floor = kv.get_double("report.floor", kDefaultPowerFloor);
  if (!(cfg.power_floor >= 0.0)) throw FormatError("report.floor must be >= 0");
  if (kv.has("report.spectrum_turns")) {
    cfg.spectrum_turns =
        parse_turn_list(kv.get_string("report.spectrum_turns", ""),
                        "report.spectrum_turns");
  }
  cfg.resamples = positive_size(kv, "bootstrap.resamples", 1000);
  cfg.confidence = kv.get_double("bootstrap.confidence", 0.95);
  if (!(cfg.confidence > 0.0 && cfg.confidence < 1.0)) {
    throw FormatError("bootstrap.confidence must lie in (0, 1)");
  }
  kv.check_all_used();
  cfg.echo = kv.entries();
  return cfg;
}

TransitionOperator experiment_operator(const ExperimentConfig& cfg,
                                       std::uint64_t seed) {
  SyntheticDitParams dit = cfg.dit;
  dit.bias_seed = cfg.bias_seed.value_or(seed);
  return build_operator(cfg.op_kind, dit, cfg.vae, cfg.external, seed);
}

TransitionOperator experiment_backward_operator(const ExperimentConfig& cfg,
                                                std::uint64_t seed) {
  SyntheticDitParams dit = cfg.dit;
  dit.bias_seed = cfg.bias_seed.value_or(seed);
  dit.direction = -cfg.inverse_strength * cfg.dit.direction;
  if (dit.low_gain != 0.0) dit.low_gain = 1.0 / dit.low_gain;
  // Separate noise stream from the forward operator.
  return build_operator(cfg.op_kind, dit, cfg.vae, cfg.external,
                        seed ^ 0xb5ad4eceda1ce2a9ull);
}

LatentTensor experiment_initial_latent(const ExperimentConfig& cfg,
                                       std::uint64_t seed) {
  if (cfg.latent_path) return load_latent(*cfg.latent_path);
  return synthetic_latent(cfg.latent_shape, seed);
}

namespace {

struct VariantRun {
  std::string tag;  // "base" or "lfa"
  std::optional<AlignmentConfig> lfa;
};

std::vector<VariantRun> variants(const ExperimentConfig& cfg) {
  std::vector<VariantRun> out;
  if (cfg.lfa_mode != LfaRunMode::kOn) out.push_back({"base", std::nullopt});
  if (cfg.lfa_mode != LfaRunMode::kOff) out.push_back({"lfa", cfg.lfa});
  return out;
}

ConfigEntries report_header(const ExperimentConfig& cfg, std::uint64_t seed,
                            const std::string& variant) {
  ConfigEntries h{{"experiment", std::string(to_string(cfg.kind))},
                  {"replicate_seed", std::to_string(seed)},
                  {"variant", variant},
                  {"latent_domain", "latent"}};
  for (const auto& e : cfg.echo) h.emplace_back("config." + e.first, e.second);
  return h;
}

ExperimentOutcome run_trajectories(const ExperimentConfig& cfg,
                                   const std::filesystem::path& out_dir) {
  ExperimentOutcome outcome;
  const auto runs = variants(cfg);
  std::ostringstream summary;
  summary << "seed,variant,final_l2,final_mu_disp,final_sigma_disp,"
             "final_low_band_energy\n";
  std::vector<double> base_l2, lfa_l2, base_mu, lfa_mu;

  for (std::size_t r = 0; r < cfg.replicates; ++r) {
    const std::uint64_t seed = cfg.seed + r;
    const LatentTensor z0 = experiment_initial_latent(cfg, seed);
    const TransitionOperator op = experiment_operator(cfg, seed);
    for (const auto& run : runs) {
      Trajectory t =
          cfg.kind == ExperimentKind::kNoOp
              ? run_no_op_trajectory(op, z0, cfg.turns, run.lfa, cfg.drift)
              : run_cycle_trajectory(op, experiment_backward_operator(cfg, seed),
                                     z0, cfg.pairs, run.lfa, cfg.drift);
      t.report.header = report_header(cfg, seed, run.tag);

      const std::string stem = "s" + std::to_string(seed) + "_" + run.tag;
      std::ostringstream csv;
      write_drift_report_csv(csv, t.report);
      const auto report_path = out_dir / ("report_" + stem + ".csv");
      write_text(report_path, csv.str());
      outcome.files.push_back(report_path);

      std::vector<std::size_t> wanted = cfg.spectrum_turns;
      if (wanted.empty()) wanted.push_back(t.report.turns.size());
      for (std::size_t k : wanted) {
        if (k > t.report.turns.size()) {
          throw FormatError("report.spectrum_turns entry " + std::to_string(k) +
                            " exceeds the trajectory length");
        }
        std::ostringstream spec;
        write_spectrum_csv(spec, t.report.turns[k - 1].spectrum);
        const auto path =
            out_dir / ("spectrum_" + stem + "_t" + std::to_string(k) + ".csv");
        write_text(path, spec.str());
        outcome.files.push_back(path);
      }

      const TurnRecord& last = t.report.turns.back();
      summary << seed << ',' << run.tag << ',' << format_double(last.l2) << ','
              << format_double(last.mu_disp) << ','
              << format_double(last.sigma_disp) << ','
              << format_double(last.low_band_energy) << '\n';
      (run.lfa ? lfa_l2 : base_l2).push_back(last.l2);
      (run.lfa ? lfa_mu : base_mu).push_back(last.mu_disp);
    }
  }
  const auto summary_path = out_dir / "summary.csv";
  write_text(summary_path, summary.str());
  outcome.files.push_back(summary_path);

  std::ostringstream line;
  line << to_string(cfg.kind) << " replicates=" << cfg.replicates;
  if (cfg.lfa_mode == LfaRunMode::kPaired) {
    std::vector<double> reduction(base_l2.size()), zeros(base_l2.size(), 0.0);
    std::size_t wins = 0;
    for (std::size_t i = 0; i < base_l2.size(); ++i) {
      reduction[i] = base_l2[i] > 0.0 ? 1.0 - lfa_l2[i] / base_l2[i] : 0.0;
      if (lfa_l2[i] < base_l2[i] && lfa_mu[i] < base_mu[i]) ++wins;
    }
    const BootstrapSummary b =
        paired_bootstrap(reduction, zeros, cfg.resamples, cfg.seed, cfg.confidence);
    line << " final-L2 reduction with LFA: mean=" << format_double(100.0 * b.mean)
         << "% CI" << format_double(100.0 * cfg.confidence) << "=["
         << format_double(100.0 * b.lo) << "%, " << format_double(100.0 * b.hi)
         << "%] wins=" << wins << "/" << base_l2.size();
  } else {
    const auto& l2 = cfg.lfa_mode == LfaRunMode::kOn ? lfa_l2 : base_l2;
    double mean = 0.0;
    for (double v : l2) mean += v / static_cast<double>(l2.size());
    line << " mean final L2=" << format_double(mean);
  }
  outcome.summary_line = line.str();
  return outcome;
}

ExperimentOutcome run_attribution_experiment(const ExperimentConfig& cfg,
                                             const std::filesystem::path& out_dir) {
  ExperimentOutcome outcome;
  std::ostringstream summary;
  summary << "seed,low_bins_positive,low_bins_defined,high_bins_negative,"
             "high_bins_defined\n";
  double low_frac = 0.0, high_frac = 0.0;
  for (std::size_t r = 0; r < cfg.replicates; ++r) {
    const std::uint64_t seed = cfg.seed + r;
    const LatentTensor z0 = experiment_initial_latent(cfg, seed);
    SyntheticDitParams dit = cfg.dit;
    dit.bias_seed = cfg.bias_seed.value_or(seed);
    const auto dit_op = TransitionOperator::synthetic_dit(dit, seed);
    const auto vae_op = TransitionOperator::synthetic_vae(cfg.vae, seed);
    const AttributionResult a =
        run_attribution(z0, dit_op, vae_op, cfg.turns, cfg.drift, cfg.power_floor);

    std::size_t low_pos = 0, low_def = 0, high_neg = 0, high_def = 0;
    for (std::size_t b = 0; b < a.diff.delta_percent.size(); ++b) {
      if (!a.diff.delta_percent[b]) continue;
      const double mid = a.diff.r_mid(b);
      if (mid < cfg.drift.r_split) {
        ++low_def;
        if (*a.diff.delta_percent[b] > 0.0) ++low_pos;
      } else if (mid > 0.5) {
        ++high_def;
        if (*a.diff.delta_percent[b] < 0.0) ++high_neg;
      }
    }
    summary << seed << ',' << low_pos << ',' << low_def << ',' << high_neg << ','
            << high_def << '\n';
    low_frac += low_def ? static_cast<double>(low_pos) / static_cast<double>(low_def) : 0.0;
    high_frac +=
        high_def ? static_cast<double>(high_neg) / static_cast<double>(high_def) : 0.0;

    const std::string stem = "s" + std::to_string(seed);
    std::ostringstream diff_csv;
    for (const auto& [k, v] : report_header(cfg, seed, "attribution")) {
      diff_csv << "# " << k << '=' << v << '\n';
    }
    write_spectrum_diff_csv(diff_csv, a.diff);
    const auto diff_path = out_dir / ("attribution_" + stem + ".csv");
    write_text(diff_path, diff_csv.str());
    outcome.files.push_back(diff_path);

    for (const auto& [name, spectrum] :
         {std::pair{"dit", &a.dit}, std::pair{"vae", &a.vae}}) {
      std::ostringstream s;
      write_spectrum_csv(s, *spectrum);
      const auto path = out_dir / ("spectrum_" + stem + "_" + name + ".csv");
      write_text(path, s.str());
      outcome.files.push_back(path);
    }
  }
  const auto summary_path = out_dir / "summary.csv";
  write_text(summary_path, summary.str());
  outcome.files.push_back(summary_path);

  const double n = static_cast<double>(cfg.replicates);
  std::ostringstream line;
  line << "attribution replicates=" << cfg.replicates
       << " low-band bins with dP>0: " << format_double(100.0 * low_frac / n)
       << "% high-band bins with dP<0: " << format_double(100.0 * high_frac / n)
       << "%";
  outcome.summary_line = line.str();
  return outcome;
}

}  // namespace

ExperimentOutcome run_experiment(const ExperimentConfig& cfg,
                                 const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create output directory '" + out_dir.string() + "'");
  if (cfg.kind == ExperimentKind::kAttribution) {
    return run_attribution_experiment(cfg, out_dir);
  }
  return run_trajectories(cfg, out_dir);
}

}  // namespace vaelfa
