// Copyright 2026 The vaelfa Authors
// SPDX-License-Identifier: Apache-2.0

// vaelfa: low-frequency latent alignment and spectral drift tools.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "vaelfa/errors.hpp"
#include "vaelfa/experiment.hpp"
#include "vaelfa/format.hpp"
#include "vaelfa/metrics.hpp"
#include "vaelfa/npy.hpp"
#include "vaelfa/session.hpp"
#include "vaelfa/stats.hpp"

namespace {

using namespace vaelfa;

struct LfaFlags {
  int window = 9;
  double alpha_mu = 0.95;
  double alpha_sigma = 0.85;
  double epsilon = 1e-5;
  std::string anchor_mode = "ema";
  std::string scope = "low_only";
  bool allow_zero_sigma = false;

  void add(CLI::App* app) {
    app->add_option("--window", window, "Box filter size rho (odd)")->capture_default_str();
    app->add_option("--alpha-mu", alpha_mu, "EMA momentum for channel means")
        ->capture_default_str();
    app->add_option("--alpha-sigma", alpha_sigma, "EMA momentum for log std")
        ->capture_default_str();
    app->add_option("--epsilon", epsilon, "Stabilizer in the std ratio")
        ->capture_default_str();
    app->add_option("--anchor-mode", anchor_mode, "ema, fixed or prev")
        ->capture_default_str();
    app->add_option("--scope", scope, "low_only, high_only or both")
        ->capture_default_str();
    app->add_flag("--allow-zero-sigma", allow_zero_sigma,
                  "Use sigma = epsilon for constant channels instead of failing");
  }

  AlignmentConfig config() const {
    AlignmentConfig cfg;
    cfg.pool.window = window;
    cfg.alpha_mu = alpha_mu;
    cfg.alpha_sigma = alpha_sigma;
    cfg.epsilon = epsilon;
    cfg.anchor_mode = parse_anchor_mode(anchor_mode);
    cfg.scope = parse_align_scope(scope);
    cfg.allow_zero_sigma = allow_zero_sigma;
    cfg.validate();
    return cfg;
  }
};

struct AdapterFlags {
  std::string encode_cmd;
  std::string decode_cmd;
  std::optional<double> timeout;
  std::string workdir;

  void add(CLI::App* app) {
    app->add_option("--encode-cmd", encode_cmd,
                    "PNG -> NPY command with {input} and {output}");
    app->add_option("--decode-cmd", decode_cmd,
                    "NPY -> PNG command with {input} and {output}");
    app->add_option("--adapter-timeout", timeout,
                    "Seconds (default 300, or VAELFA_ADAPTER_TIMEOUT)");
    app->add_option("--adapter-workdir", workdir, "Working directory for adapters");
  }

  bool given() const { return !encode_cmd.empty() || !decode_cmd.empty(); }

  AdapterSpec spec(const AdapterSpec& base = {}) const {
    AdapterSpec s = base;
    if (!encode_cmd.empty()) s.encode_cmd = encode_cmd;
    if (!decode_cmd.empty()) s.decode_cmd = decode_cmd;
    if (!workdir.empty()) s.workdir = workdir;
    s.timeout_seconds = timeout ? *timeout : adapter_timeout_from_env(s.timeout_seconds);
    if (s.configured()) s.validate();
    return s;
  }
};

void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << text;
  if (!out) throw IoError("write failed for '" + path + "'");
}

void emit_bytes(const std::string& path, const std::vector<std::uint8_t>& bytes) {
  write_file_bytes(path, bytes);
}

std::string stats_csv(const ChannelStats& s) {
  std::ostringstream out;
  out << "channel,mean,std\n";
  for (std::size_t c = 0; c < s.channels(); ++c) {
    out << c << ',' << format_double(s.means[c]) << ',' << format_double(s.stds[c])
        << '\n';
  }
  return out.str();
}

AnchorState read_anchor(const std::string& path) {
  const auto bytes = read_file_bytes(path);
  return deserialize_anchor(std::string(bytes.begin(), bytes.end()));
}

void print_report(const std::string& path, const DriftReport& report) {
  std::ostringstream out;
  write_drift_report_csv(out, report);
  emit(path, out.str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Low-frequency latent alignment and spectral drift diagnostics"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "vaelfa 0.1.0");

  // stats
  auto* stats = app.add_subcommand("stats", "Per-channel mean and std as CSV");
  std::string stats_in, stats_out;
  bool stats_low = false;
  int stats_window = 9;
  stats->add_option("input", stats_in, "Latent .npy")->required();
  stats->add_flag("--low", stats_low, "Statistics of the low-pass band");
  stats->add_option("--window", stats_window, "Box filter size for --low")
      ->capture_default_str();
  stats->add_option("-o,--output", stats_out, "CSV path (default stdout)");

  // decompose
  auto* dec = app.add_subcommand("decompose", "Split a latent into low and high bands");
  std::string dec_in, dec_low, dec_high;
  int dec_window = 9;
  dec->add_option("input", dec_in, "Latent .npy")->required();
  dec->add_option("--low", dec_low, "Output path for the low band")->required();
  dec->add_option("--high", dec_high, "Output path for the high band (float32)")
      ->required();
  dec->add_option("--window", dec_window, "Box filter size rho")->capture_default_str();

  // spectrum
  auto* spec = app.add_subcommand("spectrum", "Radial power spectrum as CSV");
  std::string spec_in, spec_against, spec_out;
  std::size_t spec_bins = kDefaultRadialBins;
  bool spec_dc = false;
  double spec_floor = kDefaultPowerFloor;
  spec->add_option("input", spec_in, "Latent .npy")->required();
  spec->add_option("--bins", spec_bins, "Number of radial bins")->capture_default_str();
  spec->add_flag("--remove-dc", spec_dc, "Zero the DC coefficient before binning");
  spec->add_option("--against", spec_against,
                   "Reference latent; writes 100 (P - P_ref) / P_ref per bin");
  spec->add_option("--floor", spec_floor, "Reference power below which a bin is undefined")
      ->capture_default_str();
  spec->add_option("-o,--output", spec_out, "CSV path (default stdout)");

  // diff
  auto* diff = app.add_subcommand("diff", "Drift metrics between two latents");
  std::string diff_a, diff_b;
  double diff_split = kDefaultRadiusSplit;
  diff->add_option("latent", diff_a, "Latent .npy")->required();
  diff->add_option("reference", diff_b, "Reference latent .npy")->required();
  diff->add_option("--r-split", diff_split, "Low/high band split radius")
      ->capture_default_str();

  // anchor-init
  auto* ainit = app.add_subcommand("anchor-init", "Initialize anchors from a latent");
  std::string ainit_in, ainit_out, ainit_high;
  LfaFlags ainit_lfa;
  ainit->add_option("input", ainit_in, "Initial latent .npy")->required();
  ainit->add_option("-o,--output", ainit_out, "Low-band anchor path")->required();
  ainit->add_option("--high-output", ainit_high, "High-band anchor path");
  ainit_lfa.add(ainit);

  // align
  auto* align = app.add_subcommand("align", "Align a latent to anchor targets");
  std::string align_in, align_anchor, align_anchor_high, align_out, align_new,
      align_new_high;
  bool align_component = false;
  LfaFlags align_lfa;
  align->add_option("input", align_in, "Latent .npy (transition output)")->required();
  align->add_option("--anchor", align_anchor, "Anchor from the previous turn")
      ->required();
  align->add_option("--anchor-high", align_anchor_high, "High-band anchor");
  align->add_option("-o,--output", align_out, "Aligned latent path")->required();
  align->add_option("--new-anchor", align_new, "Write the updated anchor here");
  align->add_option("--new-anchor-high", align_new_high,
                    "Write the updated high-band anchor here");
  align->add_flag("--component", align_component,
                  "Treat the input as a band component and moment-match it directly");
  align_lfa.add(align);

  // transition
  auto* trans = app.add_subcommand("transition", "Apply a transition operator");
  std::string trans_cfg, trans_in, trans_out, trans_ref;
  std::uint64_t trans_turn = 1;
  trans->add_option("--op", trans_cfg, "Operator config file")->required();
  trans->add_option("input", trans_in, "Latent .npy")->required();
  trans->add_option("output", trans_out, "Output latent path")->required();
  trans->add_option("--turn", trans_turn, "Turn index (noise stream)")
      ->capture_default_str();
  trans->add_option("--reference", trans_ref,
                    "Latent whose low-band stats the VAE stage is pulled toward");

  // simulate
  auto* sim = app.add_subcommand("simulate", "Run a drift experiment from a config file");
  std::string sim_cfg, sim_out;
  sim->add_option("config", sim_cfg, "Experiment config file")->required();
  sim->add_option("output_dir", sim_out, "Directory for reports")->required();

  // session
  auto* sess = app.add_subcommand("session", "Persistent multi-turn alignment");
  sess->require_subcommand(1);
  auto* s_init = sess->add_subcommand("init", "Create a session");
  std::string s_dir, s_latent, s_image, s_id, s_out;
  LfaFlags s_lfa;
  AdapterFlags s_adapter;
  double s_split = kDefaultRadiusSplit;
  std::size_t s_bins = kDefaultRadialBins;
  s_init->add_option("dir", s_dir, "Session directory")->required();
  auto* init_src = s_init->add_option_group("source");
  init_src->add_option("--latent", s_latent, "Initial latent .npy");
  init_src->add_option("--image", s_image, "Initial PNG (encoded by the adapter)");
  init_src->require_option(1);
  s_init->add_option("--id", s_id, "Session id (default: from the initial latent)");
  s_init->add_option("--r-split", s_split, "Band split radius for reports")
      ->capture_default_str();
  s_init->add_option("--bins", s_bins, "Radial bins for reports")->capture_default_str();
  s_lfa.add(s_init);
  s_adapter.add(s_init);

  auto* s_step = sess->add_subcommand("step", "Advance one turn");
  AdapterFlags step_adapter;
  std::string step_latent, step_image, step_out;
  s_step->add_option("dir", s_dir, "Session directory")->required();
  auto* step_src = s_step->add_option_group("source");
  step_src->add_option("--latent", step_latent, "Transition output latent .npy");
  step_src->add_option("--image", step_image, "Edited PNG (black-box shape)");
  step_src->require_option(1);
  s_step->add_option("-o,--output", step_out,
                     "Copy of the aligned latent (or decoded PNG for --image)");
  step_adapter.add(s_step);

  auto* s_status = sess->add_subcommand("status", "Print turn and anchor digest");
  bool status_anchor = false;
  s_status->add_option("dir", s_dir, "Session directory")->required();
  s_status->add_flag("--anchor", status_anchor, "Also print the anchor record");

  auto* s_export = sess->add_subcommand("export", "Drift report CSV for the session");
  s_export->add_option("dir", s_dir, "Session directory")->required();
  s_export->add_option("-o,--output", s_out, "CSV path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (*stats) {
      const LatentTensor z = load_latent(stats_in);
      if (stats_low) {
        PoolingFilterSpec pool{stats_window};
        pool.validate();
        emit(stats_out, stats_csv(channel_mean_std(low_pass(z, pool))));
      } else {
        emit(stats_out, stats_csv(channel_mean_std(z)));
      }
    } else if (*dec) {
      PoolingFilterSpec pool{dec_window};
      pool.validate();
      const FrequencyDecomposition d = decompose(load_latent(dec_in), pool);
      save_latent(d.low, dec_low);
      save_latent(narrow(d.high, "high band"), dec_high);
    } else if (*spec) {
      if (spec_bins < 2) throw FormatError("--bins must be at least 2");
      const LatentTensor z = load_latent(spec_in);
      const RadialSpectrum s = radial_spectrum(z, spec_bins, spec_dc);
      std::ostringstream out;
      if (spec_against.empty()) {
        write_spectrum_csv(out, s);
      } else {
        const LatentTensor ref = load_latent(spec_against, z.shape());
        write_spectrum_diff_csv(
            out, relative_spectrum_diff(s, radial_spectrum(ref, spec_bins, spec_dc),
                                        spec_floor));
      }
      emit(spec_out, out.str());
    } else if (*diff) {
      if (!(diff_split > 0.0 && diff_split < 1.0)) {
        throw FormatError("--r-split must lie in (0, 1)");
      }
      const LatentTensor a = load_latent(diff_a);
      const LatentTensor b = load_latent(diff_b, a.shape());
      const LatentMetrics m = latent_metrics(a, b);
      const BandEnergy e = band_energy(difference(a, b), diff_split);
      std::cout << "l1=" << format_double(m.l1) << '\n'
                << "l2=" << format_double(m.l2) << '\n'
                << "ssim=" << format_double(m.ssim_global) << '\n'
                << "low_band_energy=" << format_double(e.low) << '\n'
                << "high_band_energy=" << format_double(e.high) << '\n';
    } else if (*ainit) {
      const AlignmentConfig cfg = ainit_lfa.config();
      const LfaState st = lfa_init(load_latent(ainit_in), cfg);
      emit(ainit_out, serialize_anchor(st.low));
      if (!ainit_high.empty()) {
        if (!st.high) throw FormatError("--high-output needs --scope both or high_only");
        emit(ainit_high, serialize_anchor(*st.high));
      }
    } else if (*align) {
      const AlignmentConfig cfg = align_lfa.config();
      const LatentTensor z = load_latent(align_in);
      LfaState st;
      st.low = read_anchor(align_anchor);
      if (st.low.channels() != z.channels()) {
        throw FormatError("anchor has " + std::to_string(st.low.channels()) +
                          " channels, latent has " + std::to_string(z.channels()));
      }
      if (align_component) {
        save_latent(align_low(z, st.low, cfg), align_out);
        if (!align_new.empty()) emit(align_new, serialize_anchor(anchor_update(st.low, z, cfg)));
      } else {
        if (cfg.aligns_high()) {
          if (align_anchor_high.empty()) {
            throw FormatError("--scope " + align_lfa.scope + " needs --anchor-high");
          }
          st.high = read_anchor(align_anchor_high);
          if (st.high->channels() != z.channels()) {
            throw FormatError("high-band anchor channel count mismatch");
          }
        }
        const LfaStepResult r = lfa_step(z, st, cfg);
        save_latent(r.z_hat, align_out);
        if (!align_new.empty()) emit(align_new, serialize_anchor(r.state.low));
        if (!align_new_high.empty() && r.state.high) {
          emit(align_new_high, serialize_anchor(*r.state.high));
        }
      }
    } else if (*trans) {
      TransitionOperator op = parse_operator_config(KeyValueConfig::load(trans_cfg));
      const LatentTensor z = load_latent(trans_in);
      if (!trans_ref.empty()) op = with_reference(op, load_latent(trans_ref, z.shape()));
      save_latent(apply_transition(op, z, trans_turn), trans_out);
    } else if (*sim) {
      const ExperimentConfig cfg = parse_experiment_config(KeyValueConfig::load(sim_cfg));
      std::cout << run_experiment(cfg, sim_out).summary_line << '\n';
    } else if (*s_init) {
      SessionOptions opts;
      opts.id = s_id;
      opts.lfa = s_lfa.config();
      opts.lfa.validate();
      opts.drift.r_split = s_split;
      opts.drift.bins = s_bins;
      opts.drift.pool = opts.lfa.pool;
      if (!(s_split > 0.0 && s_split < 1.0)) throw FormatError("--r-split must lie in (0, 1)");
      if (s_bins < 2) throw FormatError("--bins must be at least 2");
      opts.adapter = s_adapter.spec();
      Session s = s_latent.empty()
                      ? Session::create_from_image(s_dir, read_file_bytes(s_image), opts)
                      : Session::create(s_dir, load_latent(s_latent), opts);
      std::cout << "session " << s.id() << " turn " << s.turn() << " anchor "
                << s.anchor_digest() << '\n';
    } else if (*s_step) {
      Session s = Session::open(s_dir);
      s.set_adapter(step_adapter.spec(s.options().adapter));
      if (!step_latent.empty()) {
        const LfaStepResult r = s.step_latent(load_latent(step_latent));
        if (!step_out.empty()) save_latent(r.z_hat, step_out);
      } else {
        const auto png = s.step_image(read_file_bytes(step_image));
        if (!step_out.empty()) emit_bytes(step_out, png);
      }
      std::cout << "session " << s.id() << " turn " << s.turn() << " anchor "
                << s.anchor_digest() << '\n';
    } else if (*s_status) {
      const Session s = Session::open(s_dir);
      std::cout << "session " << s.id() << '\n'
                << "turn " << s.turn() << '\n'
                << "anchor " << s.anchor_digest() << '\n';
      if (status_anchor) std::cout << serialize_anchor(s.state().low);
    } else if (*s_export) {
      const Session s = Session::open(s_dir);
      print_report(s_out, s.export_report());
    }
  } catch (const Error& e) {
    std::cerr << "vaelfa: " << e.category() << " error: " << e.what() << '\n';
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "vaelfa: error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
