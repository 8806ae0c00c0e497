// Copyright 2026 The vaelfa Authors
// SPDX-License-Identifier: Apache-2.0

#include "vaelfa/transitions.hpp"

#include <cmath>
#include <random>

#include "vaelfa/adapter.hpp"
#include "vaelfa/errors.hpp"
#include "vaelfa/npy.hpp"

namespace vaelfa {
namespace {

enum class Stream : std::uint32_t {
  kBiasField = 1,
  kHighNoise = 2,
  kFlatNoise = 3,
  kLatent = 4,
};

std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t turn, Stream stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(turn),
                    static_cast<std::uint32_t>(turn >> 32),
                    static_cast<std::uint32_t>(stream)};
  return std::mt19937_64(seq);
}

WorkTensor normal_field(const Shape& shape, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> data(shape.size());
  for (auto& v : data) v = normal(rng);
  return WorkTensor(shape, std::move(data));
}

// Sub-seeds so the DiT and VAE halves of a composed operator draw
// independent noise.
constexpr std::uint64_t kVaeSeedOffset = 0x9e3779b97f4a7c15ull;

WorkTensor apply_dit(const SyntheticDitParams& p, std::uint64_t seed,
                     const WorkTensor& z, std::uint64_t turn) {
  // gain * L(z) + (z - L(z)) written as z + (gain - 1) * L(z), which is
  // exactly z when the gain is 1.
  std::vector<double> out(z.data().begin(), z.data().end());
  if (p.low_gain != 1.0) {
    const WorkTensor low = low_pass(z, p.pool);
    for (std::size_t k = 0; k < out.size(); ++k) {
      out[k] += (p.low_gain - 1.0) * low.data()[k];
    }
  }
  if (p.low_bias_scale != 0.0) {
    auto rng = make_rng(p.bias_seed, 0, Stream::kBiasField);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> field(z.size());
    const std::size_t plane = z.shape().plane();
    for (std::size_t c = 0; c < z.channels(); ++c) {
      const double offset = normal(rng);
      for (std::size_t k = 0; k < plane; ++k) {
        field[c * plane + k] = offset + 0.5 * normal(rng);
      }
    }
    const WorkTensor bias = low_pass(WorkTensor(z.shape(), std::move(field)), p.pool);
    const double scale = p.direction * p.low_bias_scale;
    for (std::size_t k = 0; k < out.size(); ++k) out[k] += scale * bias.data()[k];
  }
  if (p.high_noise_scale != 0.0) {
    auto rng = make_rng(seed, turn, Stream::kHighNoise);
    const WorkTensor n = normal_field(z.shape(), rng);
    const WorkTensor n_low = low_pass(n, p.pool);
    for (std::size_t k = 0; k < out.size(); ++k) {
      out[k] += p.high_noise_scale * (n.data()[k] - n_low.data()[k]);
    }
  }
  return WorkTensor(z.shape(), std::move(out));
}

WorkTensor apply_vae(const SyntheticVaeParams& p, std::uint64_t seed,
                     const std::optional<ChannelStats>& reference,
                     const WorkTensor& z, std::uint64_t turn) {
  std::vector<double> out(z.data().begin(), z.data().end());
  if (p.flat_noise_scale != 0.0) {
    auto rng = make_rng(seed, turn, Stream::kFlatNoise);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (auto& v : out) v += p.flat_noise_scale * normal(rng);
  }
  WorkTensor noisy(z.shape(), std::move(out));
  if (p.low_regularize == 0.0 || !reference) return noisy;
  if (reference->channels() != z.channels()) {
    throw FormatError("VAE reference has " + std::to_string(reference->channels()) +
                      " channels, latent has " + std::to_string(z.channels()));
  }

  const WorkTensor low = low_pass(noisy, p.pool);
  const ChannelStats s = channel_mean_std(low);
  const double lambda = p.low_regularize;
  std::vector<double> result(noisy.data().begin(), noisy.data().end());
  const std::size_t plane = z.shape().plane();
  for (std::size_t c = 0; c < z.channels(); ++c) {
    const double mu = s.means[c];
    const double sigma = s.stds[c];
    const double mu_new = mu + lambda * (reference->means[c] - mu);
    const double sigma_new = sigma + lambda * (reference->stds[c] - sigma);
    const double gain = sigma > 0.0 ? sigma_new / sigma : 1.0;
    for (std::size_t k = 0; k < plane; ++k) {
      const std::size_t idx = c * plane + k;
      result[idx] += (mu_new - mu) + (gain - 1.0) * (low.data()[idx] - mu);
    }
  }
  return WorkTensor(z.shape(), std::move(result));
}

LatentTensor apply_external(const ExternalTransitionParams& p, std::uint64_t seed,
                            const LatentTensor& z, std::uint64_t turn) {
  validate_command_template(p.command, "external transition command");
  const auto bytes = run_adapter_command(
      p.command, encode_npy(z), "input.npy", "output.npy", p.timeout_seconds,
      p.workdir, {{"turn", std::to_string(turn)}, {"seed", std::to_string(seed)}});
  try {
    return decode_npy(bytes, z.shape());
  } catch (const FormatError& e) {
    throw AdapterError(std::string("external transition produced an invalid latent: ") +
                       e.what());
  }
}

}  // namespace

void SyntheticDitParams::validate() const {
  pool.validate();
  if (!(low_bias_scale >= 0.0)) throw FormatError("dit.low_bias_scale must be >= 0");
  if (!(high_noise_scale >= 0.0)) {
    throw FormatError("dit.high_noise_scale must be >= 0");
  }
  if (!std::isfinite(low_gain) || !std::isfinite(direction)) {
    throw FormatError("dit.low_gain and dit.direction must be finite");
  }
}

void SyntheticVaeParams::validate() const {
  pool.validate();
  if (!(flat_noise_scale >= 0.0)) {
    throw FormatError("vae.flat_noise_scale must be >= 0");
  }
  if (!(low_regularize >= 0.0 && low_regularize <= 1.0)) {
    throw FormatError("vae.low_regularize must lie in [0, 1]");
  }
}

std::string_view to_string(TransitionKind kind) noexcept {
  switch (kind) {
    case TransitionKind::kSyntheticDit:
      return "synthetic_dit";
    case TransitionKind::kSyntheticVae:
      return "synthetic_vae";
    case TransitionKind::kComposed:
      return "composed";
    case TransitionKind::kExternalAdapter:
      return "external_adapter";
  }
  return "?";
}

TransitionKind parse_transition_kind(std::string_view text) {
  if (text == "synthetic_dit") return TransitionKind::kSyntheticDit;
  if (text == "synthetic_vae") return TransitionKind::kSyntheticVae;
  if (text == "composed") return TransitionKind::kComposed;
  if (text == "external_adapter") return TransitionKind::kExternalAdapter;
  throw FormatError("unknown transition kind '" + std::string(text) + "'");
}

TransitionOperator TransitionOperator::identity() {
  return synthetic_dit(SyntheticDitParams::identity(), 0);
}

TransitionOperator TransitionOperator::synthetic_dit(const SyntheticDitParams& p,
                                                     std::uint64_t seed) {
  p.validate();
  TransitionOperator op;
  op.kind = TransitionKind::kSyntheticDit;
  op.dit = p;
  op.seed = seed;
  return op;
}

TransitionOperator TransitionOperator::synthetic_vae(const SyntheticVaeParams& p,
                                                     std::uint64_t seed) {
  p.validate();
  TransitionOperator op;
  op.kind = TransitionKind::kSyntheticVae;
  op.vae = p;
  op.seed = seed;
  return op;
}

TransitionOperator TransitionOperator::composed(const SyntheticDitParams& dit,
                                                const SyntheticVaeParams& vae,
                                                std::uint64_t seed) {
  dit.validate();
  vae.validate();
  TransitionOperator op;
  op.kind = TransitionKind::kComposed;
  op.dit = dit;
  op.vae = vae;
  op.seed = seed;
  return op;
}

TransitionOperator TransitionOperator::external_adapter(
    const ExternalTransitionParams& p, std::uint64_t seed) {
  validate_command_template(p.command, "external transition command");
  TransitionOperator op;
  op.kind = TransitionKind::kExternalAdapter;
  op.external = p;
  op.seed = seed;
  return op;
}

TransitionOperator with_reference(TransitionOperator op, const LatentTensor& z0) {
  op.vae_reference = channel_mean_std(low_pass(z0, op.vae.pool));
  return op;
}

NoOpBias no_op_bias(const TransitionOperator& op, const LatentTensor& z,
                    std::uint64_t turn) {
  const WorkTensor zw = widen(z);
  if (op.kind != TransitionKind::kComposed) {
    return {difference(apply_transition(op, z, turn), z), std::nullopt, std::nullopt};
  }
  // Each stage is rounded to float exactly as apply_transition does, so the
  // split refers to the same G(z) and Phi(z) a trajectory would see.
  const LatentTensor g = narrow(apply_dit(op.dit, op.seed, zw, turn), "DiT output");
  const LatentTensor phi = narrow(
      apply_vae(op.vae, op.seed ^ kVaeSeedOffset, op.vae_reference, widen(g), turn),
      "VAE output");
  return {difference(phi, z), difference(g, z), difference(phi, g)};
}

LatentTensor apply_transition(const TransitionOperator& op, const LatentTensor& z,
                              std::uint64_t turn) {
  LatentTensor out;
  switch (op.kind) {
    case TransitionKind::kSyntheticDit:
      out = narrow(apply_dit(op.dit, op.seed, widen(z), turn), "DiT output");
      break;
    case TransitionKind::kSyntheticVae:
      out = narrow(apply_vae(op.vae, op.seed ^ kVaeSeedOffset, op.vae_reference,
                             widen(z), turn),
                   "VAE output");
      break;
    case TransitionKind::kComposed: {
      const LatentTensor g =
          narrow(apply_dit(op.dit, op.seed, widen(z), turn), "DiT output");
      out = narrow(apply_vae(op.vae, op.seed ^ kVaeSeedOffset, op.vae_reference,
                             widen(g), turn),
                   "VAE output");
      break;
    }
    case TransitionKind::kExternalAdapter:
      out = apply_external(op.external, op.seed, z, turn);
      break;
  }
  out.set_label(z.label());
  return out;
}

LatentTensor synthetic_latent(const Shape& shape, std::uint64_t seed) {
  auto rng = make_rng(seed, 0, Stream::kLatent);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> offsets(shape.channels);
  for (auto& o : offsets) o = 0.5 * normal(rng);
  const WorkTensor smooth = low_pass(normal_field(shape, rng), PoolingFilterSpec{9});
  const WorkTensor texture = normal_field(shape, rng);
  std::vector<double> data(shape.size());
  const std::size_t plane = shape.plane();
  for (std::size_t k = 0; k < data.size(); ++k) {
    data[k] = offsets[k / plane] + 6.0 * smooth.data()[k] + 0.6 * texture.data()[k];
  }
  return narrow(WorkTensor(shape, std::move(data)), "synthetic latent");
}

}  // namespace vaelfa
