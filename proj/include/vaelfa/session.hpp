// Copyright 2026 The vaelfa Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "vaelfa/adapter.hpp"
#include "vaelfa/alignment.hpp"
#include "vaelfa/trajectory.hpp"

namespace vaelfa {

// Session directory layout:
//   session.cfg              key = value settings, written once at init
//   manifest.txt             "k kind path sha256" per artifact, append-only
//   latents/turn_NNNN.npy    z_0 and every aligned z_hat
//   anchors/anchor_NNNN.txt  low-band anchor after turn N
//   anchors/high_NNNN.txt    high-band anchor (scope both/high_only)
//   images/turn_NNNN.png     decoded images in the black-box shape
//   lock                     flock target while a process owns the session
//
// Artifacts are written first and the manifest is replaced by rename last,
// so a failed step leaves the previous state untouched.

struct ManifestEntry {
  std::uint64_t turn = 0;
  std::string kind;  // config, latent, anchor, anchor_high, image
  std::string path;  // relative to the session directory
  std::string sha256;

  bool operator==(const ManifestEntry&) const = default;
};

std::string serialize_manifest(const std::vector<ManifestEntry>& entries);
std::vector<ManifestEntry> parse_manifest(std::string_view text);

struct SessionOptions {
  std::string id;  // empty: derived from the initial latent
  AlignmentConfig lfa;
  DriftOptions drift;
  AdapterSpec adapter;
};

class Session {
 public:
  // Fails with IoError if `dir` exists and is not empty.
  static Session create(const std::filesystem::path& dir, const LatentTensor& z0,
                        const SessionOptions& opts);
  // Encodes `png` with the adapter to obtain z_0; the image is kept as turn 0.
  static Session create_from_image(const std::filesystem::path& dir,
                                   const std::vector<std::uint8_t>& png,
                                   const SessionOptions& opts);
  // Verifies every manifest checksum (ChecksumError) and takes the lock
  // (IoError when another process holds it).
  static Session open(const std::filesystem::path& dir);

  Session(Session&& other) noexcept;
  Session& operator=(Session&& other) noexcept;
  Session(const Session&) = delete;
  Session& operator=(const Session&) = delete;
  ~Session();

  // White-box shape: z_tilde is the caller's transition output.
  LfaStepResult step_latent(const LatentTensor& z_tilde);
  // Black-box shape: encode, align, decode. Returns the decoded PNG.
  std::vector<std::uint8_t> step_image(const std::vector<std::uint8_t>& png);

  // Overrides the stored adapter commands for this process only.
  void set_adapter(const AdapterSpec& spec) { opts_.adapter = spec; }

  std::uint64_t turn() const noexcept { return state_.turn(); }
  const std::string& id() const noexcept { return opts_.id; }
  const SessionOptions& options() const noexcept { return opts_; }
  const LfaState& state() const noexcept { return state_; }
  const Shape& shape() const noexcept { return shape_; }
  const std::vector<ManifestEntry>& manifest() const noexcept { return manifest_; }
  const std::filesystem::path& dir() const noexcept { return dir_; }

  LatentTensor latent(std::uint64_t k) const;
  // sha256 of serialize_anchor(state().low).
  std::string anchor_digest() const;
  DriftReport export_report() const;

 private:
  Session() = default;
  void lock();
  void commit(const LfaStepResult& step, const std::vector<std::uint8_t>* png);
  std::string write_artifact(const std::string& rel, const std::string& bytes);
  void write_manifest(const std::vector<ManifestEntry>& entries);
  static Session initialize(const std::filesystem::path& dir, const LatentTensor& z0,
                            SessionOptions opts,
                            const std::vector<std::uint8_t>* png);

  std::filesystem::path dir_;
  SessionOptions opts_;
  Shape shape_{1, 1, 1};
  LfaState state_;
  std::vector<ManifestEntry> manifest_;
  int lock_fd_ = -1;
};

}  // namespace vaelfa
