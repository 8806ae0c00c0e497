// Copyright 2026 The vaelfa Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "vaelfa/tensor.hpp"

namespace vaelfa {

inline constexpr double kDefaultAdapterTimeout = 300.0;

// External encoder/decoder commands. Each template must contain `{input}`
// and `{output}` exactly once; both are replaced by shell-quoted paths.
struct AdapterSpec {
  std::string encode_cmd;
  std::string decode_cmd;
  double timeout_seconds = kDefaultAdapterTimeout;
  std::filesystem::path workdir;

  bool configured() const noexcept {
    return !encode_cmd.empty() && !decode_cmd.empty();
  }
  void validate() const;
};

// Adapter timeout from $VAELFA_ADAPTER_TIMEOUT, else `fallback`.
double adapter_timeout_from_env(double fallback);

// Checks that a template holds `{input}` and `{output}` exactly once.
void validate_command_template(const std::string& tmpl, const std::string& what);

std::string substitute_placeholders(
    const std::string& tmpl, const std::map<std::string, std::string>& values);

// Runs one adapter invocation in a fresh scratch directory. `input_bytes` is
// written to <scratch>/<input_name>; the command must exit 0 and leave
// exactly one new file, <scratch>/<output_name>. Returns that file's bytes.
// Any violation throws AdapterError carrying the stderr digest.
std::vector<std::uint8_t> run_adapter_command(
    const std::string& tmpl, const std::vector<std::uint8_t>& input_bytes,
    const std::string& input_name, const std::string& output_name,
    double timeout_seconds, const std::filesystem::path& workdir,
    const std::map<std::string, std::string>& extra = {});

bool has_png_signature(const std::vector<std::uint8_t>& bytes);

// image (PNG) -> latent (NPY float32 (C,H,W))
LatentTensor adapter_encode(const AdapterSpec& spec,
                            const std::vector<std::uint8_t>& png);
// latent -> image (PNG bytes)
std::vector<std::uint8_t> adapter_decode(const AdapterSpec& spec,
                                         const LatentTensor& latent);

}  // namespace vaelfa
