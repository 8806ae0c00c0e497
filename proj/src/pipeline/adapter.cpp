// Copyright 2026 The vaelfa Authors
// SPDX-License-Identifier: Apache-2.0

#include "vaelfa/adapter.hpp"

#include <cstdlib>
#include <set>

#include "vaelfa/errors.hpp"
#include "vaelfa/format.hpp"
#include "vaelfa/npy.hpp"
#include "vaelfa/process.hpp"

namespace vaelfa {
namespace {

std::size_t count_occurrences(const std::string& s, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = s.find(needle); pos != std::string::npos;
       pos = s.find(needle, pos + needle.size())) {
    ++n;
  }
  return n;
}

std::set<std::string> list_entries(const std::filesystem::path& dir) {
  std::set<std::string> out;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    out.insert(entry.path().filename().string());
  }
  return out;
}

}  // namespace

void validate_command_template(const std::string& tmpl, const std::string& what) {
  for (const char* key : {"{input}", "{output}"}) {
    const std::size_t n = count_occurrences(tmpl, key);
    if (n != 1) {
      throw FormatError(what + " must contain " + key + " exactly once (found " +
                        std::to_string(n) + ")");
    }
  }
}

void AdapterSpec::validate() const {
  validate_command_template(encode_cmd, "adapter encode_cmd");
  validate_command_template(decode_cmd, "adapter decode_cmd");
  if (!(timeout_seconds > 0.0)) throw FormatError("adapter timeout must be > 0");
}

double adapter_timeout_from_env(double fallback) {
  if (const char* env = std::getenv("VAELFA_ADAPTER_TIMEOUT"); env && *env) {
    const double v = parse_double(env, "VAELFA_ADAPTER_TIMEOUT");
    if (!(v > 0.0)) throw FormatError("VAELFA_ADAPTER_TIMEOUT must be > 0");
    return v;
  }
  return fallback;
}

std::string substitute_placeholders(
    const std::string& tmpl, const std::map<std::string, std::string>& values) {
  std::string out;
  std::size_t pos = 0;
  while (pos < tmpl.size()) {
    const auto open = tmpl.find('{', pos);
    if (open == std::string::npos) break;
    const auto close = tmpl.find('}', open);
    if (close == std::string::npos) break;
    const auto it = values.find(tmpl.substr(open + 1, close - open - 1));
    out += tmpl.substr(pos, open - pos);
    if (it != values.end()) {
      out += shell_quote(it->second);
      pos = close + 1;
    } else {
      // Not a placeholder (e.g. a shell brace group); rescan after the brace.
      out += '{';
      pos = open + 1;
    }
  }
  out += tmpl.substr(pos);
  return out;
}

std::vector<std::uint8_t> run_adapter_command(
    const std::string& tmpl, const std::vector<std::uint8_t>& input_bytes,
    const std::string& input_name, const std::string& output_name,
    double timeout_seconds, const std::filesystem::path& workdir,
    const std::map<std::string, std::string>& extra) {
  if (tmpl.empty()) throw AdapterError("no adapter command configured");
  TempDir scratch("vaelfa-adapter");
  const auto input = scratch.path() / input_name;
  const auto output = scratch.path() / output_name;
  write_file_bytes(input, input_bytes);

  std::map<std::string, std::string> values = extra;
  values["input"] = input.string();
  values["output"] = output.string();
  const std::string command = substitute_placeholders(tmpl, values);
  const ProcessResult r = run_shell(
      command, timeout_seconds, workdir.empty() ? scratch.path() : workdir);

  if (r.timed_out) {
    throw AdapterError("adapter timed out after " + format_double(timeout_seconds) +
                       " s: " + stderr_digest(r.stderr_text));
  }
  if (r.exit_code != 0) {
    throw AdapterError("adapter exited with status " + std::to_string(r.exit_code) +
                       ": " + stderr_digest(r.stderr_text));
  }
  if (!std::filesystem::is_regular_file(output)) {
    throw AdapterError("adapter did not write its output file: " +
                       stderr_digest(r.stderr_text));
  }
  const auto entries = list_entries(scratch.path());
  if (entries != std::set<std::string>{input_name, output_name}) {
    throw AdapterError("adapter must write exactly one output file; scratch "
                       "directory holds " + std::to_string(entries.size()) +
                       " entries");
  }
  return read_file_bytes(output);
}

bool has_png_signature(const std::vector<std::uint8_t>& bytes) {
  static constexpr std::uint8_t kSig[] = {0x89, 'P', 'N', 'G', 0x0d, 0x0a, 0x1a, 0x0a};
  if (bytes.size() < sizeof(kSig)) return false;
  for (std::size_t k = 0; k < sizeof(kSig); ++k) {
    if (bytes[k] != kSig[k]) return false;
  }
  return true;
}

LatentTensor adapter_encode(const AdapterSpec& spec,
                            const std::vector<std::uint8_t>& png) {
  if (!spec.configured()) throw AdapterError("no adapter configured for encode");
  spec.validate();
  const auto bytes = run_adapter_command(spec.encode_cmd, png, "input.png",
                                         "output.npy", spec.timeout_seconds,
                                         spec.workdir);
  try {
    return decode_npy(bytes);
  } catch (const FormatError& e) {
    throw AdapterError(std::string("adapter encode produced an invalid latent: ") +
                       e.what());
  }
}

std::vector<std::uint8_t> adapter_decode(const AdapterSpec& spec,
                                         const LatentTensor& latent) {
  if (!spec.configured()) throw AdapterError("no adapter configured for decode");
  spec.validate();
  auto bytes = run_adapter_command(spec.decode_cmd, encode_npy(latent),
                                   "input.npy", "output.png",
                                   spec.timeout_seconds, spec.workdir);
  if (!has_png_signature(bytes)) {
    throw AdapterError("adapter decode output is not a PNG file");
  }
  return bytes;
}

}  // namespace vaelfa
