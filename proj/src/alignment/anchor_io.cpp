// Copyright 2026 The vaelfa Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <sstream>
#include <string>

#include "vaelfa/alignment.hpp"
#include "vaelfa/errors.hpp"
#include "vaelfa/format.hpp"

namespace vaelfa {
namespace {

constexpr std::string_view kVersionLine = "vaelfa-anchor 1";

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (pos < line.size()) {
    while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t')) ++pos;
    const std::size_t start = pos;
    while (pos < line.size() && line[pos] != ' ' && line[pos] != '\t') ++pos;
    if (pos > start) out.push_back(line.substr(start, pos - start));
  }
  return out;
}

}  // namespace

std::string serialize_anchor(const AnchorState& state) {
  std::string out;
  out += kVersionLine;
  out += '\n';
  out += "mode ";
  out += to_string(state.mode);
  out += '\n';
  out += "turn " + std::to_string(state.turn) + '\n';
  out += "channels " + std::to_string(state.channels()) + '\n';
  for (std::size_t c = 0; c < state.channels(); ++c) {
    out += std::to_string(c) + ' ' + format_double(state.m_mu[c]) + ' ' +
           format_double(state.m_log_sigma[c]) + '\n';
  }
  return out;
}

AnchorState deserialize_anchor(std::string_view text,
                               std::optional<std::size_t> expected_channels) {
  std::vector<std::string_view> lines;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) {
      throw FormatError("anchor record truncated (missing final newline)");
    }
    lines.push_back(text.substr(pos, nl - pos));
    pos = nl + 1;
  }
  if (lines.size() < 4) throw FormatError("anchor record truncated");
  if (lines[0] != kVersionLine) {
    throw FormatError("unsupported anchor record version line '" +
                      std::string(lines[0]) + "'");
  }

  AnchorState state;
  auto mode = split_ws(lines[1]);
  if (mode.size() != 2 || mode[0] != "mode") {
    throw FormatError("anchor record: malformed mode line");
  }
  state.mode = parse_anchor_mode(mode[1]);

  auto turn = split_ws(lines[2]);
  if (turn.size() != 2 || turn[0] != "turn") {
    throw FormatError("anchor record: malformed turn line");
  }
  const long long t = parse_int(turn[1], "anchor turn");
  if (t < 0) throw FormatError("anchor record: negative turn");
  state.turn = static_cast<std::uint64_t>(t);

  auto count = split_ws(lines[3]);
  if (count.size() != 2 || count[0] != "channels") {
    throw FormatError("anchor record: malformed channels line");
  }
  const long long declared = parse_int(count[1], "anchor channel count");
  if (declared < 1) throw FormatError("anchor record has no channels");
  const std::size_t channels = static_cast<std::size_t>(declared);
  if (lines.size() - 4 != channels) {
    throw FormatError("anchor record declares " + std::to_string(channels) +
                      " channels but has " + std::to_string(lines.size() - 4) +
                      " channel lines");
  }
  for (std::size_t c = 0; c < channels; ++c) {
    auto fields = split_ws(lines[4 + c]);
    if (fields.size() != 3) {
      throw FormatError("anchor record: channel line " + std::to_string(c) +
                        " needs 3 fields");
    }
    if (parse_int(fields[0], "anchor channel index") !=
        static_cast<long long>(c)) {
      throw FormatError("anchor record: channel lines out of order at " +
                        std::to_string(c));
    }
    state.m_mu.push_back(parse_double(fields[1], "m_mu"));
    state.m_log_sigma.push_back(parse_double(fields[2], "m_log_sigma"));
    if (!std::isfinite(state.m_mu.back()) || !std::isfinite(state.m_log_sigma.back())) {
      throw FormatError("anchor record: non-finite value on channel " +
                        std::to_string(c));
    }
  }
  if (expected_channels && *expected_channels != channels) {
    throw FormatError("anchor record has " + std::to_string(channels) +
                      " channels, expected " +
                      std::to_string(*expected_channels));
  }
  return state;
}

}  // namespace vaelfa
