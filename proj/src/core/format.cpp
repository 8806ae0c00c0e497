// Copyright 2026 The vaelfa Authors
// SPDX-License-Identifier: Apache-2.0

#include "vaelfa/format.hpp"

#include <charconv>
#include <cmath>

#include "vaelfa/errors.hpp"

namespace vaelfa {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view text, std::string_view what) {
  double v = 0.0;
  const auto* end = text.data() + text.size();
  const auto res = std::from_chars(text.data(), end, v);
  if (res.ec != std::errc() || res.ptr != end || text.empty()) {
    throw FormatError("invalid number '" + std::string(text) + "' for " +
                      std::string(what));
  }
  return v;
}

long long parse_int(std::string_view text, std::string_view what) {
  long long v = 0;
  const auto* end = text.data() + text.size();
  const auto res = std::from_chars(text.data(), end, v);
  if (res.ec != std::errc() || res.ptr != end || text.empty()) {
    throw FormatError("invalid integer '" + std::string(text) + "' for " +
                      std::string(what));
  }
  return v;
}

}  // namespace vaelfa
