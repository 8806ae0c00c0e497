// Copyright 2026 The vaelfa Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <string_view>

namespace vaelfa {

// Shortest decimal form that parses back to the same double.
std::string format_double(double v);

// Strict full-string parse; throws FormatError naming `what` on failure.
double parse_double(std::string_view text, std::string_view what);
long long parse_int(std::string_view text, std::string_view what);

}  // namespace vaelfa
