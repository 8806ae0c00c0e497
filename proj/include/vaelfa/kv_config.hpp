// Copyright 2026 The vaelfa Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace vaelfa {

// Flat "key = value" text config. '#' starts a comment line; blank lines are
// ignored; duplicate keys are an error. Every lookup marks the key as used so
// callers can reject unknown keys once parsing is done.
class KeyValueConfig {
 public:
  static KeyValueConfig parse(std::string_view text);
  static KeyValueConfig load(const std::filesystem::path& path);

  bool has(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  std::string require_string(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  long long get_int(const std::string& key, long long fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  // Throws FormatError naming every key never looked up.
  void check_all_used() const;

  // Entries in file order.
  const std::vector<std::pair<std::string, std::string>>& entries() const noexcept {
    return ordered_;
  }

 private:
  std::vector<std::pair<std::string, std::string>> ordered_;
  std::map<std::string, std::string> values_;
  mutable std::set<std::string> used_;
};

std::string serialize_key_values(
    const std::vector<std::pair<std::string, std::string>>& entries);

}  // namespace vaelfa
