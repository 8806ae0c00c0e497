// Copyright 2026 The vaelfa Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>

namespace vaelfa {

struct ProcessResult {
  int exit_code = -1;  // -1 when killed by a signal or timeout
  bool timed_out = false;
  std::string stderr_text;
};

// Runs `command` through /bin/sh in `workdir`, killing the whole process
// group after `timeout_seconds`. stdout is discarded; stderr is captured.
ProcessResult run_shell(const std::string& command, double timeout_seconds,
                        const std::filesystem::path& workdir);

// Last few lines of a stderr capture, for error messages.
std::string stderr_digest(const std::string& text, std::size_t max_chars = 800);

// Single-quotes `s` for POSIX sh.
std::string shell_quote(const std::string& s);

// Scratch directory removed on destruction. Created under $VAELFA_TMPDIR if
// set, else the system temp directory.
class TempDir {
 public:
  explicit TempDir(const std::string& prefix = "vaelfa");
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const noexcept { return path_; }

 private:
  std::filesystem::path path_;
};

std::filesystem::path temp_root();

}  // namespace vaelfa
