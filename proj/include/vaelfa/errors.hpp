// Copyright 2026 The vaelfa Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace vaelfa {

// Error categories double as CLI exit codes.
enum class ErrorKind {
  kFormat = 2,    // malformed file, config schema violation
  kNumeric = 3,   // numeric-domain failure (zero sigma, non-finite result)
  kIo = 4,        // filesystem failures
  kChecksum = 5,  // session manifest verification failure
  kAdapter = 6,   // external adapter failure or timeout
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }
  int exit_code() const noexcept { return static_cast<int>(kind_); }
  const char* category() const noexcept;

 private:
  ErrorKind kind_;
};

class FormatError : public Error {
 public:
  explicit FormatError(const std::string& m) : Error(ErrorKind::kFormat, m) {}
};

class NumericError : public Error {
 public:
  explicit NumericError(const std::string& m) : Error(ErrorKind::kNumeric, m) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& m) : Error(ErrorKind::kIo, m) {}
};

class ChecksumError : public Error {
 public:
  explicit ChecksumError(const std::string& m) : Error(ErrorKind::kChecksum, m) {}
};

class AdapterError : public Error {
 public:
  explicit AdapterError(const std::string& m) : Error(ErrorKind::kAdapter, m) {}
};

}  // namespace vaelfa
