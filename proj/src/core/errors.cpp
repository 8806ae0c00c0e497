// Copyright 2026 The vaelfa Authors
// SPDX-License-Identifier: Apache-2.0

#include "vaelfa/errors.hpp"

namespace vaelfa {

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(message), kind_(kind) {}

const char* Error::category() const noexcept {
  switch (kind_) {
    case ErrorKind::kFormat:
      return "format";
    case ErrorKind::kNumeric:
      return "numeric";
    case ErrorKind::kIo:
      return "io";
    case ErrorKind::kChecksum:
      return "checksum";
    case ErrorKind::kAdapter:
      return "adapter";
  }
  return "unknown";
}

}  // namespace vaelfa
