// Copyright 2026 The vaelfa Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "vaelfa/tensor.hpp"

namespace vaelfa {

// Latent files are NPY 1.0 containers holding a C-contiguous little-endian
// float32 array of shape (C, H, W). Anything else is rejected.

std::vector<std::uint8_t> encode_npy(const LatentTensor& t);
LatentTensor decode_npy(const std::vector<std::uint8_t>& bytes,
                        std::optional<Shape> expected_shape = std::nullopt);

LatentTensor load_latent(const std::filesystem::path& path,
                         std::optional<Shape> expected_shape = std::nullopt);
void save_latent(const LatentTensor& t, const std::filesystem::path& path);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path,
                      const std::vector<std::uint8_t>& bytes);

}  // namespace vaelfa
