// Copyright 2026 The sercaps Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "sercaps/common.hpp"

namespace sercaps {

/// Named-array container, bit-exact:
///   magic "DCCC" | u32 version=1 | u32 section count |
///   per section: u16 name length, UTF-8 name, u8 rank, u32 dims[rank],
///                prod(dims) little-endian IEEE-754 f64 values |
///   trailing u64 FNV-1a checksum over all preceding bytes.
struct CheckpointSection {
  std::string name;
  std::vector<std::uint32_t> dims;
  std::vector<double> values;
};

struct Checkpoint {
  std::uint32_t version = 1;
  std::vector<CheckpointSection> sections;

  void add(std::string name, std::vector<std::uint32_t> dims,
           std::vector<double> values);
  void add_scalar(std::string name, double value);
  /// Text payload stored one byte per value.
  void add_string(std::string name, std::string_view text);

  bool has(const std::string& name) const;
  const CheckpointSection& require(const std::string& name) const;
  double scalar(const std::string& name) const;
  std::string text(const std::string& name) const;
};

std::vector<std::uint8_t> serialize_checkpoint(const Checkpoint& ckpt);

/// Verifies the trailing checksum before parsing; every structural fault
/// (bad magic, newer version, truncated or oversized section) is a DataError
/// naming the offending section, never a crash.
Checkpoint deserialize_checkpoint(std::span<const std::uint8_t> bytes);

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace sercaps
