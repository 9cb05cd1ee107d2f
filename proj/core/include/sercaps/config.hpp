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
#include <map>
#include <string>
#include <vector>

#include "sercaps/audio.hpp"
#include "sercaps/capsnet.hpp"
#include "sercaps/dclstm.hpp"

namespace sercaps {

/// UTF-8 `key=value` text, one pair per line, `#` starts a comment. Values
/// keep everything after the first '='.
class KeyValueConfig {
 public:
  static KeyValueConfig parse(std::string_view text);
  static KeyValueConfig load(const std::filesystem::path& path);

  bool has(const std::string& key) const;
  const std::string& get(const std::string& key) const;
  const std::vector<std::pair<std::string, std::string>>& entries() const {
    return entries_;
  }

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

/// Everything a training run needs; one seed fixes all randomness. The
/// recognized keys are exactly the fields below; unknown keys are errors.
struct TrainConfig {
  std::uint64_t seed = 42;
  int epochs = 30;
  int batch_size = 16;
  double learning_rate = 0.001;
  double compression_rate = 0.25;
  bool compression_enabled = true;
  int warmup_epochs = 5;  // the mask freezes (starts applying) at this epoch
  int dclstm_epochs = 5;
  double dclstm_learning_rate = 0.005;
  int frame_budget = 96;  // capsnet input is center-cropped/padded to this
  FeatureConfig features;
  DcLstmConfig dclstm;
  CapsNetConfig capsnet;

  static TrainConfig from_config(const KeyValueConfig& kv);
  static TrainConfig load(const std::filesystem::path& path);
  /// Applies one key=value override; throws DataError on unknown keys or
  /// malformed values.
  void apply(const std::string& key, const std::string& value);

  /// Flat numeric view of every recognized key, used for the checkpoint's
  /// config echo.
  std::vector<std::pair<std::string, double>> numeric_entries() const;

  void validate() const;
};

}  // namespace sercaps
