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

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "sercaps/common.hpp"

namespace sercaps {

struct ManifestRecord {
  std::string path;
  std::string speaker;
  std::string emotion;
  std::string utterance;
  int rep = 0;
  int label = -1;  // index into Manifest::labels
};

struct Manifest {
  std::vector<ManifestRecord> records;
  std::vector<std::string> labels;  // sorted emotion label set

  int label_index(const std::string& emotion) const;
};

/// Parses CSV text with the exact header `path,speaker,emotion,utterance,rep`.
/// Errors (missing column, duplicate path, malformed rep, unknown label when
/// `expected_labels` is given) name the offending line. The label set is
/// inferred and sorted unless `expected_labels` pins it.
Manifest parse_manifest(std::string_view text,
                        std::span<const std::string> expected_labels = {});

Manifest load_manifest(const std::filesystem::path& path,
                       std::span<const std::string> expected_labels = {});

void save_manifest(const Manifest& manifest, const std::filesystem::path& path);

/// Speaker-independent (and optionally text-independent) split plan. Speaker
/// sets must be disjoint. An empty utterance subset means "no utterance
/// restriction"; when both subsets are non-empty they must be disjoint.
struct SplitPlan {
  std::vector<std::string> train_speakers;
  std::vector<std::string> test_speakers;
  std::vector<std::string> train_utterances;
  std::vector<std::string> test_utterances;
};

struct Split {
  Manifest train;
  Manifest test;
};

Split split(const Manifest& manifest, const SplitPlan& plan);

}  // namespace sercaps
