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
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "sercaps/capsnet.hpp"
#include "sercaps/checkpoint.hpp"
#include "sercaps/config.hpp"
#include "sercaps/dclstm.hpp"
#include "sercaps/eval.hpp"
#include "sercaps/manifest.hpp"

namespace sercaps {

/// One featurized utterance: the stacked MFCC map plus the pitch/energy
/// series feeding the dual-channel LSTM.
struct Sample {
  FeatureMatrix stacked;
  FeatureMatrix pitch;
  FeatureMatrix energy;
  int label = -1;
  std::string speaker;
};

struct FeaturizedSet {
  std::vector<Sample> samples;
  std::vector<std::string> labels;
};

/// Decodes and featurizes every manifest record, in manifest order. Relative
/// paths resolve against base_dir.
FeaturizedSet featurize_manifest(const Manifest& manifest,
                                 const FeatureConfig& features,
                                 const std::filesystem::path& base_dir);

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<double> epoch_losses;      // capsule-network training curve
  std::vector<double> epoch_accuracies;  // training accuracy per epoch
  double dclstm_train_accuracy = 0.0;
  double wall_seconds = 0.0;
};

/// The full pipeline: featurize, fit outlier stats, train the dual-channel
/// LSTM, calibrate the variance profile, freeze the compression mask at the
/// warm-up epoch, train the capsule network (or the cnn-ablation head), and
/// assemble the checkpoint. Deterministic given (seed, config, corpus).
TrainResult train(const TrainConfig& config, const Manifest& train_manifest,
                  const std::filesystem::path& base_dir,
                  std::ostream* log = nullptr);

/// A checkpoint rehydrated into a runnable model.
struct TrainedModel {
  TrainConfig config;
  std::vector<std::string> labels;
  ColumnStats feature_stats;         // stacked-feature clip/standardize stats
  ColumnStats pitch_stats;           // 1-column stats for the LSTM inputs
  ColumnStats energy_stats;
  CompressionMask mask;
  std::unique_ptr<CapsNet> net;
  std::unique_ptr<DcLstm> lstm;

  static TrainedModel from_checkpoint(const Checkpoint& ckpt);
  /// (class index, per-class scores) for one clip.
  std::pair<int, std::vector<double>> predict_clip(const AudioClip& clip) const;
};

struct EvalResult {
  std::vector<std::string> labels;
  std::vector<int> y_true;
  std::vector<int> y_pred;
  std::vector<std::vector<double>> scores;  // per sample, per class
  ConfusionMatrix confusion;
  MetricsReport metrics;
};

EvalResult evaluate(const Checkpoint& ckpt, const Manifest& test_manifest,
                    const std::filesystem::path& base_dir);

/// Writes confusion.csv, metrics.csv, scores.csv, per-class roc_<label>.csv,
/// and summary.txt under report_dir.
void write_reports(const EvalResult& result, const std::filesystem::path& report_dir);

using GridAxes = std::map<std::string, std::vector<std::string>>;

struct GridCandidate {
  std::map<std::string, std::string> overrides;
  double mean_accuracy = 0.0;
  std::vector<double> fold_accuracies;
};

struct GridSearchResult {
  GridCandidate best;
  std::vector<GridCandidate> table;  // enumeration order
};

/// Exhaustive Cartesian sweep with speaker-partitioned cross-validation
/// folds. Enumeration order: sorted parameter names, values in listed order;
/// ties keep the first-enumerated candidate.
GridSearchResult grid_search(const GridAxes& grid, const TrainConfig& base,
                             const Manifest& manifest,
                             const std::filesystem::path& base_dir, int folds,
                             std::ostream* log = nullptr);

struct CompareReport {
  TTestResult ttest;
  double improvement = 0.0;  // percent
  std::string verdict;
};

/// Eq-style t-test over paired run accuracies plus the relative-improvement
/// figure for the headline accuracies.
CompareReport compare(std::span<const double> runs_a, std::span<const double> runs_b,
                      double acc_a, double acc_b);

}  // namespace sercaps
