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
#include <span>
#include <string>
#include <vector>

#include "sercaps/common.hpp"

namespace sercaps {

struct AudioClip {
  std::vector<double> samples;  // in [-1, 1]
  int sample_rate = 22050;
};

/// One coherent MFCC pipeline: Hann window, per-frame DC-offset removal,
/// power spectrum, HTK-style triangular mel filterbank, natural log with
/// floor, orthonormal DCT-II. hop = n_fft/2 gives the 50% frame overlap the
/// defaults are built around.
struct FeatureConfig {
  int n_fft = 512;
  int hop = 256;
  int sample_rate = 22050;
  int n_mfcc = 40;
  int n_mels = 64;
  int delta_window = 2;       // regression half-window N
  int dct_type = 2;           // only DCT-II is supported
  bool dct_orthonormal = true;
  double log_floor = 1e-10;   // mel-energy floor before the log
  double pitch_min_hz = 50.0;
  double pitch_max_hz = 500.0;
  double voicing_threshold = 0.3;  // autocorrelation confidence for voiced

  void validate() const;
};

enum class FeatureKind { kMfcc, kDelta, kDelta2, kStacked, kPitch, kEnergy };

std::string feature_kind_name(FeatureKind kind);

/// frames x dims matrix, row-major.
struct FeatureMatrix {
  int rows = 0;
  int cols = 0;
  FeatureKind kind = FeatureKind::kMfcc;
  std::vector<double> values;

  double& at(int r, int c) { return values[static_cast<std::size_t>(r) * cols + c]; }
  double at(int r, int c) const { return values[static_cast<std::size_t>(r) * cols + c]; }

  static FeatureMatrix zeros(int rows, int cols, FeatureKind kind);
};

/// Per-column mean and (population) standard deviation, fitted on the
/// training split only.
struct ColumnStats {
  std::vector<double> mean;
  std::vector<double> sd;
};

/// Number of analysis frames for a clip of `samples` samples:
/// 1 + floor((samples - n_fft) / hop), defined for samples >= n_fft.
int frame_count(std::size_t samples, const FeatureConfig& cfg);

/// Decodes a RIFF/WAVE container holding 16-bit PCM. Stereo is averaged to
/// mono; samples are scaled by 1/32768. Malformed containers (non-PCM codec,
/// truncated chunks, empty data) raise DataError.
AudioClip decode_wav(std::span<const std::uint8_t> bytes);

/// 16-bit PCM mono writer, the inverse interface of decode_wav.
std::vector<std::uint8_t> encode_wav(const AudioClip& clip);

/// MFCC coefficients only, frames x n_mfcc.
FeatureMatrix mfcc(const AudioClip& clip, const FeatureConfig& cfg);

/// The stacked feature: MFCC columns, then their delta, then delta-delta;
/// frames x (3 * n_mfcc).
FeatureMatrix mfcc_stack(const AudioClip& clip, const FeatureConfig& cfg);

/// Regression-slope delta with half-window N and replicated-edge padding:
/// d_t = sum_{n=1..N} n * (f_{t+n} - f_{t-n}) / (2 * sum n^2).
FeatureMatrix delta(const FeatureMatrix& f, int window);

/// Fundamental frequency per frame, in Hz, from the normalized
/// autocorrelation peak within [pitch_min_hz, pitch_max_hz], with parabolic
/// peak interpolation. Frames with peak confidence below voicing_threshold
/// emit 0 (unvoiced).
FeatureMatrix pitch_series(const AudioClip& clip, const FeatureConfig& cfg);

/// log(sum x^2 + 1e-10) per frame.
FeatureMatrix energy_series(const AudioClip& clip, const FeatureConfig& cfg);

ColumnStats fit_column_stats(std::span<const FeatureMatrix> mats);

/// Clips each value to mean +/- 3 sd of its column. Zero-sd columns pass
/// through unchanged. Idempotent.
FeatureMatrix remove_outliers(const FeatureMatrix& f, const ColumnStats& stats);

/// (x - mean) / sd per column; zero-sd columns map to 0.
FeatureMatrix standardize_columns(const FeatureMatrix& f, const ColumnStats& stats);

}  // namespace sercaps
