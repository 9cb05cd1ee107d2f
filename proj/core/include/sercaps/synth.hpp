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
#include <string>
#include <vector>

#include "sercaps/audio.hpp"
#include "sercaps/config.hpp"
#include "sercaps/manifest.hpp"

namespace sercaps {

/// One synthetic emotion class: a pitch band plus an amplitude envelope
/// (0 = flat, 1 = slow AM modulation).
struct SynthClassSpec {
  std::string name;
  double pitch_lo_hz = 0.0;
  double pitch_hi_hz = 0.0;
  int envelope = 0;
};

/// Deterministic, per-class acoustically separable corpus: harmonic tones in
/// disjoint pitch bands with per-speaker pitch offsets and light noise. Every
/// clip is generated from a counter-based stream keyed by
/// (seed, class, speaker, utterance, rep), so output bytes are reproducible
/// and independent of generation order.
struct SynthSpec {
  int num_speakers = 10;
  int num_utterances = 4;
  int num_reps = 3;
  double clip_seconds = 0.7;
  int sample_rate = 22050;
  double noise_level = 0.01;
  double speaker_offset_hz = 8.0;
  std::vector<SynthClassSpec> classes;

  static SynthSpec defaults();  // six disjoint bands, alternating envelopes
  static SynthSpec from_config(const KeyValueConfig& kv);

  /// Hard errors throw; soft issues (overlapping class bands) come back as
  /// warning strings.
  std::vector<std::string> validate() const;
};

/// Mono PCM16 clip for one (class, speaker, utterance, rep) cell.
AudioClip synth_clip(const SynthSpec& spec, std::uint64_t seed, int klass,
                     int speaker, int utterance, int rep);

/// Writes WAV files plus manifest.csv under out_dir; returns the manifest.
Manifest synth_corpus(const SynthSpec& spec, std::uint64_t seed,
                      const std::filesystem::path& out_dir);

}  // namespace sercaps
