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

#include "sercaps/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace sercaps {

SynthSpec SynthSpec::defaults() {
  SynthSpec spec;
  spec.classes = {
      {"angry", 115.0, 140.0, 0},   {"disgust", 160.0, 185.0, 1},
      {"fear", 205.0, 230.0, 0},    {"happy", 250.0, 275.0, 1},
      {"neutral", 295.0, 320.0, 0}, {"sad", 340.0, 365.0, 1},
  };
  return spec;
}

SynthSpec SynthSpec::from_config(const KeyValueConfig& kv) {
  SynthSpec spec = defaults();
  spec.classes.clear();
  for (const auto& [key, value] : kv.entries()) {
    auto number = [&](const std::string& v) {
      try {
        return std::stod(v);
      } catch (const std::exception&) {
        throw DataError("synth spec key '" + key + "': bad number '" + v + "'");
      }
    };
    if (key == "speakers") spec.num_speakers = static_cast<int>(number(value));
    else if (key == "utterances") spec.num_utterances = static_cast<int>(number(value));
    else if (key == "reps") spec.num_reps = static_cast<int>(number(value));
    else if (key == "clip_seconds") spec.clip_seconds = number(value);
    else if (key == "sample_rate") spec.sample_rate = static_cast<int>(number(value));
    else if (key == "noise_level") spec.noise_level = number(value);
    else if (key == "speaker_offset_hz") spec.speaker_offset_hz = number(value);
    else if (key == "class") {
      // class = name,lo_hz,hi_hz,envelope
      SynthClassSpec cls;
      std::istringstream is(value);
      std::string field;
      std::vector<std::string> fields;
      while (std::getline(is, field, ',')) fields.push_back(field);
      if (fields.size() != 4) {
        throw DataError("synth spec: class entries need name,lo,hi,envelope; got '" +
                        value + "'");
      }
      cls.name = fields[0];
      cls.pitch_lo_hz = number(fields[1]);
      cls.pitch_hi_hz = number(fields[2]);
      cls.envelope = static_cast<int>(number(fields[3]));
      spec.classes.push_back(std::move(cls));
    } else {
      throw DataError("unknown synth spec key '" + key + "'");
    }
  }
  if (spec.classes.empty()) spec.classes = defaults().classes;
  return spec;
}

std::vector<std::string> SynthSpec::validate() const {
  if (num_speakers < 1 || num_utterances < 1 || num_reps < 1) {
    throw std::invalid_argument("synth spec: counts must be >= 1");
  }
  if (sample_rate <= 0 || clip_seconds <= 0.0) {
    throw std::invalid_argument("synth spec: sample rate and duration must be positive");
  }
  if (classes.empty()) throw std::invalid_argument("synth spec: no classes");
  for (const SynthClassSpec& c : classes) {
    if (!(c.pitch_lo_hz > 0.0 && c.pitch_lo_hz < c.pitch_hi_hz)) {
      throw std::invalid_argument("synth spec: class '" + c.name + "' has an empty band");
    }
  }
  std::vector<std::string> warnings;
  for (std::size_t a = 0; a < classes.size(); ++a) {
    for (std::size_t b = a + 1; b < classes.size(); ++b) {
      bool disjoint = classes[a].pitch_hi_hz < classes[b].pitch_lo_hz ||
                      classes[b].pitch_hi_hz < classes[a].pitch_lo_hz;
      if (!disjoint) {
        warnings.push_back("pitch bands of '" + classes[a].name + "' and '" +
                           classes[b].name + "' overlap");
      }
    }
  }
  return warnings;
}

AudioClip synth_clip(const SynthSpec& spec, std::uint64_t seed, int klass,
                     int speaker, int utterance, int rep) {
  const SynthClassSpec& cls = spec.classes.at(static_cast<std::size_t>(klass));

  // Counter-based streams: clip content depends only on its cell key, not on
  // generation order, so parallel or partial generation stays reproducible.
  std::uint64_t cell[5] = {seed, static_cast<std::uint64_t>(klass),
                           static_cast<std::uint64_t>(speaker),
                           static_cast<std::uint64_t>(utterance),
                           static_cast<std::uint64_t>(rep)};
  Rng rng(fnv1a64(cell, sizeof(cell)));
  std::uint64_t spk_key[2] = {seed, static_cast<std::uint64_t>(speaker)};
  Rng spk_rng(fnv1a64(spk_key, sizeof(spk_key), 0x9e3779b97f4a7c15ull));

  double band = cls.pitch_hi_hz - cls.pitch_lo_hz;
  double margin = std::min(0.25 * band, spec.speaker_offset_hz);
  double center = 0.5 * (cls.pitch_lo_hz + cls.pitch_hi_hz);
  double speaker_offset = spk_rng.uniform(-spec.speaker_offset_hz, spec.speaker_offset_hz);
  double jitter = rng.uniform(-0.1 * band, 0.1 * band);
  double f0 = std::clamp(center + speaker_offset + jitter,
                         cls.pitch_lo_hz + margin * 0.2,
                         cls.pitch_hi_hz - margin * 0.2);

  // Utterance identity shows up as a duration offset and a harmonic tilt.
  double seconds = spec.clip_seconds + 0.04 * utterance;
  double h2 = 0.35 - 0.03 * (utterance % 3);
  double h3 = 0.15;

  AudioClip clip;
  clip.sample_rate = spec.sample_rate;
  std::size_t n = static_cast<std::size_t>(seconds * spec.sample_rate);
  clip.samples.resize(n);
  double phase = rng.uniform(0.0, 2.0 * M_PI);
  const double am_hz = 3.0;
  for (std::size_t i = 0; i < n; ++i) {
    double t = static_cast<double>(i) / spec.sample_rate;
    double w = 2.0 * M_PI * f0 * t + phase;
    double tone = std::sin(w) + h2 * std::sin(2.0 * w) + h3 * std::sin(3.0 * w);
    double envelope = cls.envelope == 0
                          ? 1.0
                          : 0.6 + 0.4 * std::sin(2.0 * M_PI * am_hz * t);
    double noise = spec.noise_level * (2.0 * rng.uniform() - 1.0);
    clip.samples[i] = 0.35 * envelope * tone + noise;
  }
  return clip;
}

Manifest synth_corpus(const SynthSpec& spec, std::uint64_t seed,
                      const std::filesystem::path& out_dir) {
  spec.validate();
  std::filesystem::create_directories(out_dir / "clips");
  Manifest manifest;
  for (int c = 0; c < static_cast<int>(spec.classes.size()); ++c) {
    for (int s = 0; s < spec.num_speakers; ++s) {
      for (int u = 0; u < spec.num_utterances; ++u) {
        for (int r = 0; r < spec.num_reps; ++r) {
          AudioClip clip = synth_clip(spec, seed, c, s, u, r);
          ManifestRecord rec;
          rec.path = "clips/" + spec.classes[c].name + "_s" + std::to_string(s) +
                     "_u" + std::to_string(u) + "_r" + std::to_string(r) + ".wav";
          rec.speaker = "spk" + std::to_string(s);
          rec.emotion = spec.classes[c].name;
          rec.utterance = "utt" + std::to_string(u);
          rec.rep = r;
          std::vector<std::uint8_t> bytes = encode_wav(clip);
          std::ofstream out(out_dir / rec.path, std::ios::binary);
          if (!out) throw DataError("cannot write clip '" + rec.path + "'");
          out.write(reinterpret_cast<const char*>(bytes.data()),
                    static_cast<std::streamsize>(bytes.size()));
          manifest.records.push_back(std::move(rec));
        }
      }
    }
  }
  std::vector<std::string> names;
  for (const auto& c : spec.classes) names.push_back(c.name);
  std::sort(names.begin(), names.end());
  manifest.labels = names;
  for (ManifestRecord& rec : manifest.records) {
    rec.label = manifest.label_index(rec.emotion);
  }
  save_manifest(manifest, out_dir / "manifest.csv");
  return manifest;
}

}  // namespace sercaps
