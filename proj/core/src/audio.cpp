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

#include "sercaps/audio.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstring>
#include <stdexcept>

namespace sercaps {

void FeatureConfig::validate() const {
  if (n_fft <= 0 || hop <= 0 || hop > n_fft) {
    throw std::invalid_argument("feature config requires 0 < hop <= n_fft");
  }
  if (sample_rate <= 0) throw std::invalid_argument("sample_rate must be positive");
  if (n_mfcc <= 0 || n_mels <= 0 || n_mfcc > n_mels) {
    throw std::invalid_argument("feature config requires 0 < n_mfcc <= n_mels");
  }
  if (delta_window < 1) throw std::invalid_argument("delta_window must be >= 1");
  if (dct_type != 2 || !dct_orthonormal) {
    throw std::invalid_argument("only the orthonormal DCT-II basis is supported");
  }
}

std::string feature_kind_name(FeatureKind kind) {
  switch (kind) {
    case FeatureKind::kMfcc: return "mfcc";
    case FeatureKind::kDelta: return "delta";
    case FeatureKind::kDelta2: return "delta2";
    case FeatureKind::kStacked: return "stacked";
    case FeatureKind::kPitch: return "pitch";
    case FeatureKind::kEnergy: return "energy";
  }
  return "unknown";
}

FeatureMatrix FeatureMatrix::zeros(int rows, int cols, FeatureKind kind) {
  FeatureMatrix m;
  m.rows = rows;
  m.cols = cols;
  m.kind = kind;
  m.values.assign(static_cast<std::size_t>(rows) * cols, 0.0);
  return m;
}

int frame_count(std::size_t samples, const FeatureConfig& cfg) {
  if (samples < static_cast<std::size_t>(cfg.n_fft)) {
    throw DataError("clip shorter than one analysis frame (" +
                    std::to_string(samples) + " < " + std::to_string(cfg.n_fft) +
                    " samples)");
  }
  return 1 + static_cast<int>((samples - cfg.n_fft) / cfg.hop);
}

namespace {

std::uint32_t read_u32(std::span<const std::uint8_t> b, std::size_t off) {
  return static_cast<std::uint32_t>(b[off]) |
         (static_cast<std::uint32_t>(b[off + 1]) << 8) |
         (static_cast<std::uint32_t>(b[off + 2]) << 16) |
         (static_cast<std::uint32_t>(b[off + 3]) << 24);
}

std::uint16_t read_u16(std::span<const std::uint8_t> b, std::size_t off) {
  return static_cast<std::uint16_t>(b[off] | (b[off + 1] << 8));
}

}  // namespace

AudioClip decode_wav(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw DataError("not a RIFF/WAVE container");
  }
  bool have_fmt = false;
  std::uint16_t channels = 0, bits = 0;
  std::uint32_t rate = 0;
  std::size_t data_off = 0, data_len = 0;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    char id[5] = {0};
    std::memcpy(id, bytes.data() + pos, 4);
    std::uint32_t len = read_u32(bytes, pos + 4);
    std::size_t body = pos + 8;
    if (body + len > bytes.size()) {
      throw DataError(std::string("truncated WAV chunk '") + id + "'");
    }
    if (std::memcmp(id, "fmt ", 4) == 0) {
      if (len < 16) throw DataError("fmt chunk too short");
      std::uint16_t format = read_u16(bytes, body);
      if (format != 1) throw DataError("unsupported WAV codec (PCM required)");
      channels = read_u16(bytes, body + 2);
      rate = read_u32(bytes, body + 4);
      bits = read_u16(bytes, body + 14);
      have_fmt = true;
    } else if (std::memcmp(id, "data", 4) == 0) {
      data_off = body;
      data_len = len;
    }
    pos = body + len + (len & 1);  // chunks are word-aligned
  }
  if (!have_fmt) throw DataError("missing fmt chunk");
  if (bits != 16) throw DataError("unsupported sample width (16-bit PCM required)");
  if (channels != 1 && channels != 2) {
    throw DataError("unsupported channel count " + std::to_string(channels));
  }
  if (rate == 0) throw DataError("invalid sample rate 0");
  if (data_len == 0) throw DataError("empty data chunk");
  std::size_t bytes_per_frame = 2u * channels;
  std::size_t n = data_len / bytes_per_frame;
  if (n == 0) throw DataError("empty data chunk");

  AudioClip clip;
  clip.sample_rate = static_cast<int>(rate);
  clip.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::uint16_t c = 0; c < channels; ++c) {
      std::size_t off = data_off + (i * channels + c) * 2;
      auto raw = static_cast<std::int16_t>(bytes[off] | (bytes[off + 1] << 8));
      acc += static_cast<double>(raw);
    }
    clip.samples[i] = acc / (32768.0 * channels);
  }
  return clip;
}

std::vector<std::uint8_t> encode_wav(const AudioClip& clip) {
  if (clip.samples.empty()) throw std::invalid_argument("cannot encode empty clip");
  std::size_t n = clip.samples.size();
  std::vector<std::uint8_t> out;
  out.reserve(44 + 2 * n);
  auto push_u32 = [&](std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  };
  auto push_u16 = [&](std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v & 0xff));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
  };
  auto push_tag = [&](const char* t) { out.insert(out.end(), t, t + 4); };
  push_tag("RIFF");
  push_u32(static_cast<std::uint32_t>(36 + 2 * n));
  push_tag("WAVE");
  push_tag("fmt ");
  push_u32(16);
  push_u16(1);  // PCM
  push_u16(1);  // mono
  push_u32(static_cast<std::uint32_t>(clip.sample_rate));
  push_u32(static_cast<std::uint32_t>(clip.sample_rate * 2));
  push_u16(2);
  push_u16(16);
  push_tag("data");
  push_u32(static_cast<std::uint32_t>(2 * n));
  for (double s : clip.samples) {
    double scaled = std::clamp(s, -1.0, 1.0) * 32768.0;
    scaled = std::clamp(scaled, -32768.0, 32767.0);
    auto q = static_cast<std::int16_t>(std::lrint(scaled));
    push_u16(static_cast<std::uint16_t>(q));
  }
  return out;
}

namespace {

// In-place radix-2 FFT; n must be a power of two.
void fft_radix2(std::vector<std::complex<double>>& a) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    double ang = -2.0 * M_PI / static_cast<double>(len);
    std::complex<double> wl(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        std::complex<double> u = a[i + k];
        std::complex<double> v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wl;
      }
    }
  }
}

bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }

// One-sided power spectrum |X_k|^2 for k = 0..n/2 of a real frame.
void power_spectrum(const std::vector<double>& frame, std::vector<double>& power) {
  const int n = static_cast<int>(frame.size());
  power.assign(n / 2 + 1, 0.0);
  if (is_pow2(n)) {
    std::vector<std::complex<double>> buf(n);
    for (int i = 0; i < n; ++i) buf[i] = frame[i];
    fft_radix2(buf);
    for (int k = 0; k <= n / 2; ++k) power[k] = std::norm(buf[k]);
  } else {
    for (int k = 0; k <= n / 2; ++k) {
      double re = 0.0, im = 0.0;
      for (int i = 0; i < n; ++i) {
        double ang = -2.0 * M_PI * k * i / n;
        re += frame[i] * std::cos(ang);
        im += frame[i] * std::sin(ang);
      }
      power[k] = re * re + im * im;
    }
  }
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

// HTK-style triangular filters (peak 1, no area normalization) evaluated at
// the FFT bin centers; returns n_mels x (n_fft/2 + 1) weights.
std::vector<double> mel_filterbank(const FeatureConfig& cfg) {
  const int bins = cfg.n_fft / 2 + 1;
  std::vector<double> edges(cfg.n_mels + 2);
  double mel_hi = hz_to_mel(cfg.sample_rate / 2.0);
  for (int m = 0; m < cfg.n_mels + 2; ++m) {
    edges[m] = mel_to_hz(mel_hi * m / (cfg.n_mels + 1));
  }
  std::vector<double> weights(static_cast<std::size_t>(cfg.n_mels) * bins, 0.0);
  for (int m = 0; m < cfg.n_mels; ++m) {
    double lo = edges[m], mid = edges[m + 1], hi = edges[m + 2];
    for (int k = 0; k < bins; ++k) {
      double f = static_cast<double>(k) * cfg.sample_rate / cfg.n_fft;
      double w = 0.0;
      if (f > lo && f <= mid) {
        w = (f - lo) / (mid - lo);
      } else if (f > mid && f < hi) {
        w = (hi - f) / (hi - mid);
      }
      weights[static_cast<std::size_t>(m) * bins + k] = w;
    }
  }
  return weights;
}

}  // namespace

FeatureMatrix mfcc(const AudioClip& clip, const FeatureConfig& cfg) {
  cfg.validate();
  const int frames = frame_count(clip.samples.size(), cfg);
  const int bins = cfg.n_fft / 2 + 1;
  std::vector<double> window(cfg.n_fft);
  for (int i = 0; i < cfg.n_fft; ++i) {
    window[i] = 0.5 - 0.5 * std::cos(2.0 * M_PI * i / cfg.n_fft);
  }
  std::vector<double> fb = mel_filterbank(cfg);

  // Orthonormal DCT-II basis, n_mfcc x n_mels.
  std::vector<double> dct(static_cast<std::size_t>(cfg.n_mfcc) * cfg.n_mels);
  for (int k = 0; k < cfg.n_mfcc; ++k) {
    double scale = std::sqrt((k == 0 ? 1.0 : 2.0) / cfg.n_mels);
    for (int m = 0; m < cfg.n_mels; ++m) {
      dct[static_cast<std::size_t>(k) * cfg.n_mels + m] =
          scale * std::cos(M_PI * (2 * m + 1) * k / (2.0 * cfg.n_mels));
    }
  }

  FeatureMatrix out = FeatureMatrix::zeros(frames, cfg.n_mfcc, FeatureKind::kMfcc);
  std::vector<double> frame(cfg.n_fft);
  std::vector<double> power;
  std::vector<double> logmel(cfg.n_mels);
  for (int t = 0; t < frames; ++t) {
    const double* src = clip.samples.data() + static_cast<std::size_t>(t) * cfg.hop;
    double dc = 0.0;
    for (int i = 0; i < cfg.n_fft; ++i) dc += src[i];
    dc /= cfg.n_fft;
    for (int i = 0; i < cfg.n_fft; ++i) frame[i] = (src[i] - dc) * window[i];
    power_spectrum(frame, power);
    for (int m = 0; m < cfg.n_mels; ++m) {
      const double* w = &fb[static_cast<std::size_t>(m) * bins];
      double e = 0.0;
      for (int k = 0; k < bins; ++k) e += w[k] * power[k];
      logmel[m] = std::log(std::max(e, cfg.log_floor));
    }
    for (int k = 0; k < cfg.n_mfcc; ++k) {
      const double* basis = &dct[static_cast<std::size_t>(k) * cfg.n_mels];
      double c = 0.0;
      for (int m = 0; m < cfg.n_mels; ++m) c += basis[m] * logmel[m];
      out.at(t, k) = c;
    }
  }
  return out;
}

FeatureMatrix delta(const FeatureMatrix& f, int window) {
  if (window < 1) throw std::invalid_argument("delta window must be >= 1");
  if (f.rows < 1) throw std::invalid_argument("delta requires at least one frame");
  double denom = 0.0;
  for (int n = 1; n <= window; ++n) denom += static_cast<double>(n) * n;
  denom *= 2.0;
  FeatureMatrix out = FeatureMatrix::zeros(f.rows, f.cols, FeatureKind::kDelta);
  auto frame_at = [&](int t) { return std::clamp(t, 0, f.rows - 1); };
  for (int t = 0; t < f.rows; ++t) {
    for (int c = 0; c < f.cols; ++c) {
      double acc = 0.0;
      for (int n = 1; n <= window; ++n) {
        acc += n * (f.at(frame_at(t + n), c) - f.at(frame_at(t - n), c));
      }
      out.at(t, c) = acc / denom;
    }
  }
  return out;
}

FeatureMatrix mfcc_stack(const AudioClip& clip, const FeatureConfig& cfg) {
  FeatureMatrix base = mfcc(clip, cfg);
  FeatureMatrix d1 = delta(base, cfg.delta_window);
  FeatureMatrix d2 = delta(d1, cfg.delta_window);
  d2.kind = FeatureKind::kDelta2;
  FeatureMatrix out =
      FeatureMatrix::zeros(base.rows, 3 * cfg.n_mfcc, FeatureKind::kStacked);
  for (int t = 0; t < base.rows; ++t) {
    for (int c = 0; c < cfg.n_mfcc; ++c) {
      out.at(t, c) = base.at(t, c);
      out.at(t, cfg.n_mfcc + c) = d1.at(t, c);
      out.at(t, 2 * cfg.n_mfcc + c) = d2.at(t, c);
    }
  }
  return out;
}

FeatureMatrix pitch_series(const AudioClip& clip, const FeatureConfig& cfg) {
  cfg.validate();
  const int frames = frame_count(clip.samples.size(), cfg);
  const int len = static_cast<int>(clip.samples.size());
  const int lag_min =
      std::max(2, static_cast<int>(std::ceil(cfg.sample_rate / cfg.pitch_max_hz)));
  const int lag_max = std::max(
      lag_min + 2, static_cast<int>(std::floor(cfg.sample_rate / cfg.pitch_min_hz)));
  // The analysis window spans two full periods of the lowest pitch so the
  // longest lag still overlaps enough samples for a stable correlation.
  const int win = 2 * lag_max;
  constexpr int kMinOverlap = 32;

  FeatureMatrix out = FeatureMatrix::zeros(frames, 1, FeatureKind::kPitch);
  std::vector<double> x;
  std::vector<double> sq_prefix;
  std::vector<double> corr(static_cast<std::size_t>(lag_max) + 1, 0.0);
  for (int t = 0; t < frames; ++t) {
    int center = t * cfg.hop + cfg.n_fft / 2;
    int lo = std::max(0, center - win / 2);
    int hi = std::min(len, center + win / 2);
    int n = hi - lo;
    if (n < lag_min + kMinOverlap) continue;
    x.assign(clip.samples.begin() + lo, clip.samples.begin() + hi);
    double mu = 0.0;
    for (double v : x) mu += v;
    mu /= n;
    for (double& v : x) v -= mu;
    sq_prefix.assign(static_cast<std::size_t>(n) + 1, 0.0);
    for (int i = 0; i < n; ++i) sq_prefix[i + 1] = sq_prefix[i] + x[i] * x[i];

    int hi_lag = std::min(lag_max, n - kMinOverlap);
    double peak_r = 0.0;
    for (int lag = lag_min; lag <= hi_lag; ++lag) {
      double num = 0.0;
      const int m = n - lag;
      for (int i = 0; i < m; ++i) num += x[i] * x[i + lag];
      double e1 = sq_prefix[m];                   // sum over x[0..m)
      double e2 = sq_prefix[n] - sq_prefix[lag];  // sum over x[lag..n)
      double denom = std::sqrt(e1 * e2);
      double r = denom > 1e-30 ? num / denom : 0.0;
      corr[lag] = r;
      peak_r = std::max(peak_r, r);
    }
    if (peak_r < cfg.voicing_threshold) continue;
    // A periodic signal peaks at every multiple of its period; the shortest
    // local-maximum lag close to the global peak is the fundamental.
    int best_lag = -1;
    for (int lag = lag_min; lag <= hi_lag; ++lag) {
      bool local_max = (lag == lag_min || corr[lag] >= corr[lag - 1]) &&
                       (lag == hi_lag || corr[lag] >= corr[lag + 1]);
      if (local_max && corr[lag] >= 0.9 * peak_r &&
          corr[lag] >= cfg.voicing_threshold) {
        best_lag = lag;
        break;
      }
    }
    if (best_lag < 0) continue;
    double refined = best_lag;
    if (best_lag > lag_min && best_lag < hi_lag) {
      double rm = corr[best_lag - 1], r0 = corr[best_lag], rp = corr[best_lag + 1];
      double curve = rm - 2.0 * r0 + rp;
      if (std::fabs(curve) > 1e-30) {
        double shift = 0.5 * (rm - rp) / curve;
        refined += std::clamp(shift, -0.5, 0.5);
      }
    }
    out.at(t, 0) = cfg.sample_rate / refined;
  }
  return out;
}

FeatureMatrix energy_series(const AudioClip& clip, const FeatureConfig& cfg) {
  cfg.validate();
  constexpr double kEps = 1e-10;
  const int frames = frame_count(clip.samples.size(), cfg);
  FeatureMatrix out = FeatureMatrix::zeros(frames, 1, FeatureKind::kEnergy);
  for (int t = 0; t < frames; ++t) {
    const double* src = clip.samples.data() + static_cast<std::size_t>(t) * cfg.hop;
    double e = 0.0;
    for (int i = 0; i < cfg.n_fft; ++i) e += src[i] * src[i];
    out.at(t, 0) = std::log(e + kEps);
  }
  return out;
}

ColumnStats fit_column_stats(std::span<const FeatureMatrix> mats) {
  if (mats.empty()) throw std::invalid_argument("no matrices to fit stats on");
  const int cols = mats[0].cols;
  ColumnStats stats;
  stats.mean.assign(cols, 0.0);
  stats.sd.assign(cols, 0.0);
  std::size_t count = 0;
  for (const FeatureMatrix& m : mats) {
    if (m.cols != cols) throw std::invalid_argument("column count mismatch across matrices");
    for (int t = 0; t < m.rows; ++t)
      for (int c = 0; c < cols; ++c) stats.mean[c] += m.at(t, c);
    count += static_cast<std::size_t>(m.rows);
  }
  if (count == 0) throw std::invalid_argument("no frames to fit stats on");
  for (double& v : stats.mean) v /= static_cast<double>(count);
  for (const FeatureMatrix& m : mats) {
    for (int t = 0; t < m.rows; ++t)
      for (int c = 0; c < cols; ++c) {
        double d = m.at(t, c) - stats.mean[c];
        stats.sd[c] += d * d;
      }
  }
  for (double& v : stats.sd) v = std::sqrt(v / static_cast<double>(count));
  return stats;
}

FeatureMatrix remove_outliers(const FeatureMatrix& f, const ColumnStats& stats) {
  if (static_cast<int>(stats.mean.size()) != f.cols) {
    throw std::invalid_argument("stats dimensionality does not match matrix");
  }
  FeatureMatrix out = f;
  for (int c = 0; c < f.cols; ++c) {
    if (stats.sd[c] == 0.0) continue;
    double lo = stats.mean[c] - 3.0 * stats.sd[c];
    double hi = stats.mean[c] + 3.0 * stats.sd[c];
    for (int t = 0; t < f.rows; ++t) out.at(t, c) = std::clamp(out.at(t, c), lo, hi);
  }
  return out;
}

FeatureMatrix standardize_columns(const FeatureMatrix& f, const ColumnStats& stats) {
  if (static_cast<int>(stats.mean.size()) != f.cols) {
    throw std::invalid_argument("stats dimensionality does not match matrix");
  }
  FeatureMatrix out = f;
  for (int c = 0; c < f.cols; ++c) {
    for (int t = 0; t < f.rows; ++t) {
      out.at(t, c) = stats.sd[c] == 0.0 ? 0.0 : (f.at(t, c) - stats.mean[c]) / stats.sd[c];
    }
  }
  return out;
}

}  // namespace sercaps
