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

#include <cstddef>
#include <vector>

#include "sercaps/tensor.hpp"

namespace sercaps {

struct CapsNetConfig;

/// Instantiation-parameter indices to remove, produced by the dual-channel
/// LSTM calibration pass. Sorted ascending, unique, each < capsule dim.
struct EliminationList {
  std::vector<int> indices;
};

/// Per-instantiation-parameter activation variance over a calibration set.
struct VarianceProfile {
  std::vector<double> variances;
  std::size_t sample_count = 0;
};

/// The 0/1 dropout vector D over a capsule's instantiation parameters.
/// D[i] = 0 exactly for eliminated coordinates; the zero count is
/// floor(rate * n) by construction.
struct CompressionMask {
  std::vector<double> d;
  double rate = 0.0;
  std::vector<int> eliminated;

  int dim() const { return static_cast<int>(d.size()); }
  bool is_identity() const { return eliminated.empty(); }
};

/// All-ones mask (rate 0).
CompressionMask identity_mask(int n);

/// D = 1 everywhere except D[i] = 0 for i in elim. Rejects out-of-range or
/// duplicate indices, and rejects eliminating every coordinate (rate must
/// stay below 1).
CompressionMask build_mask(const EliminationList& elim, int n);

/// Multiplies every capsule row of u [num_capsules x n] elementwise by D.
/// Masked coordinates come out exactly 0; the op is differentiable and
/// idempotent.
Tensor apply_mask(Tape& tape, const Tensor& capsules, const CompressionMask& mask);

struct CompressionReport {
  long params_before = 0;
  long params_after = 0;
  double ratio = 1.0;
};

/// Counts the multiply-accumulate parameters of the capsule transform W that
/// masked coordinates remove: each eliminated coordinate drops one column of
/// every child-to-parent matrix.
CompressionReport compression_report(const CapsNetConfig& config,
                                     const CompressionMask& mask);

}  // namespace sercaps
