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

#include "sercaps/compress.hpp"

#include <algorithm>
#include <stdexcept>

#include "sercaps/capsnet.hpp"

namespace sercaps {

CompressionMask identity_mask(int n) {
  if (n < 1) throw std::invalid_argument("mask dimension must be >= 1");
  CompressionMask mask;
  mask.d.assign(n, 1.0);
  mask.rate = 0.0;
  return mask;
}

CompressionMask build_mask(const EliminationList& elim, int n) {
  if (n < 1) throw std::invalid_argument("mask dimension must be >= 1");
  CompressionMask mask = identity_mask(n);
  std::vector<int> indices = elim.indices;
  std::sort(indices.begin(), indices.end());
  if (std::adjacent_find(indices.begin(), indices.end()) != indices.end()) {
    throw std::invalid_argument("elimination indices must be unique");
  }
  for (int i : indices) {
    if (i < 0 || i >= n) {
      throw std::out_of_range("elimination index " + std::to_string(i) +
                              " out of bounds for capsule dim " + std::to_string(n));
    }
  }
  if (static_cast<int>(indices.size()) >= n) {
    throw std::invalid_argument("cannot eliminate every instantiation parameter "
                                "(compression rate must stay below 1)");
  }
  for (int i : indices) mask.d[i] = 0.0;
  mask.eliminated = std::move(indices);
  mask.rate = static_cast<double>(mask.eliminated.size()) / static_cast<double>(n);
  return mask;
}

Tensor apply_mask(Tape& tape, const Tensor& capsules, const CompressionMask& mask) {
  if (capsules.rank() != 2 || capsules.dim(1) != mask.dim()) {
    throw std::invalid_argument("apply_mask: capsule dim " +
                                std::to_string(capsules.rank() == 2 ? capsules.dim(1) : -1) +
                                " does not match mask dim " + std::to_string(mask.dim()));
  }
  const int rows = capsules.dim(0), n = mask.dim();
  Tensor tiled = Tensor::zeros({rows, n});
  auto tv = tiled.mutable_values();
  for (int r = 0; r < rows; ++r)
    for (int i = 0; i < n; ++i) tv[static_cast<std::size_t>(r) * n + i] = mask.d[i];
  return mul(tape, capsules, tiled);
}

CompressionReport compression_report(const CapsNetConfig& config,
                                     const CompressionMask& mask) {
  if (mask.dim() != config.capsule_dim) {
    throw std::invalid_argument("compression_report: mask dim does not match config");
  }
  CapsNetDims dims = derive_dims(config);
  const long per_coordinate = static_cast<long>(dims.num_primary_capsules) *
                              config.num_classes * config.class_capsule_dim;
  CompressionReport report;
  report.params_before = per_coordinate * config.capsule_dim;
  report.params_after =
      per_coordinate * (config.capsule_dim - static_cast<long>(mask.eliminated.size()));
  report.ratio = static_cast<double>(report.params_after) /
                 static_cast<double>(report.params_before);
  return report;
}

}  // namespace sercaps
