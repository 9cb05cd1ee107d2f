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
#include <utility>
#include <vector>

#include "sercaps/audio.hpp"
#include "sercaps/compress.hpp"
#include "sercaps/tensor.hpp"

namespace sercaps {

/// One LSTM layer: packed gate weights in [input | forget | candidate |
/// output] order. The forget-gate bias slice is initialized to 1.
struct LstmLayerParams {
  int input_dim = 0;
  int hidden_dim = 0;
  Tensor wx;  // {input_dim, 4*hidden_dim}
  Tensor wh;  // {hidden_dim, 4*hidden_dim}
  Tensor b;   // {4*hidden_dim}

  static LstmLayerParams init(int input_dim, int hidden_dim, Rng& rng);
  static LstmLayerParams zeros(int input_dim, int hidden_dim);
  std::vector<Tensor> tensors() const { return {wx, wh, b}; }
};

/// i,f,o = sigmoid gates, g = tanh candidate; c_t = f*c_prev + i*g;
/// h_t = o * tanh(c_t). x is {1, input_dim}; h/c are {1, hidden_dim}.
std::pair<Tensor, Tensor> lstm_step(Tape& tape, const LstmLayerParams& params,
                                    const Tensor& x, const Tensor& h_prev,
                                    const Tensor& c_prev);

/// Runs the two stacked layers over the whole series (frames x dims) and
/// returns the second layer's hidden state at the final timestep.
Tensor forward_channel(Tape& tape, const LstmLayerParams& layer1,
                       const LstmLayerParams& layer2, const FeatureMatrix& series);

/// probabilities = softmax(head_w^T . concat(o_m, o_n) + head_b), shape {1, K}.
Tensor fuse_and_classify(Tape& tape, const Tensor& o_m, const Tensor& o_n,
                         const Tensor& head_w, const Tensor& head_b);

/// Indices of the floor(rate * n) lowest-variance instantiation parameters,
/// ties broken toward the lower index; output sorted ascending.
EliminationList elimination_list(std::span<const double> variance_profile,
                                 double rate);

/// Per-coordinate variance of fused vectors regrouped into capsule_dim-sized
/// chunks: coordinate i pools positions {i, i+n, i+2n, ...} across every
/// vector. Feeds elimination_list.
VarianceProfile variance_profile(std::span<const std::vector<double>> fused_vectors,
                                 int capsule_dim);

struct DcLstmConfig {
  int hidden_dim = 64;
  int num_classes = 6;

  void validate() const;
};

/// The dual-channel classifier: pitch channel M and energy channel N, two
/// LSTM layers each (sequence lengths follow each utterance's frame count),
/// final hidden states fused into a softmax head. Both channels train
/// synchronously through one joint loss.
class DcLstm {
 public:
  DcLstm(const DcLstmConfig& cfg, std::uint64_t seed);

  const DcLstmConfig& config() const { return cfg_; }
  std::vector<Tensor> trainable() const;

  Tensor fused(Tape& tape, const FeatureMatrix& pitch,
               const FeatureMatrix& energy) const;  // {1, 2*hidden}
  Tensor logits(Tape& tape, const FeatureMatrix& pitch,
                const FeatureMatrix& energy) const;  // {1, K}
  Tensor loss(Tape& tape, const FeatureMatrix& pitch, const FeatureMatrix& energy,
              int label) const;  // cross-entropy
  int predict(const FeatureMatrix& pitch, const FeatureMatrix& energy) const;

  LstmLayerParams& layer(int channel, int depth);
  const LstmLayerParams& layer(int channel, int depth) const;
  Tensor& head_w() { return head_w_; }
  Tensor& head_b() { return head_b_; }
  const Tensor& head_w() const { return head_w_; }
  const Tensor& head_b() const { return head_b_; }

 private:
  DcLstmConfig cfg_;
  LstmLayerParams pitch_l1_, pitch_l2_, energy_l1_, energy_l2_;
  Tensor head_w_;  // {2*hidden, K}
  Tensor head_b_;  // {K}
};

}  // namespace sercaps
