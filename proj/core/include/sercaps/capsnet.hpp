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
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sercaps/compress.hpp"
#include "sercaps/tensor.hpp"

namespace sercaps {

struct ConvSpec {
  int out_channels = 8;
  int kernel = 9;
  int stride = 1;
};

/// Two convolutional layers into primary capsules (squashed), routed into
/// one detection capsule per class, plus a two-hidden-layer decoder used for
/// reconstruction regularization. The flattened conv2 width plays the role
/// of the first-stage neuron budget; derive_dims() reports it and
/// width_warning() flags configs that stray more than 2x from the budget.
struct CapsNetConfig {
  int input_frames = 96;
  int input_dims = 120;
  ConvSpec conv1{8, 9, 1};
  ConvSpec conv2{16, 9, 2};
  int capsule_dim = 8;  // instantiation parameters per primary capsule
  int num_classes = 6;
  int class_capsule_dim = 16;
  int routing_iters = 3;
  int first_stage_width = 1024;
  int decoder_hidden1 = 512;
  int decoder_hidden2 = 1024;
  double margin_pos = 0.9;
  double margin_neg = 0.1;
  double margin_lambda = 0.5;
  double recon_weight = 0.0005;
  /// Reconstruction target: the frame-mean feature vector (default) or the
  /// whole input map.
  bool decoder_reconstructs_map = false;
  bool cnn_ablation = false;  // conv stack + softmax head instead of capsules

  void validate() const;
};

struct CapsNetDims {
  int conv1_h = 0, conv1_w = 0;
  int conv2_h = 0, conv2_w = 0;
  int flatten_width = 0;        // conv2 activations, the first-stage width
  int num_primary_capsules = 0;
};

CapsNetDims derive_dims(const CapsNetConfig& cfg);

/// Non-empty when the flattened conv2 width deviates from the configured
/// first-stage budget by more than a factor of two.
std::string width_warning(const CapsNetConfig& cfg);

/// Eq-style squash nonlinearity applied to each row:
/// v = (|s|^2 / (1 + |s|^2)) * (s / |s|); the zero vector maps to the zero
/// vector (limit convention). Accepts a rank-1 vector or rank-2 rows.
Tensor squash(Tape& tape, const Tensor& s);

/// Child-to-parent predictions u_hat[c][p] = W[c][p] * u[c] for
/// u [children x n] and W [children x parents x parent_dim x n].
Tensor predict_parents(Tape& tape, const Tensor& u, const Tensor& w);

/// Routing logits and couplings after the final iteration.
struct RoutingState {
  std::vector<double> logits;     // b_ij, children x parents
  std::vector<double> couplings;  // c_ij, children x parents
};

/// Per-iteration snapshot used by oracle tests.
struct RoutingIteration {
  std::vector<double> logits;     // b at the start of the iteration
  std::vector<double> couplings;  // softmax over parents
  std::vector<double> s;          // weighted prediction sums, parents x dim
  std::vector<double> v;          // squashed outputs, parents x dim
};

/// Routing by agreement over u_hat [children x parents x parent_dim]:
/// per iteration c = softmax_parents(b), s_j = sum_i c_ij u_hat_ij,
/// v_j = squash(s_j), then b_ij += u_hat_ij . v_j (skipped after the last
/// iteration). Gradients flow through the unrolled loop.
Tensor route(Tape& tape, const Tensor& u_hat, int iters,
             RoutingState* state = nullptr,
             std::vector<RoutingIteration>* trace = nullptr);

/// Euclidean-norm readout: score_k = |v_k|, argmax with lowest-index
/// tie-break.
std::pair<int, std::vector<double>> classify(const Tensor& class_caps);

/// Margin loss over class capsule norms; requires 0 < m_neg < m_pos < 1.
Tensor margin_loss(Tape& tape, const Tensor& class_caps, int true_class,
                   double m_pos, double m_neg, double lambda);

/// 2-D valid convolution, input [c_in x h x w], kernel
/// [c_out x c_in x k x k], bias [c_out], shared stride in both axes.
Tensor conv2d(Tape& tape, const Tensor& input, const Tensor& kernel,
              const Tensor& bias, int stride);

/// Regroups conv activations [c x h x w] into capsules
/// [(c/n)*h*w x n]: capsule (g, pos) takes channels g*n..g*n+n-1 at pos.
Tensor primary_capsules(Tape& tape, const Tensor& conv_out, int capsule_dim);

struct CapsNetParams {
  Tensor conv1_kernel, conv1_bias;
  Tensor conv2_kernel, conv2_bias;
  Tensor routing_weights;  // children x K x class_dim x n
  Tensor decoder_w1, decoder_b1, decoder_w2, decoder_b2, decoder_w3, decoder_b3;
  Tensor head_w, head_b;  // cnn-ablation softmax head
};

class CapsNet {
 public:
  CapsNet(const CapsNetConfig& cfg, std::uint64_t seed);

  const CapsNetConfig& config() const { return cfg_; }
  const CapsNetDims& dims() const { return dims_; }
  CapsNetParams& params() { return params_; }
  const CapsNetParams& params() const { return params_; }
  std::vector<Tensor> trainable() const;

  struct Forward {
    Tensor class_caps;    // {K, class_dim}; capsule path
    Tensor logits;        // {1, K}; cnn-ablation path
    Tensor input;         // the feature map fed to conv1
    Tensor pooled_input;  // {1, input_dims} frame-mean
  };

  /// `input` is the standardized feature map {frames, dims}. An identity or
  /// empty mask leaves activations bit-identical to the unmasked path.
  Forward forward(Tape& tape, const Tensor& input,
                  const CompressionMask* mask = nullptr) const;

  /// Margin loss plus weighted reconstruction MSE (capsule path) or softmax
  /// cross-entropy (cnn-ablation path).
  Tensor loss(Tape& tape, const Forward& fwd, int true_class) const;

  /// Decoder on the class capsules with every non-true row zeroed.
  Tensor decode(Tape& tape, const Tensor& class_caps, int mask_class) const;

  /// Inference without recording gradients; returns (class, per-class scores).
  std::pair<int, std::vector<double>> predict(
      const Tensor& input, const CompressionMask* mask = nullptr) const;

 private:
  CapsNetConfig cfg_;
  CapsNetDims dims_;
  CapsNetParams params_;
};

}  // namespace sercaps
