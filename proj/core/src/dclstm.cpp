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

#include "sercaps/dclstm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace sercaps {

LstmLayerParams LstmLayerParams::init(int input_dim, int hidden_dim, Rng& rng) {
  LstmLayerParams p = zeros(input_dim, hidden_dim);
  init_glorot(p.wx, input_dim, 4 * hidden_dim, rng);
  init_glorot(p.wh, hidden_dim, 4 * hidden_dim, rng);
  // Forget-gate bias starts at 1 so early training does not flush the cell.
  auto bv = p.b.mutable_values();
  for (int i = hidden_dim; i < 2 * hidden_dim; ++i) bv[i] = 1.0;
  return p;
}

LstmLayerParams LstmLayerParams::zeros(int input_dim, int hidden_dim) {
  if (input_dim < 1 || hidden_dim < 1) {
    throw std::invalid_argument("lstm layer dims must be positive");
  }
  LstmLayerParams p;
  p.input_dim = input_dim;
  p.hidden_dim = hidden_dim;
  p.wx = Tensor::zeros({input_dim, 4 * hidden_dim}, true);
  p.wh = Tensor::zeros({hidden_dim, 4 * hidden_dim}, true);
  p.b = Tensor::zeros({4 * hidden_dim}, true);
  return p;
}

std::pair<Tensor, Tensor> lstm_step(Tape& tape, const LstmLayerParams& params,
                                    const Tensor& x, const Tensor& h_prev,
                                    const Tensor& c_prev) {
  const int h = params.hidden_dim;
  if (x.rank() != 2 || x.dim(0) != 1 || x.dim(1) != params.input_dim ||
      h_prev.shape() != Shape{1, h} || c_prev.shape() != Shape{1, h}) {
    throw std::invalid_argument("lstm_step: shapes do not match layer dims");
  }
  Tensor pre = add(tape, affine_rows(tape, x, params.wx, params.b),
                   matmul(tape, h_prev, params.wh));
  Tensor gi = sigmoid(tape, slice_cols(tape, pre, 0, h));
  Tensor gf = sigmoid(tape, slice_cols(tape, pre, h, h));
  Tensor gg = tanh(tape, slice_cols(tape, pre, 2 * h, h));
  Tensor go = sigmoid(tape, slice_cols(tape, pre, 3 * h, h));
  Tensor c = add(tape, mul(tape, gf, c_prev), mul(tape, gi, gg));
  Tensor ht = mul(tape, go, tanh(tape, c));
  return {ht, c};
}

Tensor forward_channel(Tape& tape, const LstmLayerParams& layer1,
                       const LstmLayerParams& layer2, const FeatureMatrix& series) {
  if (series.rows < 1) {
    throw std::invalid_argument("forward_channel: series must have at least one frame");
  }
  if (series.cols != layer1.input_dim || layer1.hidden_dim != layer2.input_dim) {
    throw std::invalid_argument("forward_channel: series/layer dims disagree");
  }
  Tensor h1 = Tensor::zeros({1, layer1.hidden_dim});
  Tensor c1 = Tensor::zeros({1, layer1.hidden_dim});
  Tensor h2 = Tensor::zeros({1, layer2.hidden_dim});
  Tensor c2 = Tensor::zeros({1, layer2.hidden_dim});
  for (int t = 0; t < series.rows; ++t) {
    std::vector<double> row(series.cols);
    for (int c = 0; c < series.cols; ++c) row[c] = series.at(t, c);
    Tensor x = Tensor::from_values({1, series.cols}, std::move(row));
    std::tie(h1, c1) = lstm_step(tape, layer1, x, h1, c1);
    std::tie(h2, c2) = lstm_step(tape, layer2, h1, h2, c2);
  }
  return h2;
}

Tensor fuse_and_classify(Tape& tape, const Tensor& o_m, const Tensor& o_n,
                         const Tensor& head_w, const Tensor& head_b) {
  if (o_m.shape() != o_n.shape()) {
    throw std::invalid_argument("fuse_and_classify: channel outputs must agree");
  }
  Tensor fused = concat_cols(tape, {o_m, o_n});
  return softmax_rows(tape, affine_rows(tape, fused, head_w, head_b));
}

EliminationList elimination_list(std::span<const double> variance_profile,
                                 double rate) {
  if (!(rate >= 0.0 && rate < 1.0)) {
    throw std::invalid_argument("compression rate must lie in [0, 1)");
  }
  const int n = static_cast<int>(variance_profile.size());
  if (n < 1) throw std::invalid_argument("variance profile must be non-empty");
  const int keep_out = static_cast<int>(rate * n);  // floor
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return variance_profile[a] < variance_profile[b];
  });
  EliminationList elim;
  elim.indices.assign(order.begin(), order.begin() + keep_out);
  std::sort(elim.indices.begin(), elim.indices.end());
  return elim;
}

VarianceProfile variance_profile(std::span<const std::vector<double>> fused_vectors,
                                 int capsule_dim) {
  if (capsule_dim < 1) throw std::invalid_argument("capsule_dim must be >= 1");
  if (fused_vectors.empty()) {
    throw std::invalid_argument("variance_profile: no calibration vectors");
  }
  const std::size_t width = fused_vectors.front().size();
  if (width % static_cast<std::size_t>(capsule_dim) != 0) {
    throw std::invalid_argument(
        "variance_profile: fused width " + std::to_string(width) +
        " is not a multiple of capsule dim " + std::to_string(capsule_dim));
  }
  VarianceProfile profile;
  profile.variances.assign(capsule_dim, 0.0);
  std::vector<double> mean(capsule_dim, 0.0);
  std::size_t per_coord = 0;
  for (const auto& vec : fused_vectors) {
    if (vec.size() != width) {
      throw std::invalid_argument("variance_profile: ragged calibration vectors");
    }
    for (std::size_t i = 0; i < width; ++i) mean[i % capsule_dim] += vec[i];
    per_coord += width / capsule_dim;
  }
  if (per_coord < 2) {
    throw std::invalid_argument("variance_profile: needs at least 2 samples");
  }
  for (double& m : mean) m /= static_cast<double>(per_coord);
  for (const auto& vec : fused_vectors) {
    for (std::size_t i = 0; i < width; ++i) {
      double d = vec[i] - mean[i % capsule_dim];
      profile.variances[i % capsule_dim] += d * d;
    }
  }
  for (double& v : profile.variances) v /= static_cast<double>(per_coord);
  profile.sample_count = per_coord;
  return profile;
}

void DcLstmConfig::validate() const {
  if (hidden_dim < 1) throw std::invalid_argument("dclstm: hidden_dim must be >= 1");
  if (num_classes < 2) throw std::invalid_argument("dclstm: need at least 2 classes");
}

DcLstm::DcLstm(const DcLstmConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
  cfg_.validate();
  Rng rng = Rng::derive(seed, "dclstm-init");
  pitch_l1_ = LstmLayerParams::init(1, cfg_.hidden_dim, rng);
  pitch_l2_ = LstmLayerParams::init(cfg_.hidden_dim, cfg_.hidden_dim, rng);
  energy_l1_ = LstmLayerParams::init(1, cfg_.hidden_dim, rng);
  energy_l2_ = LstmLayerParams::init(cfg_.hidden_dim, cfg_.hidden_dim, rng);
  head_w_ = Tensor::zeros({2 * cfg_.hidden_dim, cfg_.num_classes}, true);
  init_glorot(head_w_, 2 * cfg_.hidden_dim, cfg_.num_classes, rng);
  head_b_ = Tensor::zeros({cfg_.num_classes}, true);
}

std::vector<Tensor> DcLstm::trainable() const {
  std::vector<Tensor> out;
  for (const LstmLayerParams* layer : {&pitch_l1_, &pitch_l2_, &energy_l1_, &energy_l2_}) {
    for (Tensor t : layer->tensors()) out.push_back(t);
  }
  out.push_back(head_w_);
  out.push_back(head_b_);
  return out;
}

LstmLayerParams& DcLstm::layer(int channel, int depth) {
  if (channel == 0) return depth == 0 ? pitch_l1_ : pitch_l2_;
  return depth == 0 ? energy_l1_ : energy_l2_;
}

const LstmLayerParams& DcLstm::layer(int channel, int depth) const {
  if (channel == 0) return depth == 0 ? pitch_l1_ : pitch_l2_;
  return depth == 0 ? energy_l1_ : energy_l2_;
}

Tensor DcLstm::fused(Tape& tape, const FeatureMatrix& pitch,
                     const FeatureMatrix& energy) const {
  Tensor o_m = forward_channel(tape, pitch_l1_, pitch_l2_, pitch);
  Tensor o_n = forward_channel(tape, energy_l1_, energy_l2_, energy);
  return concat_cols(tape, {o_m, o_n});
}

Tensor DcLstm::logits(Tape& tape, const FeatureMatrix& pitch,
                      const FeatureMatrix& energy) const {
  return affine_rows(tape, fused(tape, pitch, energy), head_w_, head_b_);
}

Tensor DcLstm::loss(Tape& tape, const FeatureMatrix& pitch,
                    const FeatureMatrix& energy, int label) const {
  if (label < 0 || label >= cfg_.num_classes) {
    throw std::invalid_argument("dclstm: label out of range");
  }
  Tensor z = logits(tape, pitch, energy);
  double mx = z.value_at(0);
  for (int i = 1; i < cfg_.num_classes; ++i) mx = std::max(mx, z.value_at(i));
  Tensor shifted = sub(tape, z, Tensor::scalar(mx));
  Tensor lse = log(tape, sum(tape, exp(tape, shifted)));
  Tensor onehot = Tensor::zeros({1, cfg_.num_classes});
  onehot.mutable_values()[label] = 1.0;
  return sub(tape, lse, sum(tape, mul(tape, shifted, onehot)));
}

int DcLstm::predict(const FeatureMatrix& pitch, const FeatureMatrix& energy) const {
  Tape tape;
  tape.set_recording(false);
  Tensor z = logits(tape, pitch, energy);
  int best = 0;
  for (int i = 1; i < cfg_.num_classes; ++i) {
    if (z.value_at(i) > z.value_at(best)) best = i;
  }
  return best;
}

}  // namespace sercaps
