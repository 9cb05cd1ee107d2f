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

#include "sercaps/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace sercaps {

std::vector<int> Classifier::predict(const Dataset& x) const {
  std::vector<int> out;
  out.reserve(x.size());
  for (const auto& row : x) out.push_back(predict_one(row));
  return out;
}

double Classifier::score(const Dataset& x, const std::vector<int>& y) const {
  if (x.size() != y.size() || x.empty()) {
    throw std::invalid_argument("score: samples and labels must align and be non-empty");
  }
  std::size_t correct = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (predict_one(x[i]) == y[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(x.size());
}

void Classifier::require_fitted() const {
  if (!fitted_) throw std::logic_error("classifier used before fit()");
}

double euclid(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw std::invalid_argument("euclid: vectors must have equal length");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double d = x[i] - y[i];
    acc += d * d;
  }
  return std::sqrt(acc);
}

double bayes_posterior(double p_b_given_a, double p_a, double p_b) {
  if (p_b <= 0.0) throw std::domain_error("bayes_posterior: P(B) must be positive");
  return p_b_given_a * p_a / p_b;
}

namespace {
void check_training_data(const Dataset& x, const std::vector<int>& y) {
  if (x.size() != y.size() || x.empty()) {
    throw std::invalid_argument("fit: samples and labels must align and be non-empty");
  }
  for (const auto& row : x) {
    if (row.size() != x.front().size()) {
      throw std::invalid_argument("fit: ragged feature rows");
    }
  }
  for (int label : y) {
    if (label < 0) throw std::invalid_argument("fit: negative class label");
  }
}
}  // namespace

void KnnModel::fit(const Dataset& x, const std::vector<int>& y) {
  check_training_data(x, y);
  if (k_ < 1 || static_cast<std::size_t>(k_) > x.size()) {
    throw std::invalid_argument("knn: k must satisfy 1 <= k <= n_train");
  }
  train_x_ = x;
  train_y_ = y;
  num_classes_ = *std::max_element(y.begin(), y.end()) + 1;
  fitted_ = true;
}

int KnnModel::predict_one(std::span<const double> x) const {
  require_fitted();
  std::vector<std::pair<double, std::size_t>> dist(train_x_.size());
  for (std::size_t i = 0; i < train_x_.size(); ++i) {
    dist[i] = {euclid(x, train_x_[i]), i};
  }
  // (distance, training index) order realizes the documented tie-breaks.
  std::sort(dist.begin(), dist.end());
  std::vector<int> votes(num_classes_, 0);
  for (int i = 0; i < k_; ++i) ++votes[train_y_[dist[i].second]];
  int best = 0;
  for (int c = 1; c < num_classes_; ++c) {
    if (votes[c] > votes[best]) best = c;
  }
  return best;
}

void GaussianNbModel::fit(const Dataset& x, const std::vector<int>& y) {
  check_training_data(x, y);
  const std::size_t dims = x.front().size();
  num_classes_ = *std::max_element(y.begin(), y.end()) + 1;
  priors_.assign(num_classes_, 0.0);
  means_.assign(num_classes_, std::vector<double>(dims, 0.0));
  variances_.assign(num_classes_, std::vector<double>(dims, 0.0));
  std::vector<std::size_t> counts(num_classes_, 0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    ++counts[y[i]];
    for (std::size_t d = 0; d < dims; ++d) means_[y[i]][d] += x[i][d];
  }
  for (int c = 0; c < num_classes_; ++c) {
    if (counts[c] == 0) continue;
    priors_[c] = static_cast<double>(counts[c]) / static_cast<double>(x.size());
    for (double& m : means_[c]) m /= static_cast<double>(counts[c]);
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t d = 0; d < dims; ++d) {
      double diff = x[i][d] - means_[y[i]][d];
      variances_[y[i]][d] += diff * diff;
    }
  }
  // Global per-feature variance scales the smoothing floor.
  double max_var = 0.0;
  {
    std::vector<double> gm(dims, 0.0);
    for (const auto& row : x)
      for (std::size_t d = 0; d < dims; ++d) gm[d] += row[d];
    for (double& m : gm) m /= static_cast<double>(x.size());
    for (std::size_t d = 0; d < dims; ++d) {
      double acc = 0.0;
      for (const auto& row : x) acc += (row[d] - gm[d]) * (row[d] - gm[d]);
      max_var = std::max(max_var, acc / static_cast<double>(x.size()));
    }
  }
  double eps = var_smoothing_ * std::max(max_var, 1e-300);
  for (int c = 0; c < num_classes_; ++c) {
    if (counts[c] == 0) continue;
    for (double& v : variances_[c]) {
      v = v / static_cast<double>(counts[c]) + eps;
    }
  }
  fitted_ = true;
}

std::vector<double> GaussianNbModel::posterior(std::span<const double> x) const {
  require_fitted();
  std::vector<double> logp(num_classes_, -std::numeric_limits<double>::infinity());
  for (int c = 0; c < num_classes_; ++c) {
    if (priors_[c] == 0.0) continue;
    double acc = std::log(priors_[c]);
    for (std::size_t d = 0; d < x.size(); ++d) {
      double var = variances_[c][d];
      double diff = x[d] - means_[c][d];
      acc += -0.5 * std::log(2.0 * M_PI * var) - diff * diff / (2.0 * var);
    }
    logp[c] = acc;
  }
  double mx = *std::max_element(logp.begin(), logp.end());
  double denom = 0.0;
  std::vector<double> out(num_classes_, 0.0);
  for (int c = 0; c < num_classes_; ++c) {
    out[c] = std::exp(logp[c] - mx);
    denom += out[c];
  }
  for (double& v : out) v /= denom;
  return out;
}

int GaussianNbModel::predict_one(std::span<const double> x) const {
  std::vector<double> p = posterior(x);
  int best = 0;
  for (int c = 1; c < num_classes_; ++c) {
    if (p[c] > p[best]) best = c;
  }
  return best;
}

namespace {

// Per-row softmax cross-entropy of logits {B, K} against integer targets,
// mean-reduced. Row maxima are detached constants (a valid softmax shift).
Tensor batch_cross_entropy(Tape& tape, const Tensor& logits,
                           std::span<const int> targets) {
  const int b = logits.dim(0), k = logits.dim(1);
  Tensor row_max = Tensor::zeros({b, k});
  Tensor onehot = Tensor::zeros({b, k});
  for (int i = 0; i < b; ++i) {
    double mx = logits.value_at(static_cast<std::size_t>(i) * k);
    for (int j = 1; j < k; ++j) {
      mx = std::max(mx, logits.value_at(static_cast<std::size_t>(i) * k + j));
    }
    for (int j = 0; j < k; ++j) row_max.mutable_values()[i * k + j] = mx;
    onehot.mutable_values()[i * k + targets[i]] = 1.0;
  }
  Tensor ones_col = Tensor::full({k, 1}, 1.0);
  Tensor shifted = sub(tape, logits, row_max);
  Tensor lse = log(tape, matmul(tape, exp(tape, shifted), ones_col));    // {B,1}
  Tensor picked = matmul(tape, mul(tape, shifted, onehot), ones_col);   // {B,1}
  return mean(tape, sub(tape, lse, picked));
}

}  // namespace

void MlpModel::fit(const Dataset& x, const std::vector<int>& y) {
  check_training_data(x, y);
  input_dim_ = static_cast<int>(x.front().size());
  num_classes_ = *std::max_element(y.begin(), y.end()) + 1;
  if (num_classes_ < 2) {
    warning_ = "training labels contain a single class";
    num_classes_ = 2;  // keep a valid softmax head
  }
  const std::size_t n = x.size();

  Rng init_rng = Rng::derive(cfg_.seed, "mlp-init");
  w1_ = Tensor::zeros({input_dim_, cfg_.hidden}, true);
  b1_ = Tensor::zeros({cfg_.hidden}, true);
  w2_ = Tensor::zeros({cfg_.hidden, num_classes_}, true);
  b2_ = Tensor::zeros({num_classes_}, true);
  init_glorot(w1_, input_dim_, cfg_.hidden, init_rng);
  init_glorot(w2_, cfg_.hidden, num_classes_, init_rng);
  fitted_ = true;

  // One shuffle up front, then the tail becomes the validation split.
  Rng shuffle_rng = Rng::derive(cfg_.seed, "mlp-shuffle");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = n; i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(shuffle_rng.next_u64() % i);
    std::swap(order[i - 1], order[j]);
  }
  std::size_t n_val = std::max<std::size_t>(1, static_cast<std::size_t>(
      std::lround(cfg_.validation_fraction * static_cast<double>(n))));
  if (n_val >= n) n_val = n - 1;
  std::size_t n_train = n - n_val;
  if (n_train == 0) {
    n_train = n;
    n_val = 0;
  }

  const int batch = static_cast<int>(std::min<std::size_t>(200, n_train));
  AdamOptimizer opt({w1_, b1_, w2_, b2_}, AdamConfig{cfg_.learning_rate});
  auto forward_logits = [&](Tape& tape, const Tensor& xb) {
    Tensor h = relu(tape, affine_rows(tape, xb, w1_, b1_));
    return affine_rows(tape, h, w2_, b2_);
  };

  double best = -1.0;
  int stale = 0;
  epochs_run_ = 0;
  for (int epoch = 0; epoch < cfg_.max_epochs; ++epoch) {
    ++epochs_run_;
    for (std::size_t i = n_train; i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(shuffle_rng.next_u64() % i);
      std::swap(order[i - 1], order[j]);
    }
    for (std::size_t start = 0; start < n_train; start += batch) {
      std::size_t stop = std::min(n_train, start + batch);
      const int rows = static_cast<int>(stop - start);
      Tensor xb = Tensor::zeros({rows, input_dim_});
      std::vector<int> yb(rows);
      for (int r = 0; r < rows; ++r) {
        std::size_t src = order[start + r];
        yb[r] = y[src];
        for (int d = 0; d < input_dim_; ++d) {
          xb.mutable_values()[static_cast<std::size_t>(r) * input_dim_ + d] = x[src][d];
        }
      }
      Tape tape;
      Tensor data_loss = batch_cross_entropy(tape, forward_logits(tape, xb), yb);
      Tensor l2 = add(tape, sum(tape, square(tape, w1_)), sum(tape, square(tape, w2_)));
      Tensor reg = mul(tape, Tensor::scalar(0.5 * cfg_.alpha / static_cast<double>(n_train)), l2);
      tape.backward(add(tape, data_loss, reg));
      opt.step();
    }

    // Early stopping on held-out accuracy.
    if (n_val == 0) continue;
    std::size_t correct = 0;
    for (std::size_t i = n_train; i < n; ++i) {
      if (predict_one(x[order[i]]) == y[order[i]]) ++correct;
    }
    double val = static_cast<double>(correct) / static_cast<double>(n_val);
    if (val > best + cfg_.tol) {
      best = val;
      stale = 0;
    } else {
      if (++stale >= cfg_.patience) break;
    }
  }
}

int MlpModel::predict_one(std::span<const double> x) const {
  require_fitted();
  if (static_cast<int>(x.size()) != input_dim_) {
    throw std::invalid_argument("mlp: feature dimension mismatch");
  }
  Tape tape;
  tape.set_recording(false);
  Tensor xb = Tensor::from_values({1, input_dim_}, {x.begin(), x.end()});
  Tensor h = relu(tape, affine_rows(tape, xb, w1_, b1_));
  Tensor logits = affine_rows(tape, h, w2_, b2_);
  int best = 0;
  for (int c = 1; c < num_classes_; ++c) {
    if (logits.value_at(c) > logits.value_at(best)) best = c;
  }
  return best;
}

}  // namespace sercaps
