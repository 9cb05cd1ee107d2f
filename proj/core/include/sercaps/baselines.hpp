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
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "sercaps/tensor.hpp"

namespace sercaps {

using Dataset = std::vector<std::vector<double>>;

/// The shared fit / predict / score contract. score returns mean accuracy.
class Classifier {
 public:
  virtual ~Classifier() = default;
  virtual void fit(const Dataset& x, const std::vector<int>& y) = 0;
  virtual int predict_one(std::span<const double> x) const = 0;

  std::vector<int> predict(const Dataset& x) const;
  double score(const Dataset& x, const std::vector<int>& y) const;

 protected:
  void require_fitted() const;
  bool fitted_ = false;
};

/// Euclidean distance between equal-length vectors.
double euclid(std::span<const double> x, std::span<const double> y);

/// Direct Bayes-rule arithmetic: P(A|B) = P(B|A) P(A) / P(B).
double bayes_posterior(double p_b_given_a, double p_a, double p_b);

/// Exhaustive k-nearest-neighbor majority vote, uniform weights, Euclidean
/// metric. Distance ties resolve toward the lower training index, vote ties
/// toward the lower class index.
class KnnModel : public Classifier {
 public:
  explicit KnnModel(int k = 10) : k_(k) {}
  void fit(const Dataset& x, const std::vector<int>& y) override;
  int predict_one(std::span<const double> x) const override;
  int k() const { return k_; }

 private:
  int k_;
  Dataset train_x_;
  std::vector<int> train_y_;
  int num_classes_ = 0;
};

/// Gaussian naive Bayes with variance smoothing: every per-class variance
/// gets var_smoothing * max-feature-variance added for stability.
class GaussianNbModel : public Classifier {
 public:
  explicit GaussianNbModel(double var_smoothing = 1e-9)
      : var_smoothing_(var_smoothing) {}
  void fit(const Dataset& x, const std::vector<int>& y) override;
  int predict_one(std::span<const double> x) const override;
  /// Normalized class posteriors for one sample (log-space internally).
  std::vector<double> posterior(std::span<const double> x) const;

 private:
  double var_smoothing_;
  int num_classes_ = 0;
  std::vector<double> priors_;
  std::vector<std::vector<double>> means_;      // per class
  std::vector<std::vector<double>> variances_;  // per class, smoothed
};

struct MlpConfig {
  int hidden = 100;
  double alpha = 1.0;          // L2 strength
  int max_epochs = 200;
  double learning_rate = 0.001;
  double tol = 1e-3;
  int patience = 10;           // epochs without tol-sized improvement
  double validation_fraction = 0.1;
  std::uint64_t seed = 0;
};

/// One hidden relu layer trained with the adaptive-moment optimizer on
/// softmax cross-entropy, minibatch size min(200, n), constant learning
/// rate, early stopping on held-out validation accuracy.
class MlpModel : public Classifier {
 public:
  explicit MlpModel(MlpConfig cfg = {}) : cfg_(cfg) {}
  void fit(const Dataset& x, const std::vector<int>& y) override;
  int predict_one(std::span<const double> x) const override;

  int epochs_run() const { return epochs_run_; }
  const std::string& warning() const { return warning_; }

 private:
  MlpConfig cfg_;
  int num_classes_ = 0;
  int input_dim_ = 0;
  int epochs_run_ = 0;
  std::string warning_;
  Tensor w1_, b1_, w2_, b2_;
};

}  // namespace sercaps
