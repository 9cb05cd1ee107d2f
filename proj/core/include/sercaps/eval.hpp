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

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sercaps/common.hpp"

namespace sercaps {

/// K x K counts; rows index the true class, columns the predicted class.
struct ConfusionMatrix {
  int num_classes = 0;
  std::vector<long> counts;  // row-major

  long& at(int truth, int pred) { return counts[static_cast<std::size_t>(truth) * num_classes + pred]; }
  long at(int truth, int pred) const { return counts[static_cast<std::size_t>(truth) * num_classes + pred]; }
  long total() const;
  long row_sum(int truth) const;
  long col_sum(int pred) const;
  /// Row-normalized view in percent; each row sums to 100 exactly up to
  /// rounding (zero rows stay zero).
  std::vector<double> row_percentages() const;
};

struct MetricsReport {
  std::vector<double> precision;       // per class
  std::vector<double> recall;          // per class
  std::vector<bool> precision_defined; // false when the class was never predicted
  std::vector<bool> recall_defined;    // false when the class never occurred
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double accuracy = 0.0;
};

struct TTestResult {
  double t = 0.0;
  double sd_pooled = 0.0;
  std::size_t n = 0;
  bool significant = false;  // t > critical value, one-sided strict
};

/// Critical value applied to every significance verdict.
inline constexpr double kTTestCritical = 3.17;

ConfusionMatrix confusion(std::span<const int> y_true, std::span<const int> y_pred,
                          int num_classes);

/// precision_k = M[k][k] / column_k, recall_k = M[k][k] / row_k. A zero
/// denominator yields 0 with the corresponding *_defined flag cleared, so
/// macro averages stay finite.
MetricsReport precision_recall(const ConfusionMatrix& m);

/// One-vs-rest ROC sweep for class k: thresholds walk the distinct scores in
/// descending order; the curve starts at (0,0) and ends at (1,1) and is
/// monotone in both axes. Throws if the binarized truth is single-class.
std::vector<std::pair<double, double>> roc_points(
    std::span<const double> scores, std::span<const int> y_true, int klass);

double auc_trapezoid(std::span<const std::pair<double, double>> points);

/// t = (mean1 - mean2) / sd_pooled with sd_pooled = sqrt((sd1^2 + sd2^2)/2);
/// sample standard deviations (n-1 denominator). Equal samples give t = 0;
/// a zero pooled sd with unequal means reports t = +/-infinity.
TTestResult t_test(std::span<const double> x1, std::span<const double> x2);

/// (proposed - related) / related * 100. Domain error when related <= 0.
double relative_improvement(double proposed_acc, double related_acc);

/// Formats to the 2-decimal convention used in reports.
std::string format_improvement(double value);

// CSV / text emission (UTF-8).
std::string confusion_csv(const ConfusionMatrix& m, std::span<const std::string> labels);
std::string metrics_csv(const MetricsReport& r, std::span<const std::string> labels);
std::string roc_csv(std::span<const std::pair<double, double>> points);
std::string summary_text(const MetricsReport& r, std::span<const std::string> labels);

}  // namespace sercaps
