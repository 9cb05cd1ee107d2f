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

#include "sercaps/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>

namespace sercaps {

long ConfusionMatrix::total() const {
  long t = 0;
  for (long c : counts) t += c;
  return t;
}

long ConfusionMatrix::row_sum(int truth) const {
  long t = 0;
  for (int p = 0; p < num_classes; ++p) t += at(truth, p);
  return t;
}

long ConfusionMatrix::col_sum(int pred) const {
  long t = 0;
  for (int r = 0; r < num_classes; ++r) t += at(r, pred);
  return t;
}

std::vector<double> ConfusionMatrix::row_percentages() const {
  std::vector<double> out(counts.size(), 0.0);
  for (int r = 0; r < num_classes; ++r) {
    long rs = row_sum(r);
    if (rs == 0) continue;
    for (int p = 0; p < num_classes; ++p) {
      out[static_cast<std::size_t>(r) * num_classes + p] =
          100.0 * static_cast<double>(at(r, p)) / static_cast<double>(rs);
    }
  }
  return out;
}

ConfusionMatrix confusion(std::span<const int> y_true, std::span<const int> y_pred,
                          int num_classes) {
  if (y_true.size() != y_pred.size()) {
    throw std::invalid_argument("confusion: label vectors differ in length");
  }
  if (y_true.empty()) {
    throw std::invalid_argument("confusion: empty input has no defined matrix");
  }
  if (num_classes <= 0) throw std::invalid_argument("confusion: num_classes must be positive");
  ConfusionMatrix m;
  m.num_classes = num_classes;
  m.counts.assign(static_cast<std::size_t>(num_classes) * num_classes, 0);
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    int t = y_true[i], p = y_pred[i];
    if (t < 0 || t >= num_classes || p < 0 || p >= num_classes) {
      throw DataError("confusion: label out of range at sample " + std::to_string(i));
    }
    ++m.at(t, p);
  }
  return m;
}

MetricsReport precision_recall(const ConfusionMatrix& m) {
  MetricsReport r;
  const int k = m.num_classes;
  r.precision.assign(k, 0.0);
  r.recall.assign(k, 0.0);
  r.precision_defined.assign(k, true);
  r.recall_defined.assign(k, true);
  long correct = 0;
  for (int c = 0; c < k; ++c) {
    long tp = m.at(c, c);
    correct += tp;
    long col = m.col_sum(c);
    long row = m.row_sum(c);
    if (col == 0) {
      r.precision_defined[c] = false;
    } else {
      r.precision[c] = static_cast<double>(tp) / static_cast<double>(col);
    }
    if (row == 0) {
      r.recall_defined[c] = false;
    } else {
      r.recall[c] = static_cast<double>(tp) / static_cast<double>(row);
    }
    r.macro_precision += r.precision[c];
    r.macro_recall += r.recall[c];
  }
  r.macro_precision /= k;
  r.macro_recall /= k;
  r.accuracy = static_cast<double>(correct) / static_cast<double>(m.total());
  return r;
}

std::vector<std::pair<double, double>> roc_points(
    std::span<const double> scores, std::span<const int> y_true, int klass) {
  if (scores.size() != y_true.size() || scores.empty()) {
    throw std::invalid_argument("roc_points: scores and labels must align and be non-empty");
  }
  long pos = 0, neg = 0;
  for (int t : y_true) (t == klass ? pos : neg) += 1;
  if (pos == 0 || neg == 0) {
    throw DataError("roc_points: one-vs-rest truth is single-class for class " +
                    std::to_string(klass));
  }
  std::set<double, std::greater<double>> thresholds(scores.begin(), scores.end());
  std::vector<std::pair<double, double>> points;
  points.emplace_back(0.0, 0.0);
  for (double theta : thresholds) {
    long tp = 0, fp = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      if (scores[i] >= theta) {
        if (y_true[i] == klass) ++tp; else ++fp;
      }
    }
    points.emplace_back(static_cast<double>(fp) / neg, static_cast<double>(tp) / pos);
  }
  if (points.back() != std::make_pair(1.0, 1.0)) points.emplace_back(1.0, 1.0);
  return points;
}

double auc_trapezoid(std::span<const std::pair<double, double>> points) {
  double area = 0.0;
  for (std::size_t i = 1; i < points.size(); ++i) {
    area += (points[i].first - points[i - 1].first) *
            (points[i].second + points[i - 1].second) / 2.0;
  }
  return area;
}

namespace {
double sample_sd(std::span<const double> x) {
  double mu = 0.0;
  for (double v : x) mu += v;
  mu /= static_cast<double>(x.size());
  double ss = 0.0;
  for (double v : x) ss += (v - mu) * (v - mu);
  return std::sqrt(ss / static_cast<double>(x.size() - 1));
}
}  // namespace

TTestResult t_test(std::span<const double> x1, std::span<const double> x2) {
  if (x1.size() != x2.size()) {
    throw std::invalid_argument("t_test: samples must have equal size");
  }
  if (x1.size() < 2) throw std::invalid_argument("t_test: need at least 2 observations");
  double m1 = 0.0, m2 = 0.0;
  for (double v : x1) m1 += v;
  for (double v : x2) m2 += v;
  m1 /= static_cast<double>(x1.size());
  m2 /= static_cast<double>(x2.size());
  double sd1 = sample_sd(x1), sd2 = sample_sd(x2);

  TTestResult r;
  r.n = x1.size();
  r.sd_pooled = std::sqrt((sd1 * sd1 + sd2 * sd2) / 2.0);
  if (r.sd_pooled == 0.0) {
    if (m1 == m2) {
      r.t = 0.0;
    } else {
      r.t = (m1 > m2) ? std::numeric_limits<double>::infinity()
                      : -std::numeric_limits<double>::infinity();
    }
  } else {
    r.t = (m1 - m2) / r.sd_pooled;
  }
  r.significant = r.t > kTTestCritical;
  return r;
}

double relative_improvement(double proposed_acc, double related_acc) {
  if (related_acc <= 0.0) {
    throw std::domain_error("relative_improvement: related accuracy must be positive");
  }
  return (proposed_acc - related_acc) / related_acc * 100.0;
}

std::string format_improvement(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.2f", value);
  return buf;
}

std::string confusion_csv(const ConfusionMatrix& m, std::span<const std::string> labels) {
  std::ostringstream os;
  os << "true\\pred";
  for (int p = 0; p < m.num_classes; ++p) os << "," << labels[p];
  os << "\n";
  for (int r = 0; r < m.num_classes; ++r) {
    os << labels[r];
    for (int p = 0; p < m.num_classes; ++p) os << "," << m.at(r, p);
    os << "\n";
  }
  return os.str();
}

std::string metrics_csv(const MetricsReport& r, std::span<const std::string> labels) {
  std::ostringstream os;
  os << "class,precision,recall,precision_defined,recall_defined\n";
  for (std::size_t c = 0; c < r.precision.size(); ++c) {
    os << labels[c] << "," << r.precision[c] << "," << r.recall[c] << ","
       << (r.precision_defined[c] ? 1 : 0) << "," << (r.recall_defined[c] ? 1 : 0)
       << "\n";
  }
  os << "macro," << r.macro_precision << "," << r.macro_recall << ",,\n";
  os << "accuracy," << r.accuracy << ",,,\n";
  return os.str();
}

std::string roc_csv(std::span<const std::pair<double, double>> points) {
  std::ostringstream os;
  os << "fpr,tpr\n";
  for (const auto& [fpr, tpr] : points) os << fpr << "," << tpr << "\n";
  return os.str();
}

std::string summary_text(const MetricsReport& r, std::span<const std::string> labels) {
  std::ostringstream os;
  os << "accuracy: " << r.accuracy << "\n";
  os << "macro precision: " << r.macro_precision << "\n";
  os << "macro recall: " << r.macro_recall << "\n";
  for (std::size_t c = 0; c < r.precision.size(); ++c) {
    os << labels[c] << ": precision " << r.precision[c];
    if (!r.precision_defined[c]) os << " (never predicted)";
    os << ", recall " << r.recall[c];
    if (!r.recall_defined[c]) os << " (never observed)";
    os << "\n";
  }
  return os.str();
}

}  // namespace sercaps
