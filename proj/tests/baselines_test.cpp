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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "sercaps/baselines.hpp"
#include "sercaps/common.hpp"

using namespace sercaps;

namespace {

// Two well-separated gaussian blobs per class around distinct centers.
void make_blobs(int per_class, int num_classes, int dims, Rng& rng, Dataset* x,
                std::vector<int>* y, double spread = 0.3) {
  for (int c = 0; c < num_classes; ++c) {
    for (int i = 0; i < per_class; ++i) {
      std::vector<double> row(dims);
      for (int d = 0; d < dims; ++d) {
        double center = (d % num_classes == c) ? 3.0 : 0.0;
        row[d] = center + spread * rng.normal();
      }
      x->push_back(std::move(row));
      y->push_back(c);
    }
  }
}

}  // namespace

TEST_CASE("euclid basics") {
  std::vector<double> a{1.0, 2.0, 3.0};
  CHECK(euclid(a, a) == 0.0);
  std::vector<double> zero{0.0, 0.0};
  std::vector<double> p{3.0, 4.0};
  CHECK(euclid(zero, p) == doctest::Approx(5.0));
  std::vector<double> bad{1.0};
  CHECK_THROWS_AS(euclid(a, bad), std::invalid_argument);
}

TEST_CASE("euclid is symmetric on random pairs") {
  Rng rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> a(4), b(4);
    for (int i = 0; i < 4; ++i) {
      a[i] = rng.uniform(-5, 5);
      b[i] = rng.uniform(-5, 5);
    }
    CHECK(euclid(a, b) == euclid(b, a));
  }
}

TEST_CASE("knn with a single training point returns its label") {
  KnnModel knn(1);
  knn.fit({{1.0, 2.0}}, {3});
  std::vector<double> q{100.0, -50.0};
  CHECK(knn.predict_one(q) == 3);
}

TEST_CASE("knn majority vote among equidistant points") {
  // Three points at distance 1 from the origin, labels a,a,b.
  KnnModel knn(3);
  knn.fit({{1.0, 0.0}, {0.0, 1.0}, {-1.0, 0.0}}, {0, 0, 1});
  std::vector<double> origin{0.0, 0.0};
  CHECK(knn.predict_one(origin) == 0);
}

TEST_CASE("knn vote ties break toward the lower class index") {
  KnnModel knn(2);
  knn.fit({{1.0, 0.0}, {0.0, 1.0}}, {1, 0});
  std::vector<double> origin{0.0, 0.0};
  CHECK(knn.predict_one(origin) == 0);
}

TEST_CASE("knn matches a brute-force oracle on random data") {
  Rng rng(5);
  const int n = 50, dims = 3, k = 7;
  Dataset x;
  std::vector<int> y;
  for (int i = 0; i < n; ++i) {
    std::vector<double> row(dims);
    for (double& v : row) v = rng.uniform(-1, 1);
    x.push_back(row);
    y.push_back(rng.uniform_int(0, 3));
  }
  KnnModel knn(k);
  knn.fit(x, y);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> q(dims);
    for (double& v : q) v = rng.uniform(-1, 1);
    // Oracle: full sort of (distance, index), majority with low-class ties.
    std::vector<std::pair<double, int>> all;
    for (int i = 0; i < n; ++i) all.emplace_back(euclid(q, x[i]), i);
    std::sort(all.begin(), all.end());
    std::map<int, int> votes;
    for (int i = 0; i < k; ++i) ++votes[y[all[i].second]];
    int best = -1, best_votes = -1;
    for (auto [cls, v] : votes) {
      if (v > best_votes) {
        best = cls;
        best_votes = v;
      }
    }
    CHECK(knn.predict_one(q) == best);
  }
}

TEST_CASE("knn prediction is invariant to training permutation") {
  Rng rng(11);
  const int n = 30;
  Dataset x;
  std::vector<int> y;
  for (int i = 0; i < n; ++i) {
    // Distinct distances almost surely, so the tie-break never fires.
    x.push_back({rng.uniform(-1, 1), rng.uniform(-1, 1)});
    y.push_back(rng.uniform_int(0, 2));
  }
  KnnModel a(5);
  a.fit(x, y);
  Dataset xr(x.rbegin(), x.rend());
  std::vector<int> yr(y.rbegin(), y.rend());
  KnnModel b(5);
  b.fit(xr, yr);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> q{rng.uniform(-1, 1), rng.uniform(-1, 1)};
    CHECK(a.predict_one(q) == b.predict_one(q));
  }
}

TEST_CASE("unfitted models raise a state error") {
  KnnModel knn(1);
  std::vector<double> q{0.0};
  CHECK_THROWS_AS(knn.predict_one(q), std::logic_error);
  GaussianNbModel nb;
  CHECK_THROWS_AS(nb.predict_one(q), std::logic_error);
  MlpModel mlp;
  CHECK_THROWS_AS(mlp.predict_one(q), std::logic_error);
}

TEST_CASE("direct Bayes-rule arithmetic") {
  CHECK(bayes_posterior(0.8, 0.5, 0.6) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK_THROWS_AS(bayes_posterior(0.8, 0.5, 0.0), std::domain_error);
}

TEST_CASE("identical class likelihoods with uniform priors give a uniform posterior") {
  // Two classes with the same mean/variance and equal counts.
  Dataset x{{0.0}, {1.0}, {0.0}, {1.0}};
  std::vector<int> y{0, 0, 1, 1};
  GaussianNbModel nb;
  nb.fit(x, y);
  std::vector<double> q{0.4};
  auto post = nb.posterior(q);
  CHECK(post[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(post[1] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("well-separated gaussians give a confident posterior at a class mean") {
  Rng rng(21);
  Dataset x;
  std::vector<int> y;
  for (int i = 0; i < 200; ++i) {
    x.push_back({0.0 + 0.5 * rng.normal()});
    y.push_back(0);
    x.push_back({10.0 + 0.5 * rng.normal()});
    y.push_back(1);
  }
  GaussianNbModel nb;
  nb.fit(x, y);
  std::vector<double> q{0.0};
  CHECK(nb.posterior(q)[0] > 0.99);
}

TEST_CASE("nb posteriors sum to one on random inputs") {
  Rng rng(31);
  Dataset x;
  std::vector<int> y;
  make_blobs(20, 3, 4, rng, &x, &y);
  GaussianNbModel nb;
  nb.fit(x, y);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> q(4);
    for (double& v : q) v = rng.uniform(-2, 5);
    auto post = nb.posterior(q);
    double total = 0.0;
    for (double p : post) total += p;
    CHECK(std::fabs(total - 1.0) <= 1e-12);
  }
}

TEST_CASE("mlp separates linearly separable blobs") {
  Rng rng(41);
  Dataset x_train, x_test;
  std::vector<int> y_train, y_test;
  make_blobs(300, 2, 2, rng, &x_train, &y_train);
  make_blobs(50, 2, 2, rng, &x_test, &y_test);
  MlpConfig cfg;
  cfg.seed = 7;
  MlpModel mlp(cfg);
  mlp.fit(x_train, y_train);
  CHECK(mlp.score(x_test, y_test) >= 0.95);
}

TEST_CASE("a memorizing fit scores 1.0 on its own training data") {
  Rng rng(51);
  Dataset x;
  std::vector<int> y;
  make_blobs(5, 2, 2, rng, &x, &y, 0.05);
  MlpConfig cfg;
  cfg.hidden = 8;
  cfg.seed = 3;
  cfg.learning_rate = 0.05;  // a tiny set needs big steps to memorize quickly
  MlpModel mlp(cfg);
  mlp.fit(x, y);
  CHECK(mlp.score(x, y) == 1.0);
}

TEST_CASE("early stopping fires before the epoch cap on converged data") {
  Rng rng(61);
  Dataset x;
  std::vector<int> y;
  make_blobs(50, 2, 2, rng, &x, &y, 0.05);
  MlpConfig cfg;
  cfg.hidden = 8;
  cfg.seed = 5;
  cfg.learning_rate = 0.05;
  MlpModel mlp(cfg);
  mlp.fit(x, y);
  CHECK(mlp.epochs_run() < cfg.max_epochs);
}

TEST_CASE("single-class training data trains but flags a warning") {
  Dataset x{{0.0}, {1.0}, {2.0}, {3.0}};
  std::vector<int> y{0, 0, 0, 0};
  MlpModel mlp;
  mlp.fit(x, y);
  CHECK_FALSE(mlp.warning().empty());
  CHECK(mlp.predict_one(x[0]) == 0);
}

TEST_CASE("all three classifiers share the fit/score/predict contract") {
  Rng rng(71);
  Dataset x;
  std::vector<int> y;
  make_blobs(30, 3, 3, rng, &x, &y, 0.1);
  std::vector<std::unique_ptr<Classifier>> models;
  models.push_back(std::make_unique<KnnModel>(5));
  models.push_back(std::make_unique<GaussianNbModel>());
  MlpConfig mlp_cfg;
  mlp_cfg.hidden = 12;
  mlp_cfg.seed = 11;
  mlp_cfg.learning_rate = 0.05;
  models.push_back(std::make_unique<MlpModel>(mlp_cfg));
  for (auto& model : models) {
    model->fit(x, y);
    CHECK(model->predict(x).size() == x.size());
    CHECK(model->score(x, y) >= 0.9);  // trivially separable
  }
}
