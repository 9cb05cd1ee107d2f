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

#include <cmath>
#include <vector>

#include "sercaps/tensor.hpp"
#include "testutil.hpp"

using namespace sercaps;
using sercaps::test::grad_check;
using sercaps::test::random_tensor;

TEST_CASE("matmul identity leaves the operand unchanged") {
  Tape tape;
  Tensor eye = Tensor::from_values({2, 2}, {1, 0, 0, 1});
  Tensor x = Tensor::from_values({2, 3}, {1, 2, 3, 4, 5, 6});
  Tensor y = matmul(tape, eye, x);
  for (std::size_t i = 0; i < x.size(); ++i) {
    CHECK(y.value_at(i) == x.value_at(i));
  }
}

TEST_CASE("matmul matches hand multiplication") {
  Tape tape;
  Tensor a = Tensor::from_values({2, 2}, {1, 2, 3, 4});
  Tensor b = Tensor::from_values({2, 1}, {1, 1});
  Tensor c = matmul(tape, a, b);
  CHECK(c.value_at(0) == doctest::Approx(3.0));
  CHECK(c.value_at(1) == doctest::Approx(7.0));
}

TEST_CASE("matmul rejects mismatched inner dimensions") {
  Tape tape;
  Tensor a = Tensor::zeros({2, 3});
  Tensor b = Tensor::zeros({4, 5});
  CHECK_THROWS_AS(matmul(tape, a, b), std::invalid_argument);
}

TEST_CASE("elementwise op values") {
  Tape tape;
  CHECK(relu(tape, Tensor::scalar(-3.0)).scalar_value() == 0.0);
  CHECK(relu(tape, Tensor::scalar(2.5)).scalar_value() == 2.5);
  CHECK(sigmoid(tape, Tensor::scalar(0.0)).scalar_value() == doctest::Approx(0.5));
  CHECK(tanh(tape, Tensor::scalar(0.0)).scalar_value() == 0.0);
  // Frozen independent value of tanh(1).
  CHECK(tanh(tape, Tensor::scalar(1.0)).scalar_value() ==
        doctest::Approx(0.7615941559557649).epsilon(1e-12));
}

TEST_CASE("binary ops broadcast a scalar on either side") {
  Tape tape;
  Tensor v = Tensor::from_values({3}, {1, 2, 3});
  Tensor two = Tensor::scalar(2.0);
  Tensor left = mul(tape, two, v);
  Tensor right = add(tape, v, two);
  CHECK(left.value_at(2) == 6.0);
  CHECK(right.value_at(0) == 3.0);
  Tensor w = Tensor::zeros({4});
  CHECK_THROWS_AS(add(tape, v, w), std::invalid_argument);
}

TEST_CASE("log rejects non-positive input") {
  Tape tape;
  CHECK_THROWS_AS(log(tape, Tensor::scalar(0.0)), std::domain_error);
  CHECK_THROWS_AS(log(tape, Tensor::scalar(-1.0)), std::domain_error);
}

TEST_CASE("non-finite forward results fail fast naming the op") {
  Tape tape;
  try {
    exp(tape, Tensor::scalar(1e4));
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find("exp") != std::string::npos);
  }
}

TEST_CASE("backward of a sum yields all-ones gradient") {
  Tape tape;
  Tensor x = Tensor::from_values({3}, {4, -1, 2}, true);
  Tensor loss = sum(tape, x);
  tape.backward(loss);
  for (double g : x.grad()) CHECK(g == 1.0);
}

TEST_CASE("backward of square at 3 gives 6") {
  Tape tape;
  Tensor x = Tensor::scalar(3.0, true);
  Tensor loss = square(tape, x);
  tape.backward(loss);
  CHECK(x.grad()[0] == doctest::Approx(6.0));
}

TEST_CASE("backward requires a scalar loss") {
  Tape tape;
  Tensor x = Tensor::from_values({2}, {1, 2}, true);
  Tensor y = square(tape, x);
  CHECK_THROWS_AS(tape.backward(y), std::invalid_argument);
}

TEST_CASE("tensors not reaching the loss get zero grad") {
  Tape tape;
  Tensor x = Tensor::scalar(2.0, true);
  Tensor y = Tensor::scalar(5.0, true);
  Tensor unused = square(tape, y);
  Tensor loss = square(tape, x);
  tape.backward(loss);
  REQUIRE(y.has_grad());
  CHECK(y.grad()[0] == 0.0);
  CHECK(x.grad()[0] == doctest::Approx(4.0));
}

TEST_CASE("every elementwise op matches finite differences over 100 seeds") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(seed * 7919 + 13);
    int rows = rng.uniform_int(1, 4);
    int cols = rng.uniform_int(1, 4);
    Tensor x = random_tensor({rows, cols}, rng, 0.1, 1.5);
    Tensor y = random_tensor({rows, cols}, rng, 0.1, 1.5);

    auto check_unary = [&](auto op) {
      double err = grad_check({x}, [&](Tape& t) { return sum(t, op(t, x)); });
      CHECK(err <= 1e-6);
    };
    check_unary([](Tape& t, const Tensor& v) { return sercaps::tanh(t, v); });
    check_unary([](Tape& t, const Tensor& v) { return sercaps::sigmoid(t, v); });
    check_unary([](Tape& t, const Tensor& v) { return sercaps::exp(t, v); });
    check_unary([](Tape& t, const Tensor& v) { return sercaps::log(t, v); });
    check_unary([](Tape& t, const Tensor& v) { return sercaps::square(t, v); });
    check_unary([](Tape& t, const Tensor& v) { return sercaps::sqrt(t, v); });

    auto check_binary = [&](auto op) {
      double err = grad_check({x, y}, [&](Tape& t) { return sum(t, op(t, x, y)); });
      CHECK(err <= 1e-6);
    };
    check_binary([](Tape& t, const Tensor& a, const Tensor& b) { return add(t, a, b); });
    check_binary([](Tape& t, const Tensor& a, const Tensor& b) { return sub(t, a, b); });
    check_binary([](Tape& t, const Tensor& a, const Tensor& b) { return mul(t, a, b); });
    check_binary([](Tape& t, const Tensor& a, const Tensor& b) { return div(t, a, b); });
  }
}

TEST_CASE("structure ops match finite differences") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Rng rng(seed + 991);
    int m = rng.uniform_int(1, 3), k = rng.uniform_int(1, 3), n = rng.uniform_int(1, 3);
    Tensor a = random_tensor({m, k}, rng);
    Tensor b = random_tensor({k, n}, rng);
    Tensor bias = random_tensor({n}, rng);
    CHECK(grad_check({a, b}, [&](Tape& t) { return sum(t, matmul(t, a, b)); }) <= 1e-6);
    CHECK(grad_check({a, b, bias},
                     [&](Tape& t) { return sum(t, affine_rows(t, a, b, bias)); }) <= 1e-6);
    Tensor x = random_tensor({m, k + 1}, rng);
    CHECK(grad_check({x}, [&](Tape& t) {
            return sum(t, square(t, softmax_rows(t, x)));
          }) <= 1e-6);
    CHECK(grad_check({x}, [&](Tape& t) { return sum(t, row_norms(t, x)); }) <= 1e-6);
    CHECK(grad_check({x}, [&](Tape& t) {
            return sum(t, square(t, slice_cols(t, x, 1, k)));
          }) <= 1e-6);
    Tensor x2 = random_tensor({m, 2}, rng);
    CHECK(grad_check({x, x2}, [&](Tape& t) {
            return sum(t, square(t, concat_cols(t, {x, x2})));
          }) <= 1e-6);
    CHECK(grad_check({x}, [&](Tape& t) {
            return sum(t, square(t, reshape(t, x, {k + 1, m})));
          }) <= 1e-6);
  }
}

TEST_CASE("random 3-layer composite matches finite differences over 100 seeds") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(seed * 31 + 5);
    int d = rng.uniform_int(2, 4);
    Tensor x = random_tensor({1, d}, rng);
    Tensor w1 = random_tensor({d, 3}, rng);
    Tensor b1 = random_tensor({3}, rng);
    Tensor w2 = random_tensor({3, 2}, rng);
    Tensor b2 = random_tensor({2}, rng);
    Tensor w3 = random_tensor({2, 1}, rng);
    auto build = [&](Tape& t) {
      Tensor h1 = sercaps::tanh(t, affine_rows(t, x, w1, b1));
      Tensor h2 = sercaps::sigmoid(t, affine_rows(t, h1, w2, b2));
      return sum(t, square(t, matmul(t, h2, w3)));
    };
    CHECK(grad_check({x, w1, b1, w2, b2, w3}, build) <= 1e-6);
  }
}

TEST_CASE("forward evaluation is pure and bit-identical") {
  Rng rng(404);
  Tensor a = random_tensor({3, 3}, rng);
  Tensor b = random_tensor({3, 3}, rng);
  Tape t1, t2;
  Tensor r1 = sercaps::tanh(t1, matmul(t1, a, b));
  Tensor r2 = sercaps::tanh(t2, matmul(t2, a, b));
  for (std::size_t i = 0; i < r1.size(); ++i) {
    CHECK(r1.value_at(i) == r2.value_at(i));
  }
}

TEST_CASE("backward of a sum of losses equals the sum of backwards") {
  Rng rng(77);
  Tensor x = random_tensor({2, 2}, rng);
  auto loss1 = [&](Tape& t) { return sum(t, square(t, x)); };
  auto loss2 = [&](Tape& t) { return sum(t, sercaps::tanh(t, x)); };

  Tape ta;
  Tensor combined = add(ta, loss1(ta), loss2(ta));
  ta.backward(combined);
  std::vector<double> g_combined(x.grad().begin(), x.grad().end());

  Tape tb;
  tb.backward(loss1(tb));
  std::vector<double> g1(x.grad().begin(), x.grad().end());
  Tape tc;
  tc.backward(loss2(tc));
  std::vector<double> g2(x.grad().begin(), x.grad().end());

  for (std::size_t i = 0; i < g_combined.size(); ++i) {
    CHECK(g_combined[i] == doctest::Approx(g1[i] + g2[i]).epsilon(1e-12));
  }
}

TEST_CASE("adam with zero gradient from zero state is a fixed point") {
  Tensor p = Tensor::from_values({3}, {1.0, -2.0, 0.5}, true);
  std::vector<double> before(p.values().begin(), p.values().end());
  AdamState state;
  std::vector<double> zero_grad(3, 0.0);
  adam_step(p.mutable_values(), zero_grad, state, AdamConfig{});
  for (std::size_t i = 0; i < 3; ++i) CHECK(p.value_at(i) == before[i]);
}

TEST_CASE("one adam step from zero state with unit gradient moves by ~lr") {
  Tensor p = Tensor::scalar(0.0, true);
  AdamState state;
  std::vector<double> g{1.0};
  adam_step(p.mutable_values(), g, state, AdamConfig{});
  // bias-corrected mhat = vhat = 1, so the step is lr / (1 + eps)
  CHECK(p.scalar_value() == doctest::Approx(-0.001).epsilon(1e-6));
}

TEST_CASE("adam is deterministic") {
  auto run = []() {
    Tensor p = Tensor::from_values({2}, {0.3, -0.7}, true);
    AdamState state;
    std::vector<double> g{0.25, -1.5};
    for (int i = 0; i < 10; ++i) adam_step(p.mutable_values(), g, state, AdamConfig{});
    return std::vector<double>(p.values().begin(), p.values().end());
  };
  auto a = run();
  auto b = run();
  CHECK(a == b);
}

TEST_CASE("adam rejects non-finite gradients without touching params") {
  Tensor p = Tensor::from_values({2}, {1.0, 2.0}, true);
  AdamState state;
  std::vector<double> g{0.1, std::nan("")};
  CHECK_THROWS_AS(adam_step(p.mutable_values(), g, state, AdamConfig{}), NumericError);
  CHECK(p.value_at(0) == 1.0);
  CHECK(p.value_at(1) == 2.0);
}

TEST_CASE("glorot init respects the fan bound") {
  Rng rng(9);
  Tensor w = Tensor::zeros({6, 4}, true);
  init_glorot(w, 6, 4, rng);
  double limit = std::sqrt(6.0 / 10.0);
  for (double v : w.values()) {
    CHECK(std::fabs(v) <= limit);
  }
}
