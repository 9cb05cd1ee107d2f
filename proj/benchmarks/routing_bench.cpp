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

#include <benchmark/benchmark.h>

#include "sercaps/capsnet.hpp"
#include "sercaps/common.hpp"

namespace {

sercaps::Tensor random_tensor(sercaps::Shape shape, sercaps::Rng& rng,
                              bool requires_grad) {
  sercaps::Tensor t = sercaps::Tensor::zeros(std::move(shape), requires_grad);
  for (double& v : t.mutable_values()) v = rng.uniform(-1, 1);
  return t;
}

// Forward routing at the default desk scale: 126 children, 6 classes.
void BM_RoutingForward(benchmark::State& state) {
  sercaps::Rng rng(1);
  sercaps::Tensor u = random_tensor({126, 8}, rng, false);
  sercaps::Tensor w = random_tensor({126, 6, 16, 8}, rng, false);
  for (auto _ : state) {
    sercaps::Tape tape;
    tape.set_recording(false);
    auto u_hat = sercaps::predict_parents(tape, u, w);
    benchmark::DoNotOptimize(sercaps::route(tape, u_hat, 3));
  }
}
BENCHMARK(BM_RoutingForward)->Unit(benchmark::kMicrosecond);

void BM_RoutingForwardBackward(benchmark::State& state) {
  sercaps::Rng rng(2);
  sercaps::Tensor u = random_tensor({126, 8}, rng, false);
  sercaps::Tensor w = random_tensor({126, 6, 16, 8}, rng, true);
  for (auto _ : state) {
    sercaps::Tape tape;
    auto u_hat = sercaps::predict_parents(tape, u, w);
    sercaps::Tensor v = sercaps::route(tape, u_hat, 3);
    sercaps::Tensor loss = sercaps::margin_loss(tape, v, 0, 0.9, 0.1, 0.5);
    tape.backward(loss);
    benchmark::DoNotOptimize(w.grad().data());
  }
}
BENCHMARK(BM_RoutingForwardBackward)->Unit(benchmark::kMicrosecond);

void BM_Conv2dForward(benchmark::State& state) {
  sercaps::Rng rng(3);
  sercaps::Tensor input = random_tensor({1, 48, 39}, rng, false);
  sercaps::Tensor kernel = random_tensor({8, 1, 5, 5}, rng, false);
  sercaps::Tensor bias = random_tensor({8}, rng, false);
  for (auto _ : state) {
    sercaps::Tape tape;
    tape.set_recording(false);
    benchmark::DoNotOptimize(sercaps::conv2d(tape, input, kernel, bias, 2));
  }
}
BENCHMARK(BM_Conv2dForward)->Unit(benchmark::kMicrosecond);

}  // namespace
