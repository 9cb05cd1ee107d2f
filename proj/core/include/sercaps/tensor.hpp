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

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "sercaps/common.hpp"

namespace sercaps {

using Shape = std::vector<int>;

std::size_t shape_size(const Shape& shape);
std::string shape_str(const Shape& shape);

namespace detail {
struct TensorData {
  Shape shape;
  std::vector<double> values;
  std::vector<double> grad;  // empty until backward touches it
  bool requires_grad = false;
};
}  // namespace detail

/// Dense row-major tensor of 64-bit reals. A Tensor is a cheap value handle
/// onto shared storage; forward results are immutable once created by an op.
/// Every stored forward value is finite by construction: ops that would
/// produce NaN/Inf throw NumericError instead of propagating.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor from_values(Shape shape, std::vector<double> values,
                            bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const { return data_ != nullptr; }
  const Shape& shape() const { return data_->shape; }
  int dim(std::size_t axis) const { return data_->shape[axis]; }
  std::size_t rank() const { return data_->shape.size(); }
  std::size_t size() const { return data_->values.size(); }

  std::span<const double> values() const { return data_->values; }
  double value_at(std::size_t i) const { return data_->values[i]; }
  /// Scalar payload; contract error unless size() == 1.
  double scalar_value() const;

  /// Direct mutation is for parameter initialization and optimizer updates,
  /// before/between tapes; never mutate a tensor that a live tape recorded.
  std::span<double> mutable_values() { return data_->values; }

  bool requires_grad() const { return data_->requires_grad; }
  void set_requires_grad(bool rg) { data_->requires_grad = rg; }

  bool has_grad() const { return !data_->grad.empty(); }
  std::span<const double> grad() const { return data_->grad; }
  std::span<double> mutable_grad() { return data_->grad; }
  /// Allocates (or re-zeroes) the gradient buffer.
  void zero_grad();

  bool same_storage(const Tensor& other) const { return data_ == other.data_; }

 private:
  std::shared_ptr<detail::TensorData> data_;
};

/// Records primitive ops in execution (topological) order. backward() seeds
/// d(loss)/d(loss) = 1 and replays the records once, in reverse. A Tape is
/// single-owner; independent tapes may run concurrently on separate threads.
class Tape {
 public:
  /// Register one primitive: its inputs, its output, and a closure that
  /// accumulates input gradients from the output gradient.
  void record(std::vector<Tensor> inputs, Tensor output,
              std::function<void()> backward);

  /// Populates d(loss)/d(t) for every requires_grad tensor this tape saw.
  /// Tensors recorded but unreachable from the loss end with zero grad.
  void backward(const Tensor& loss);

  void clear() { nodes_.clear(); }
  std::size_t size() const { return nodes_.size(); }

  bool recording() const { return recording_; }
  void set_recording(bool on) { recording_ = on; }

 private:
  struct Node {
    std::vector<Tensor> inputs;
    Tensor output;
    std::function<void()> backward;
  };
  std::vector<Node> nodes_;
  bool recording_ = true;
};

// Elementwise binary ops accept equal shapes or a size-1 (scalar) operand on
// either side; anything else is a dimension error. Broadcasting beyond
// scalar-vs-tensor is deliberately unsupported.
Tensor add(Tape& tape, const Tensor& a, const Tensor& b);
Tensor sub(Tape& tape, const Tensor& a, const Tensor& b);
Tensor mul(Tape& tape, const Tensor& a, const Tensor& b);
Tensor div(Tape& tape, const Tensor& a, const Tensor& b);

Tensor tanh(Tape& tape, const Tensor& x);
Tensor sigmoid(Tape& tape, const Tensor& x);
Tensor relu(Tape& tape, const Tensor& x);
Tensor exp(Tape& tape, const Tensor& x);
Tensor log(Tape& tape, const Tensor& x);  // domain error on x <= 0
Tensor square(Tape& tape, const Tensor& x);
Tensor sqrt(Tape& tape, const Tensor& x);  // domain error on x < 0

/// Standard matrix product of a [m x k] and b [k x n]; gradients
/// dA = dC * B^T and dB = A^T * dC.
Tensor matmul(Tape& tape, const Tensor& a, const Tensor& b);

/// Y = X W + 1 b^T for X [r x d], W [d x h], bias [h]; the fused dense layer.
Tensor affine_rows(Tape& tape, const Tensor& x, const Tensor& w,
                   const Tensor& bias);

Tensor sum(Tape& tape, const Tensor& x);   // -> shape {1}
Tensor mean(Tape& tape, const Tensor& x);  // -> shape {1}

/// Row-wise softmax of x [r x c], numerically stabilized; each output row
/// sums to 1.
Tensor softmax_rows(Tape& tape, const Tensor& x);

/// Euclidean norm of each row of x [r x c] -> [r x 1]. Gradient of a zero
/// row is zero (limit convention).
Tensor row_norms(Tape& tape, const Tensor& x);

Tensor slice_cols(Tape& tape, const Tensor& x, int start, int len);
Tensor concat_cols(Tape& tape, const std::vector<Tensor>& parts);
Tensor reshape(Tape& tape, const Tensor& x, Shape shape);

struct AdamConfig {
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  std::vector<double> m;  // first-moment estimate
  std::vector<double> v;  // second-moment estimate
  long step = 0;
};

/// One bias-corrected adaptive-moment update, in place. The whole update is
/// rejected (params untouched, NumericError) if any gradient is non-finite.
void adam_step(std::span<double> params, std::span<const double> grads,
               AdamState& state, const AdamConfig& cfg);

/// Convenience wrapper stepping a fixed parameter list from their .grad()
/// buffers. Parameters with no grad buffer are treated as zero-gradient.
class AdamOptimizer {
 public:
  AdamOptimizer(std::vector<Tensor> params, AdamConfig cfg);
  void step();
  void zero_grads();
  const std::vector<Tensor>& params() const { return params_; }

 private:
  std::vector<Tensor> params_;
  std::vector<AdamState> states_;
  AdamConfig cfg_;
};

/// Uniform init on +/- sqrt(6 / (fan_in + fan_out)).
void init_glorot(Tensor& t, int fan_in, int fan_out, Rng& rng);

namespace detail {
/// Throws NumericError naming `op` if any value is non-finite.
void check_finite(std::span<const double> values, const char* op);
}  // namespace detail

}  // namespace sercaps
