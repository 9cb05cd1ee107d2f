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

#include "sercaps/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sercaps {

std::size_t shape_size(const Shape& shape) {
  std::size_t n = 1;
  for (int d : shape) {
    if (d <= 0) throw std::invalid_argument("tensor shape dims must be positive");
    n *= static_cast<std::size_t>(d);
  }
  return n;
}

std::string shape_str(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

namespace detail {
void check_finite(std::span<const double> values, const char* op) {
  for (double v : values) {
    if (!std::isfinite(v)) {
      throw NumericError(std::string("op '") + op +
                         "' produced a non-finite value");
    }
  }
}
}  // namespace detail

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  return from_values(shape, std::vector<double>(shape_size(shape), 0.0),
                     requires_grad);
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  return from_values(shape, std::vector<double>(shape_size(shape), value),
                     requires_grad);
}

Tensor Tensor::from_values(Shape shape, std::vector<double> values,
                           bool requires_grad) {
  if (shape_size(shape) != values.size()) {
    throw std::invalid_argument("tensor data length " +
                                std::to_string(values.size()) +
                                " does not match shape " + shape_str(shape));
  }
  Tensor t;
  t.data_ = std::make_shared<detail::TensorData>();
  t.data_->shape = std::move(shape);
  t.data_->values = std::move(values);
  t.data_->requires_grad = requires_grad;
  return t;
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return from_values({1}, {value}, requires_grad);
}

double Tensor::scalar_value() const {
  if (size() != 1) {
    throw std::invalid_argument("scalar_value() on tensor of shape " +
                                shape_str(shape()));
  }
  return data_->values[0];
}

void Tensor::zero_grad() {
  data_->grad.assign(data_->values.size(), 0.0);
}

void Tape::record(std::vector<Tensor> inputs, Tensor output,
                  std::function<void()> backward) {
  if (!recording_) return;
  bool any = false;
  for (const Tensor& t : inputs) any = any || t.requires_grad();
  if (!any) return;
  output.set_requires_grad(true);
  nodes_.push_back(Node{std::move(inputs), std::move(output), std::move(backward)});
}

void Tape::backward(const Tensor& loss) {
  if (!loss.defined() || loss.size() != 1) {
    throw std::invalid_argument("backward() requires a scalar loss");
  }
  // Zero every grad this tape can reach so unreachable-but-trainable tensors
  // end with an all-zero gradient rather than stale or missing buffers.
  for (Node& node : nodes_) {
    if (node.output.requires_grad()) node.output.zero_grad();
    for (Tensor& in : node.inputs) {
      if (in.requires_grad()) in.zero_grad();
    }
  }
  Tensor seed = loss;
  if (seed.requires_grad()) {
    seed.zero_grad();
    seed.mutable_grad()[0] = 1.0;
  }
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    if (it->output.requires_grad() && it->output.has_grad()) it->backward();
  }
}

namespace {

enum class Broadcast { kNone, kLeftScalar, kRightScalar };

Broadcast binary_mode(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() == b.shape()) return Broadcast::kNone;
  if (a.size() == 1) return Broadcast::kLeftScalar;
  if (b.size() == 1) return Broadcast::kRightScalar;
  throw std::invalid_argument(std::string(op) + ": shape mismatch " +
                              shape_str(a.shape()) + " vs " +
                              shape_str(b.shape()));
}

// df(a_i, b_i) -> (out_i, dout/da_i, dout/db_i)
template <typename Fwd, typename DA, typename DB>
Tensor binary_op(Tape& tape, const Tensor& a, const Tensor& b, const char* op,
                 Fwd fwd, DA dfda, DB dfdb) {
  Broadcast mode = binary_mode(a, b, op);
  const Tensor& big = (mode == Broadcast::kLeftScalar) ? b : a;
  std::size_t n = big.size();
  std::vector<double> out(n);
  auto av = a.values();
  auto bv = b.values();
  for (std::size_t i = 0; i < n; ++i) {
    double x = (mode == Broadcast::kLeftScalar) ? av[0] : av[i];
    double y = (mode == Broadcast::kRightScalar) ? bv[0] : bv[i];
    out[i] = fwd(x, y);
  }
  detail::check_finite(out, op);
  Tensor result = Tensor::from_values(big.shape(), std::move(out));
  Tensor ta = a, tb = b;
  tape.record({a, b}, result, [ta, tb, result, mode, dfda, dfdb]() mutable {
    auto og = result.grad();
    auto av = ta.values();
    auto bv = tb.values();
    std::size_t n = og.size();
    if (ta.requires_grad()) {
      auto ag = ta.mutable_grad();
      for (std::size_t i = 0; i < n; ++i) {
        double x = (mode == Broadcast::kLeftScalar) ? av[0] : av[i];
        double y = (mode == Broadcast::kRightScalar) ? bv[0] : bv[i];
        double g = og[i] * dfda(x, y);
        if (mode == Broadcast::kLeftScalar) ag[0] += g; else ag[i] += g;
      }
    }
    if (tb.requires_grad()) {
      auto bg = tb.mutable_grad();
      for (std::size_t i = 0; i < n; ++i) {
        double x = (mode == Broadcast::kLeftScalar) ? av[0] : av[i];
        double y = (mode == Broadcast::kRightScalar) ? bv[0] : bv[i];
        double g = og[i] * dfdb(x, y);
        if (mode == Broadcast::kRightScalar) bg[0] += g; else bg[i] += g;
      }
    }
  });
  return result;
}

// df(x_i) -> out_i given precomputed y_i = f(x_i); dgrad(x_i, y_i) local slope.
template <typename Fwd, typename Dx>
Tensor unary_op(Tape& tape, const Tensor& x, const char* op, Fwd fwd, Dx dfdx) {
  std::size_t n = x.size();
  std::vector<double> out(n);
  auto xv = x.values();
  for (std::size_t i = 0; i < n; ++i) out[i] = fwd(xv[i]);
  detail::check_finite(out, op);
  Tensor result = Tensor::from_values(x.shape(), std::move(out));
  Tensor tx = x;
  tape.record({x}, result, [tx, result, dfdx]() mutable {
    if (!tx.requires_grad()) return;
    auto og = result.grad();
    auto xv = tx.values();
    auto yv = result.values();
    auto xg = tx.mutable_grad();
    for (std::size_t i = 0; i < og.size(); ++i) {
      xg[i] += og[i] * dfdx(xv[i], yv[i]);
    }
  });
  return result;
}

}  // namespace

Tensor add(Tape& tape, const Tensor& a, const Tensor& b) {
  return binary_op(tape, a, b, "add",
                   [](double x, double y) { return x + y; },
                   [](double, double) { return 1.0; },
                   [](double, double) { return 1.0; });
}

Tensor sub(Tape& tape, const Tensor& a, const Tensor& b) {
  return binary_op(tape, a, b, "sub",
                   [](double x, double y) { return x - y; },
                   [](double, double) { return 1.0; },
                   [](double, double) { return -1.0; });
}

Tensor mul(Tape& tape, const Tensor& a, const Tensor& b) {
  return binary_op(tape, a, b, "mul",
                   [](double x, double y) { return x * y; },
                   [](double, double y) { return y; },
                   [](double x, double) { return x; });
}

Tensor div(Tape& tape, const Tensor& a, const Tensor& b) {
  return binary_op(tape, a, b, "div",
                   [](double x, double y) { return x / y; },
                   [](double, double y) { return 1.0 / y; },
                   [](double x, double y) { return -x / (y * y); });
}

Tensor tanh(Tape& tape, const Tensor& x) {
  return unary_op(tape, x, "tanh",
                  [](double v) { return std::tanh(v); },
                  [](double, double y) { return 1.0 - y * y; });
}

Tensor sigmoid(Tape& tape, const Tensor& x) {
  return unary_op(tape, x, "sigmoid",
                  [](double v) { return 1.0 / (1.0 + std::exp(-v)); },
                  [](double, double y) { return y * (1.0 - y); });
}

Tensor relu(Tape& tape, const Tensor& x) {
  return unary_op(tape, x, "relu",
                  [](double v) { return v > 0.0 ? v : 0.0; },
                  [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Tensor exp(Tape& tape, const Tensor& x) {
  return unary_op(tape, x, "exp",
                  [](double v) { return std::exp(v); },
                  [](double, double y) { return y; });
}

Tensor log(Tape& tape, const Tensor& x) {
  for (double v : x.values()) {
    if (v <= 0.0) throw std::domain_error("log of non-positive value");
  }
  return unary_op(tape, x, "log",
                  [](double v) { return std::log(v); },
                  [](double v, double) { return 1.0 / v; });
}

Tensor square(Tape& tape, const Tensor& x) {
  return unary_op(tape, x, "square",
                  [](double v) { return v * v; },
                  [](double v, double) { return 2.0 * v; });
}

Tensor sqrt(Tape& tape, const Tensor& x) {
  for (double v : x.values()) {
    if (v < 0.0) throw std::domain_error("sqrt of negative value");
  }
  return unary_op(tape, x, "sqrt",
                  [](double v) { return std::sqrt(v); },
                  [](double, double y) { return y > 0.0 ? 0.5 / y : 0.0; });
}

Tensor matmul(Tape& tape, const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
    throw std::invalid_argument("matmul: incompatible shapes " +
                                shape_str(a.shape()) + " x " +
                                shape_str(b.shape()));
  }
  const int m = a.dim(0), k = a.dim(1), n = b.dim(1);
  std::vector<double> out(static_cast<std::size_t>(m) * n, 0.0);
  auto av = a.values();
  auto bv = b.values();
  for (int i = 0; i < m; ++i) {
    for (int p = 0; p < k; ++p) {
      double aip = av[i * k + p];
      const double* brow = &bv[static_cast<std::size_t>(p) * n];
      double* orow = &out[static_cast<std::size_t>(i) * n];
      for (int j = 0; j < n; ++j) orow[j] += aip * brow[j];
    }
  }
  detail::check_finite(out, "matmul");
  Tensor result = Tensor::from_values({m, n}, std::move(out));
  Tensor ta = a, tb = b;
  tape.record({a, b}, result, [ta, tb, result, m, k, n]() mutable {
    auto og = result.grad();
    auto av = ta.values();
    auto bv = tb.values();
    if (ta.requires_grad()) {
      auto ag = ta.mutable_grad();  // dA = dC * B^T
      for (int i = 0; i < m; ++i) {
        for (int j = 0; j < n; ++j) {
          double gij = og[i * n + j];
          for (int p = 0; p < k; ++p) ag[i * k + p] += gij * bv[p * n + j];
        }
      }
    }
    if (tb.requires_grad()) {
      auto bg = tb.mutable_grad();  // dB = A^T * dC
      for (int i = 0; i < m; ++i) {
        for (int p = 0; p < k; ++p) {
          double aip = av[i * k + p];
          for (int j = 0; j < n; ++j) bg[p * n + j] += aip * og[i * n + j];
        }
      }
    }
  });
  return result;
}

Tensor affine_rows(Tape& tape, const Tensor& x, const Tensor& w,
                   const Tensor& bias) {
  if (x.rank() != 2 || w.rank() != 2 || x.dim(1) != w.dim(0) ||
      bias.size() != static_cast<std::size_t>(w.dim(1))) {
    throw std::invalid_argument("affine_rows: incompatible shapes");
  }
  const int r = x.dim(0), d = x.dim(1), h = w.dim(1);
  std::vector<double> out(static_cast<std::size_t>(r) * h);
  auto xv = x.values();
  auto wv = w.values();
  auto bv = bias.values();
  for (int i = 0; i < r; ++i) {
    double* orow = &out[static_cast<std::size_t>(i) * h];
    for (int j = 0; j < h; ++j) orow[j] = bv[j];
    for (int p = 0; p < d; ++p) {
      double xip = xv[i * d + p];
      const double* wrow = &wv[static_cast<std::size_t>(p) * h];
      for (int j = 0; j < h; ++j) orow[j] += xip * wrow[j];
    }
  }
  detail::check_finite(out, "affine_rows");
  Tensor result = Tensor::from_values({r, h}, std::move(out));
  Tensor tx = x, tw = w, tb = bias;
  tape.record({x, w, bias}, result, [tx, tw, tb, result, r, d, h]() mutable {
    auto og = result.grad();
    auto xv = tx.values();
    auto wv = tw.values();
    if (tx.requires_grad()) {
      auto xg = tx.mutable_grad();
      for (int i = 0; i < r; ++i)
        for (int j = 0; j < h; ++j) {
          double gij = og[i * h + j];
          for (int p = 0; p < d; ++p) xg[i * d + p] += gij * wv[p * h + j];
        }
    }
    if (tw.requires_grad()) {
      auto wg = tw.mutable_grad();
      for (int i = 0; i < r; ++i)
        for (int p = 0; p < d; ++p) {
          double xip = xv[i * d + p];
          for (int j = 0; j < h; ++j) wg[p * h + j] += xip * og[i * h + j];
        }
    }
    if (tb.requires_grad()) {
      auto bg = tb.mutable_grad();
      for (int i = 0; i < r; ++i)
        for (int j = 0; j < h; ++j) bg[j] += og[i * h + j];
    }
  });
  return result;
}

Tensor sum(Tape& tape, const Tensor& x) {
  double total = 0.0;
  for (double v : x.values()) total += v;
  std::vector<double> out{total};
  detail::check_finite(out, "sum");
  Tensor result = Tensor::from_values({1}, std::move(out));
  Tensor tx = x;
  tape.record({x}, result, [tx, result]() mutable {
    if (!tx.requires_grad()) return;
    double g = result.grad()[0];
    auto xg = tx.mutable_grad();
    for (double& v : xg) v += g;
  });
  return result;
}

Tensor mean(Tape& tape, const Tensor& x) {
  double total = 0.0;
  for (double v : x.values()) total += v;
  double inv = 1.0 / static_cast<double>(x.size());
  std::vector<double> out{total * inv};
  detail::check_finite(out, "mean");
  Tensor result = Tensor::from_values({1}, std::move(out));
  Tensor tx = x;
  tape.record({x}, result, [tx, result, inv]() mutable {
    if (!tx.requires_grad()) return;
    double g = result.grad()[0] * inv;
    auto xg = tx.mutable_grad();
    for (double& v : xg) v += g;
  });
  return result;
}

Tensor softmax_rows(Tape& tape, const Tensor& x) {
  if (x.rank() != 2) throw std::invalid_argument("softmax_rows: rank-2 input required");
  const int r = x.dim(0), c = x.dim(1);
  std::vector<double> out(x.size());
  auto xv = x.values();
  for (int i = 0; i < r; ++i) {
    const double* row = &xv[static_cast<std::size_t>(i) * c];
    double mx = row[0];
    for (int j = 1; j < c; ++j) mx = std::max(mx, row[j]);
    double denom = 0.0;
    for (int j = 0; j < c; ++j) denom += std::exp(row[j] - mx);
    for (int j = 0; j < c; ++j) out[i * c + j] = std::exp(row[j] - mx) / denom;
  }
  detail::check_finite(out, "softmax_rows");
  Tensor result = Tensor::from_values({r, c}, std::move(out));
  Tensor tx = x;
  tape.record({x}, result, [tx, result, r, c]() mutable {
    if (!tx.requires_grad()) return;
    auto og = result.grad();
    auto yv = result.values();
    auto xg = tx.mutable_grad();
    for (int i = 0; i < r; ++i) {
      double dot = 0.0;
      for (int j = 0; j < c; ++j) dot += og[i * c + j] * yv[i * c + j];
      for (int j = 0; j < c; ++j)
        xg[i * c + j] += yv[i * c + j] * (og[i * c + j] - dot);
    }
  });
  return result;
}

Tensor row_norms(Tape& tape, const Tensor& x) {
  if (x.rank() != 2) throw std::invalid_argument("row_norms: rank-2 input required");
  const int r = x.dim(0), c = x.dim(1);
  std::vector<double> out(r);
  auto xv = x.values();
  for (int i = 0; i < r; ++i) {
    double s = 0.0;
    for (int j = 0; j < c; ++j) s += xv[i * c + j] * xv[i * c + j];
    out[i] = std::sqrt(s);
  }
  detail::check_finite(out, "row_norms");
  Tensor result = Tensor::from_values({r, 1}, std::move(out));
  Tensor tx = x;
  tape.record({x}, result, [tx, result, r, c]() mutable {
    if (!tx.requires_grad()) return;
    auto og = result.grad();
    auto yv = result.values();
    auto xv = tx.values();
    auto xg = tx.mutable_grad();
    for (int i = 0; i < r; ++i) {
      if (yv[i] == 0.0) continue;
      double g = og[i] / yv[i];
      for (int j = 0; j < c; ++j) xg[i * c + j] += g * xv[i * c + j];
    }
  });
  return result;
}

Tensor slice_cols(Tape& tape, const Tensor& x, int start, int len) {
  if (x.rank() != 2) throw std::invalid_argument("slice_cols: rank-2 input required");
  const int r = x.dim(0), c = x.dim(1);
  if (start < 0 || len <= 0 || start + len > c) {
    throw std::invalid_argument("slice_cols: range out of bounds");
  }
  std::vector<double> out(static_cast<std::size_t>(r) * len);
  auto xv = x.values();
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < len; ++j) out[i * len + j] = xv[i * c + start + j];
  Tensor result = Tensor::from_values({r, len}, std::move(out));
  Tensor tx = x;
  tape.record({x}, result, [tx, result, r, c, start, len]() mutable {
    if (!tx.requires_grad()) return;
    auto og = result.grad();
    auto xg = tx.mutable_grad();
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < len; ++j) xg[i * c + start + j] += og[i * len + j];
  });
  return result;
}

Tensor concat_cols(Tape& tape, const std::vector<Tensor>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_cols: no inputs");
  const int r = parts[0].dim(0);
  int total = 0;
  for (const Tensor& p : parts) {
    if (p.rank() != 2 || p.dim(0) != r) {
      throw std::invalid_argument("concat_cols: row counts must agree");
    }
    total += p.dim(1);
  }
  std::vector<double> out(static_cast<std::size_t>(r) * total);
  int off = 0;
  for (const Tensor& p : parts) {
    const int c = p.dim(1);
    auto pv = p.values();
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < c; ++j) out[i * total + off + j] = pv[i * c + j];
    off += c;
  }
  Tensor result = Tensor::from_values({r, total}, std::move(out));
  std::vector<Tensor> inputs = parts;
  tape.record(inputs, result, [inputs, result, r, total]() mutable {
    auto og = result.grad();
    int off = 0;
    for (Tensor& p : inputs) {
      const int c = p.dim(1);
      if (p.requires_grad()) {
        auto pg = p.mutable_grad();
        for (int i = 0; i < r; ++i)
          for (int j = 0; j < c; ++j) pg[i * c + j] += og[i * total + off + j];
      }
      off += c;
    }
  });
  return result;
}

Tensor reshape(Tape& tape, const Tensor& x, Shape shape) {
  if (shape_size(shape) != x.size()) {
    throw std::invalid_argument("reshape: size mismatch " + shape_str(x.shape()) +
                                " -> " + shape_str(shape));
  }
  std::vector<double> out(x.values().begin(), x.values().end());
  Tensor result = Tensor::from_values(std::move(shape), std::move(out));
  Tensor tx = x;
  tape.record({x}, result, [tx, result]() mutable {
    if (!tx.requires_grad()) return;
    auto og = result.grad();
    auto xg = tx.mutable_grad();
    for (std::size_t i = 0; i < og.size(); ++i) xg[i] += og[i];
  });
  return result;
}

void adam_step(std::span<double> params, std::span<const double> grads,
               AdamState& state, const AdamConfig& cfg) {
  if (params.size() != grads.size()) {
    throw std::invalid_argument("adam_step: param/grad size mismatch");
  }
  for (double g : grads) {
    if (!std::isfinite(g)) {
      throw NumericError("adam_step: non-finite gradient, update rejected");
    }
  }
  if (state.m.size() != params.size()) {
    state.m.assign(params.size(), 0.0);
    state.v.assign(params.size(), 0.0);
    state.step = 0;
  }
  ++state.step;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    double g = grads[i];
    state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * g;
    state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * g * g;
    double mhat = state.m[i] / bc1;
    double vhat = state.v[i] / bc2;
    params[i] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.epsilon);
  }
}

AdamOptimizer::AdamOptimizer(std::vector<Tensor> params, AdamConfig cfg)
    : params_(std::move(params)), states_(params_.size()), cfg_(cfg) {}

void AdamOptimizer::step() {
  static const std::vector<double> kEmpty;
  // Validate every gradient before touching any parameter, so a rejected
  // update leaves all parameters unchanged.
  for (Tensor& p : params_) {
    if (!p.has_grad()) continue;
    for (double g : p.grad()) {
      if (!std::isfinite(g)) {
        throw NumericError("adam_step: non-finite gradient, update rejected");
      }
    }
  }
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Tensor& p = params_[i];
    if (!p.has_grad()) p.zero_grad();
    adam_step(p.mutable_values(), p.grad(), states_[i], cfg_);
  }
}

void AdamOptimizer::zero_grads() {
  for (Tensor& p : params_) p.zero_grad();
}

void init_glorot(Tensor& t, int fan_in, int fan_out, Rng& rng) {
  double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (double& v : t.mutable_values()) v = rng.uniform(-limit, limit);
}

}  // namespace sercaps
