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

#include "sercaps/capsnet.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sercaps {

void CapsNetConfig::validate() const {
  if (input_frames < 1 || input_dims < 1) {
    throw std::invalid_argument("capsnet: input map must be non-empty");
  }
  if (conv1.out_channels < 1 || conv2.out_channels < 1 || conv1.kernel < 1 ||
      conv2.kernel < 1 || conv1.stride < 1 || conv2.stride < 1) {
    throw std::invalid_argument("capsnet: conv specs must be positive");
  }
  if (capsule_dim < 1 || class_capsule_dim < 1 || num_classes < 2) {
    throw std::invalid_argument("capsnet: capsule dims must be >= 1 and classes >= 2");
  }
  if (routing_iters < 1) throw std::invalid_argument("capsnet: routing_iters must be >= 1");
  if (decoder_hidden1 < 1 || decoder_hidden2 < 1 || first_stage_width < 1) {
    throw std::invalid_argument("capsnet: layer widths must be positive");
  }
  if (!(0.0 < margin_neg && margin_neg < margin_pos && margin_pos < 1.0)) {
    throw std::invalid_argument("capsnet: margins must satisfy 0 < m- < m+ < 1");
  }
  if (conv2.out_channels % capsule_dim != 0) {
    throw std::invalid_argument("capsnet: conv2 channels must be divisible by capsule_dim");
  }
  derive_dims(*this);
}

CapsNetDims derive_dims(const CapsNetConfig& cfg) {
  auto out_size = [](int in, int kernel, int stride) {
    if (in < kernel) {
      throw std::invalid_argument("capsnet: conv kernel larger than its input");
    }
    return (in - kernel) / stride + 1;
  };
  CapsNetDims d;
  d.conv1_h = out_size(cfg.input_frames, cfg.conv1.kernel, cfg.conv1.stride);
  d.conv1_w = out_size(cfg.input_dims, cfg.conv1.kernel, cfg.conv1.stride);
  d.conv2_h = out_size(d.conv1_h, cfg.conv2.kernel, cfg.conv2.stride);
  d.conv2_w = out_size(d.conv1_w, cfg.conv2.kernel, cfg.conv2.stride);
  d.flatten_width = cfg.conv2.out_channels * d.conv2_h * d.conv2_w;
  d.num_primary_capsules =
      (cfg.conv2.out_channels / cfg.capsule_dim) * d.conv2_h * d.conv2_w;
  return d;
}

std::string width_warning(const CapsNetConfig& cfg) {
  CapsNetDims d = derive_dims(cfg);
  if (d.flatten_width * 2 < cfg.first_stage_width ||
      d.flatten_width > cfg.first_stage_width * 2) {
    return "first-stage width " + std::to_string(d.flatten_width) +
           " (conv2 activations) deviates more than 2x from the configured "
           "budget of " + std::to_string(cfg.first_stage_width) + " neurons";
  }
  return {};
}

Tensor squash(Tape& tape, const Tensor& s) {
  Tensor rows = s;
  bool was_vector = s.rank() == 1;
  const int r = was_vector ? 1 : s.dim(0);
  const int c = was_vector ? static_cast<int>(s.size()) : s.dim(1);
  std::vector<double> out(s.size());
  auto sv = s.values();
  for (int i = 0; i < r; ++i) {
    double sq = 0.0;
    for (int j = 0; j < c; ++j) sq += sv[i * c + j] * sv[i * c + j];
    double norm = std::sqrt(sq);
    double scale = norm > 0.0 ? norm / (1.0 + sq) : 0.0;
    for (int j = 0; j < c; ++j) out[i * c + j] = scale * sv[i * c + j];
  }
  detail::check_finite(out, "squash");
  Tensor result = Tensor::from_values(s.shape(), std::move(out));
  Tensor ts = s;
  tape.record({s}, result, [ts, result, r, c]() mutable {
    if (!ts.requires_grad()) return;
    auto og = result.grad();
    auto sv = ts.values();
    auto sg = ts.mutable_grad();
    for (int i = 0; i < r; ++i) {
      double sq = 0.0;
      for (int j = 0; j < c; ++j) sq += sv[i * c + j] * sv[i * c + j];
      double norm = std::sqrt(sq);
      if (norm == 0.0) continue;  // squash has zero slope at the origin
      // v = a(|s|) s with a = |s| / (1 + |s|^2); da/d|s| = (1-|s|^2)/(1+|s|^2)^2
      double a = norm / (1.0 + sq);
      double da = (1.0 - sq) / ((1.0 + sq) * (1.0 + sq));
      double dot = 0.0;
      for (int j = 0; j < c; ++j) dot += og[i * c + j] * sv[i * c + j];
      for (int j = 0; j < c; ++j) {
        sg[i * c + j] += a * og[i * c + j] + da * (dot / norm) * sv[i * c + j];
      }
    }
  });
  return result;
}

Tensor predict_parents(Tape& tape, const Tensor& u, const Tensor& w) {
  if (u.rank() != 2 || w.rank() != 4 || w.dim(0) != u.dim(0) || w.dim(3) != u.dim(1)) {
    throw std::invalid_argument("predict_parents: u " + shape_str(u.shape()) +
                                " and W " + shape_str(w.shape()) + " do not agree");
  }
  const int children = u.dim(0), n = u.dim(1);
  const int parents = w.dim(1), pd = w.dim(2);
  std::vector<double> out(static_cast<std::size_t>(children) * parents * pd, 0.0);
  auto uv = u.values();
  auto wv = w.values();
  for (int c = 0; c < children; ++c) {
    for (int p = 0; p < parents; ++p) {
      const double* wm = &wv[((static_cast<std::size_t>(c) * parents + p) * pd) * n];
      double* dst = &out[(static_cast<std::size_t>(c) * parents + p) * pd];
      for (int a = 0; a < pd; ++a) {
        double acc = 0.0;
        for (int b = 0; b < n; ++b) acc += wm[a * n + b] * uv[c * n + b];
        dst[a] = acc;
      }
    }
  }
  detail::check_finite(out, "predict_parents");
  Tensor result = Tensor::from_values({children, parents, pd}, std::move(out));
  Tensor tu = u, tw = w;
  tape.record({u, w}, result, [tu, tw, result, children, parents, pd, n]() mutable {
    auto og = result.grad();
    auto uv = tu.values();
    auto wv = tw.values();
    for (int c = 0; c < children; ++c) {
      for (int p = 0; p < parents; ++p) {
        std::size_t wbase = (static_cast<std::size_t>(c) * parents + p) * pd * n;
        std::size_t obase = (static_cast<std::size_t>(c) * parents + p) * pd;
        if (tw.requires_grad()) {
          auto wg = tw.mutable_grad();
          for (int a = 0; a < pd; ++a)
            for (int b = 0; b < n; ++b)
              wg[wbase + a * n + b] += og[obase + a] * uv[c * n + b];
        }
        if (tu.requires_grad()) {
          auto ug = tu.mutable_grad();
          for (int a = 0; a < pd; ++a)
            for (int b = 0; b < n; ++b)
              ug[c * n + b] += og[obase + a] * wv[wbase + a * n + b];
        }
      }
    }
  });
  return result;
}

namespace {

// s[p] = sum_c coup[c][p] * u_hat[c][p]
Tensor routing_weighted_sum(Tape& tape, const Tensor& coup, const Tensor& u_hat) {
  const int children = u_hat.dim(0), parents = u_hat.dim(1), pd = u_hat.dim(2);
  std::vector<double> out(static_cast<std::size_t>(parents) * pd, 0.0);
  auto cv = coup.values();
  auto uv = u_hat.values();
  for (int c = 0; c < children; ++c)
    for (int p = 0; p < parents; ++p) {
      double w = cv[c * parents + p];
      const double* src = &uv[(static_cast<std::size_t>(c) * parents + p) * pd];
      for (int d = 0; d < pd; ++d) out[p * pd + d] += w * src[d];
    }
  detail::check_finite(out, "routing_weighted_sum");
  Tensor result = Tensor::from_values({parents, pd}, std::move(out));
  Tensor tc = coup, tu = u_hat;
  tape.record({coup, u_hat}, result, [tc, tu, result, children, parents, pd]() mutable {
    auto og = result.grad();
    auto cv = tc.values();
    auto uv = tu.values();
    for (int c = 0; c < children; ++c)
      for (int p = 0; p < parents; ++p) {
        std::size_t ubase = (static_cast<std::size_t>(c) * parents + p) * pd;
        if (tc.requires_grad()) {
          double acc = 0.0;
          for (int d = 0; d < pd; ++d) acc += og[p * pd + d] * uv[ubase + d];
          tc.mutable_grad()[c * parents + p] += acc;
        }
        if (tu.requires_grad()) {
          auto ug = tu.mutable_grad();
          double w = cv[c * parents + p];
          for (int d = 0; d < pd; ++d) ug[ubase + d] += w * og[p * pd + d];
        }
      }
  });
  return result;
}

// a[c][p] = u_hat[c][p] . v[p]
Tensor agreement(Tape& tape, const Tensor& u_hat, const Tensor& v) {
  const int children = u_hat.dim(0), parents = u_hat.dim(1), pd = u_hat.dim(2);
  std::vector<double> out(static_cast<std::size_t>(children) * parents, 0.0);
  auto uv = u_hat.values();
  auto vv = v.values();
  for (int c = 0; c < children; ++c)
    for (int p = 0; p < parents; ++p) {
      const double* src = &uv[(static_cast<std::size_t>(c) * parents + p) * pd];
      double acc = 0.0;
      for (int d = 0; d < pd; ++d) acc += src[d] * vv[p * pd + d];
      out[c * parents + p] = acc;
    }
  detail::check_finite(out, "agreement");
  Tensor result = Tensor::from_values({children, parents}, std::move(out));
  Tensor tu = u_hat, tv = v;
  tape.record({u_hat, v}, result, [tu, tv, result, children, parents, pd]() mutable {
    auto og = result.grad();
    auto uv = tu.values();
    auto vv = tv.values();
    for (int c = 0; c < children; ++c)
      for (int p = 0; p < parents; ++p) {
        double g = og[c * parents + p];
        std::size_t ubase = (static_cast<std::size_t>(c) * parents + p) * pd;
        if (tu.requires_grad()) {
          auto ug = tu.mutable_grad();
          for (int d = 0; d < pd; ++d) ug[ubase + d] += g * vv[p * pd + d];
        }
        if (tv.requires_grad()) {
          auto vg = tv.mutable_grad();
          for (int d = 0; d < pd; ++d) vg[p * pd + d] += g * uv[ubase + d];
        }
      }
  });
  return result;
}

std::vector<double> tensor_values(const Tensor& t) {
  return {t.values().begin(), t.values().end()};
}

}  // namespace

Tensor route(Tape& tape, const Tensor& u_hat, int iters, RoutingState* state,
             std::vector<RoutingIteration>* trace) {
  if (u_hat.rank() != 3) {
    throw std::invalid_argument("route: u_hat must be children x parents x dim");
  }
  if (iters < 1) throw std::invalid_argument("route: iters must be >= 1");
  const int children = u_hat.dim(0), parents = u_hat.dim(1);
  Tensor b = Tensor::zeros({children, parents});
  Tensor v, c;
  for (int it = 0; it < iters; ++it) {
    c = softmax_rows(tape, b);
    Tensor s = routing_weighted_sum(tape, c, u_hat);
    v = squash(tape, s);
    if (trace) {
      trace->push_back(RoutingIteration{tensor_values(b), tensor_values(c),
                                        tensor_values(s), tensor_values(v)});
    }
    if (it + 1 < iters) {
      b = add(tape, b, agreement(tape, u_hat, v));
    }
  }
  if (state) {
    state->logits = tensor_values(b);
    state->couplings = tensor_values(c);
  }
  return v;
}

std::pair<int, std::vector<double>> classify(const Tensor& class_caps) {
  if (class_caps.rank() != 2) {
    throw std::invalid_argument("classify: class capsules must be K x dim");
  }
  const int k = class_caps.dim(0), d = class_caps.dim(1);
  std::vector<double> scores(k, 0.0);
  auto vv = class_caps.values();
  for (int i = 0; i < k; ++i) {
    double sq = 0.0;
    for (int j = 0; j < d; ++j) sq += vv[i * d + j] * vv[i * d + j];
    scores[i] = std::sqrt(sq);
  }
  int best = 0;
  for (int i = 1; i < k; ++i) {
    if (scores[i] > scores[best]) best = i;
  }
  return {best, std::move(scores)};
}

Tensor margin_loss(Tape& tape, const Tensor& class_caps, int true_class,
                   double m_pos, double m_neg, double lambda) {
  if (!(0.0 < m_neg && m_neg < m_pos && m_pos < 1.0)) {
    throw std::invalid_argument("margin_loss: margins must satisfy 0 < m- < m+ < 1");
  }
  const int k = class_caps.dim(0);
  if (true_class < 0 || true_class >= k) {
    throw std::invalid_argument("margin_loss: class index out of range");
  }
  Tensor norms = row_norms(tape, class_caps);  // {K, 1}
  Tensor pos_term =
      square(tape, relu(tape, sub(tape, Tensor::full({k, 1}, m_pos), norms)));
  Tensor neg_term =
      square(tape, relu(tape, sub(tape, norms, Tensor::full({k, 1}, m_neg))));
  Tensor t_mask = Tensor::zeros({k, 1});
  t_mask.mutable_values()[true_class] = 1.0;
  Tensor not_t = Tensor::zeros({k, 1});
  for (int i = 0; i < k; ++i) {
    if (i != true_class) not_t.mutable_values()[i] = lambda;
  }
  return sum(tape, add(tape, mul(tape, t_mask, pos_term), mul(tape, not_t, neg_term)));
}

Tensor conv2d(Tape& tape, const Tensor& input, const Tensor& kernel,
              const Tensor& bias, int stride) {
  if (input.rank() != 3 || kernel.rank() != 4 || kernel.dim(1) != input.dim(0) ||
      bias.size() != static_cast<std::size_t>(kernel.dim(0))) {
    throw std::invalid_argument("conv2d: incompatible shapes");
  }
  if (stride < 1) throw std::invalid_argument("conv2d: stride must be >= 1");
  const int cin = input.dim(0), h = input.dim(1), w = input.dim(2);
  const int cout = kernel.dim(0), kh = kernel.dim(2), kw = kernel.dim(3);
  if (h < kh || w < kw) throw std::invalid_argument("conv2d: kernel larger than input");
  const int oh = (h - kh) / stride + 1;
  const int ow = (w - kw) / stride + 1;
  std::vector<double> out(static_cast<std::size_t>(cout) * oh * ow);
  auto iv = input.values();
  auto kv = kernel.values();
  auto bv = bias.values();
  for (int co = 0; co < cout; ++co) {
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox) {
        double acc = bv[co];
        for (int ci = 0; ci < cin; ++ci) {
          const double* irow = &iv[(static_cast<std::size_t>(ci) * h + oy * stride) * w];
          const double* krow = &kv[((static_cast<std::size_t>(co) * cin + ci) * kh) * kw];
          for (int ky = 0; ky < kh; ++ky) {
            const double* ip = irow + static_cast<std::size_t>(ky) * w + ox * stride;
            const double* kp = krow + static_cast<std::size_t>(ky) * kw;
            for (int kx = 0; kx < kw; ++kx) acc += ip[kx] * kp[kx];
          }
        }
        out[(static_cast<std::size_t>(co) * oh + oy) * ow + ox] = acc;
      }
    }
  }
  detail::check_finite(out, "conv2d");
  Tensor result = Tensor::from_values({cout, oh, ow}, std::move(out));
  Tensor ti = input, tk = kernel, tb = bias;
  tape.record({input, kernel, bias}, result,
              [ti, tk, tb, result, cin, h, w, cout, kh, kw, oh, ow, stride]() mutable {
    auto og = result.grad();
    auto iv = ti.values();
    auto kv = tk.values();
    for (int co = 0; co < cout; ++co) {
      for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox) {
          double g = og[(static_cast<std::size_t>(co) * oh + oy) * ow + ox];
          if (tb.requires_grad()) tb.mutable_grad()[co] += g;
          for (int ci = 0; ci < cin; ++ci) {
            std::size_t kbase = ((static_cast<std::size_t>(co) * cin + ci) * kh) * kw;
            std::size_t ibase = (static_cast<std::size_t>(ci) * h + oy * stride) * w +
                                static_cast<std::size_t>(ox) * stride;
            for (int ky = 0; ky < kh; ++ky) {
              for (int kx = 0; kx < kw; ++kx) {
                std::size_t ii = ibase + static_cast<std::size_t>(ky) * w + kx;
                if (tk.requires_grad()) tk.mutable_grad()[kbase + ky * kw + kx] += g * iv[ii];
                if (ti.requires_grad()) ti.mutable_grad()[ii] += g * kv[kbase + ky * kw + kx];
              }
            }
          }
        }
      }
    }
  });
  return result;
}

Tensor primary_capsules(Tape& tape, const Tensor& conv_out, int capsule_dim) {
  if (conv_out.rank() != 3) {
    throw std::invalid_argument("primary_capsules: conv output must be c x h x w");
  }
  const int channels = conv_out.dim(0), h = conv_out.dim(1), w = conv_out.dim(2);
  if (capsule_dim < 1 || channels % capsule_dim != 0) {
    throw std::invalid_argument("primary_capsules: channels not divisible by capsule dim");
  }
  const int groups = channels / capsule_dim;
  const int positions = h * w;
  const int caps = groups * positions;
  std::vector<double> out(static_cast<std::size_t>(caps) * capsule_dim);
  auto cv = conv_out.values();
  for (int g = 0; g < groups; ++g)
    for (int pos = 0; pos < positions; ++pos)
      for (int i = 0; i < capsule_dim; ++i) {
        out[(static_cast<std::size_t>(g) * positions + pos) * capsule_dim + i] =
            cv[(static_cast<std::size_t>(g) * capsule_dim + i) * positions + pos];
      }
  Tensor result = Tensor::from_values({caps, capsule_dim}, std::move(out));
  Tensor tc = conv_out;
  tape.record({conv_out}, result, [tc, result, groups, positions, capsule_dim]() mutable {
    if (!tc.requires_grad()) return;
    auto og = result.grad();
    auto cg = tc.mutable_grad();
    for (int g = 0; g < groups; ++g)
      for (int pos = 0; pos < positions; ++pos)
        for (int i = 0; i < capsule_dim; ++i) {
          cg[(static_cast<std::size_t>(g) * capsule_dim + i) * positions + pos] +=
              og[(static_cast<std::size_t>(g) * positions + pos) * capsule_dim + i];
        }
  });
  return result;
}

CapsNet::CapsNet(const CapsNetConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
  cfg_.validate();
  dims_ = derive_dims(cfg_);
  Rng rng = Rng::derive(seed, "capsnet-init");
  auto glorot = [&rng](Shape shape, int fan_in, int fan_out) {
    Tensor t = Tensor::zeros(std::move(shape), true);
    init_glorot(t, fan_in, fan_out, rng);
    return t;
  };
  const int k1 = cfg_.conv1.kernel, k2 = cfg_.conv2.kernel;
  params_.conv1_kernel = glorot({cfg_.conv1.out_channels, 1, k1, k1}, k1 * k1,
                                cfg_.conv1.out_channels);
  params_.conv1_bias = Tensor::zeros({cfg_.conv1.out_channels}, true);
  params_.conv2_kernel =
      glorot({cfg_.conv2.out_channels, cfg_.conv1.out_channels, k2, k2},
             k2 * k2 * cfg_.conv1.out_channels, cfg_.conv2.out_channels);
  params_.conv2_bias = Tensor::zeros({cfg_.conv2.out_channels}, true);
  params_.routing_weights =
      glorot({dims_.num_primary_capsules, cfg_.num_classes, cfg_.class_capsule_dim,
              cfg_.capsule_dim},
             cfg_.capsule_dim, cfg_.class_capsule_dim);
  const int dec_in = cfg_.num_classes * cfg_.class_capsule_dim;
  params_.decoder_w1 = glorot({dec_in, cfg_.decoder_hidden1}, dec_in, cfg_.decoder_hidden1);
  params_.decoder_b1 = Tensor::zeros({cfg_.decoder_hidden1}, true);
  params_.decoder_w2 = glorot({cfg_.decoder_hidden1, cfg_.decoder_hidden2},
                              cfg_.decoder_hidden1, cfg_.decoder_hidden2);
  params_.decoder_b2 = Tensor::zeros({cfg_.decoder_hidden2}, true);
  const int recon_dim = cfg_.decoder_reconstructs_map
                            ? cfg_.input_frames * cfg_.input_dims
                            : cfg_.input_dims;
  params_.decoder_w3 = glorot({cfg_.decoder_hidden2, recon_dim},
                              cfg_.decoder_hidden2, recon_dim);
  params_.decoder_b3 = Tensor::zeros({recon_dim}, true);
  params_.head_w = glorot({dims_.flatten_width, cfg_.num_classes}, dims_.flatten_width,
                          cfg_.num_classes);
  params_.head_b = Tensor::zeros({cfg_.num_classes}, true);
}

std::vector<Tensor> CapsNet::trainable() const {
  if (cfg_.cnn_ablation) {
    return {params_.conv1_kernel, params_.conv1_bias, params_.conv2_kernel,
            params_.conv2_bias, params_.head_w, params_.head_b};
  }
  return {params_.conv1_kernel, params_.conv1_bias, params_.conv2_kernel,
          params_.conv2_bias,   params_.routing_weights,
          params_.decoder_w1,   params_.decoder_b1,
          params_.decoder_w2,   params_.decoder_b2,
          params_.decoder_w3,   params_.decoder_b3};
}

CapsNet::Forward CapsNet::forward(Tape& tape, const Tensor& input,
                                  const CompressionMask* mask) const {
  if (input.rank() != 2 || input.dim(0) != cfg_.input_frames ||
      input.dim(1) != cfg_.input_dims) {
    throw std::invalid_argument("capsnet: input map must be " +
                                std::to_string(cfg_.input_frames) + "x" +
                                std::to_string(cfg_.input_dims) + ", got " +
                                shape_str(input.shape()));
  }
  Forward fwd;
  // Frame-mean of the input map, the reconstruction target.
  Tensor pooled = Tensor::zeros({1, cfg_.input_dims});
  {
    auto pv = pooled.mutable_values();
    auto iv = input.values();
    for (int t = 0; t < cfg_.input_frames; ++t)
      for (int d = 0; d < cfg_.input_dims; ++d) pv[d] += iv[t * cfg_.input_dims + d];
    for (int d = 0; d < cfg_.input_dims; ++d) pv[d] /= cfg_.input_frames;
  }
  fwd.pooled_input = pooled;
  fwd.input = input;

  Tensor map = reshape(tape, input, {1, cfg_.input_frames, cfg_.input_dims});
  Tensor a1 = relu(tape, conv2d(tape, map, params_.conv1_kernel, params_.conv1_bias,
                                cfg_.conv1.stride));
  Tensor a2 = conv2d(tape, a1, params_.conv2_kernel, params_.conv2_bias,
                     cfg_.conv2.stride);
  if (cfg_.cnn_ablation) {
    Tensor flat = reshape(tape, relu(tape, a2), {1, dims_.flatten_width});
    fwd.logits = affine_rows(tape, flat, params_.head_w, params_.head_b);
    return fwd;
  }
  Tensor u = squash(tape, primary_capsules(tape, a2, cfg_.capsule_dim));
  if (mask != nullptr && !mask->d.empty()) {
    u = apply_mask(tape, u, *mask);
  }
  Tensor u_hat = predict_parents(tape, u, params_.routing_weights);
  fwd.class_caps = route(tape, u_hat, cfg_.routing_iters);
  return fwd;
}

Tensor CapsNet::decode(Tape& tape, const Tensor& class_caps, int mask_class) const {
  const int k = cfg_.num_classes, pd = cfg_.class_capsule_dim;
  Tensor row_mask = Tensor::zeros({k, pd});
  {
    auto mv = row_mask.mutable_values();
    for (int j = 0; j < pd; ++j) mv[static_cast<std::size_t>(mask_class) * pd + j] = 1.0;
  }
  Tensor masked = reshape(tape, mul(tape, class_caps, row_mask), {1, k * pd});
  Tensor h1 = relu(tape, affine_rows(tape, masked, params_.decoder_w1, params_.decoder_b1));
  Tensor h2 = relu(tape, affine_rows(tape, h1, params_.decoder_w2, params_.decoder_b2));
  return affine_rows(tape, h2, params_.decoder_w3, params_.decoder_b3);
}

namespace {

// Numerically stable softmax cross-entropy against a single target index.
Tensor cross_entropy(Tape& tape, const Tensor& logits, int target) {
  const int k = logits.dim(1);
  double mx = logits.value_at(0);
  for (int i = 1; i < k; ++i) mx = std::max(mx, logits.value_at(i));
  Tensor shifted = sub(tape, logits, Tensor::scalar(mx));
  Tensor lse = log(tape, sum(tape, exp(tape, shifted)));
  Tensor onehot = Tensor::zeros({1, k});
  onehot.mutable_values()[target] = 1.0;
  Tensor picked = sum(tape, mul(tape, shifted, onehot));
  return sub(tape, lse, picked);
}

}  // namespace

Tensor CapsNet::loss(Tape& tape, const Forward& fwd, int true_class) const {
  if (cfg_.cnn_ablation) {
    return cross_entropy(tape, fwd.logits, true_class);
  }
  Tensor margin = margin_loss(tape, fwd.class_caps, true_class, cfg_.margin_pos,
                              cfg_.margin_neg, cfg_.margin_lambda);
  Tensor recon = decode(tape, fwd.class_caps, true_class);
  Tensor target = cfg_.decoder_reconstructs_map
                      ? reshape(tape, fwd.input, {1, cfg_.input_frames * cfg_.input_dims})
                      : fwd.pooled_input;
  Tensor mse = mean(tape, square(tape, sub(tape, recon, target)));
  return add(tape, margin, mul(tape, Tensor::scalar(cfg_.recon_weight), mse));
}

std::pair<int, std::vector<double>> CapsNet::predict(
    const Tensor& input, const CompressionMask* mask) const {
  Tape tape;
  tape.set_recording(false);
  Forward fwd = forward(tape, input, mask);
  if (cfg_.cnn_ablation) {
    Tensor probs = softmax_rows(tape, fwd.logits);
    std::vector<double> scores(probs.values().begin(), probs.values().end());
    int best = 0;
    for (int i = 1; i < cfg_.num_classes; ++i) {
      if (scores[i] > scores[best]) best = i;
    }
    return {best, std::move(scores)};
  }
  return classify(fwd.class_caps);
}

}  // namespace sercaps
