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

#include "sercaps/train.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <numeric>
#include <ostream>
#include <sstream>

namespace sercaps {

namespace {

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open audio file '" + path.string() + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Center crop (rows > budget) or centered zero padding (rows < budget).
FeatureMatrix crop_or_pad(const FeatureMatrix& f, int budget) {
  if (f.rows == budget) return f;
  FeatureMatrix out = FeatureMatrix::zeros(budget, f.cols, f.kind);
  if (f.rows > budget) {
    int start = (f.rows - budget) / 2;
    for (int t = 0; t < budget; ++t)
      for (int c = 0; c < f.cols; ++c) out.at(t, c) = f.at(start + t, c);
  } else {
    int start = (budget - f.rows) / 2;
    for (int t = 0; t < f.rows; ++t)
      for (int c = 0; c < f.cols; ++c) out.at(start + t, c) = f.at(t, c);
  }
  return out;
}

Tensor matrix_tensor(const FeatureMatrix& f) {
  return Tensor::from_values({f.rows, f.cols}, f.values);
}

void shuffle_indices(std::vector<std::size_t>& order, Rng& rng) {
  for (std::size_t i = order.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(rng.next_u64() % i);
    std::swap(order[i - 1], order[j]);
  }
}

void add_tensor_section(Checkpoint& ckpt, const std::string& name, const Tensor& t) {
  std::vector<std::uint32_t> dims;
  for (int d : t.shape()) dims.push_back(static_cast<std::uint32_t>(d));
  ckpt.add(name, std::move(dims), {t.values().begin(), t.values().end()});
}

void load_tensor_section(const Checkpoint& ckpt, const std::string& name, Tensor& t) {
  const CheckpointSection& s = ckpt.require(name);
  if (s.values.size() != t.size()) {
    throw DataError("checkpoint section '" + name + "' has " +
                    std::to_string(s.values.size()) + " values, expected " +
                    std::to_string(t.size()));
  }
  std::copy(s.values.begin(), s.values.end(), t.mutable_values().begin());
}

const char* kDcLstmSectionNames[4][2] = {
    {"dclstm/pitch/l1", "dclstm/pitch/l2"},
    {"dclstm/energy/l1", "dclstm/energy/l2"},
};

void add_dclstm_sections(Checkpoint& ckpt, const DcLstm& model) {
  for (int channel = 0; channel < 2; ++channel) {
    for (int depth = 0; depth < 2; ++depth) {
      const LstmLayerParams& layer = model.layer(channel, depth);
      std::string base = kDcLstmSectionNames[channel][depth];
      add_tensor_section(ckpt, base + "/wx", layer.wx);
      add_tensor_section(ckpt, base + "/wh", layer.wh);
      add_tensor_section(ckpt, base + "/b", layer.b);
    }
  }
  add_tensor_section(ckpt, "dclstm/head_w", model.head_w());
  add_tensor_section(ckpt, "dclstm/head_b", model.head_b());
}

void load_dclstm_sections(const Checkpoint& ckpt, DcLstm& model) {
  for (int channel = 0; channel < 2; ++channel) {
    for (int depth = 0; depth < 2; ++depth) {
      LstmLayerParams& layer = model.layer(channel, depth);
      std::string base = kDcLstmSectionNames[channel][depth];
      load_tensor_section(ckpt, base + "/wx", layer.wx);
      load_tensor_section(ckpt, base + "/wh", layer.wh);
      load_tensor_section(ckpt, base + "/b", layer.b);
    }
  }
  load_tensor_section(ckpt, "dclstm/head_w", model.head_w());
  load_tensor_section(ckpt, "dclstm/head_b", model.head_b());
}

void add_capsnet_sections(Checkpoint& ckpt, const CapsNet& net) {
  const CapsNetParams& p = net.params();
  add_tensor_section(ckpt, "capsnet/conv1_kernel", p.conv1_kernel);
  add_tensor_section(ckpt, "capsnet/conv1_bias", p.conv1_bias);
  add_tensor_section(ckpt, "capsnet/conv2_kernel", p.conv2_kernel);
  add_tensor_section(ckpt, "capsnet/conv2_bias", p.conv2_bias);
  add_tensor_section(ckpt, "capsnet/routing_weights", p.routing_weights);
  add_tensor_section(ckpt, "capsnet/decoder_w1", p.decoder_w1);
  add_tensor_section(ckpt, "capsnet/decoder_b1", p.decoder_b1);
  add_tensor_section(ckpt, "capsnet/decoder_w2", p.decoder_w2);
  add_tensor_section(ckpt, "capsnet/decoder_b2", p.decoder_b2);
  add_tensor_section(ckpt, "capsnet/decoder_w3", p.decoder_w3);
  add_tensor_section(ckpt, "capsnet/decoder_b3", p.decoder_b3);
  add_tensor_section(ckpt, "capsnet/head_w", p.head_w);
  add_tensor_section(ckpt, "capsnet/head_b", p.head_b);
}

void load_capsnet_sections(const Checkpoint& ckpt, CapsNet& net) {
  CapsNetParams& p = net.params();
  load_tensor_section(ckpt, "capsnet/conv1_kernel", p.conv1_kernel);
  load_tensor_section(ckpt, "capsnet/conv1_bias", p.conv1_bias);
  load_tensor_section(ckpt, "capsnet/conv2_kernel", p.conv2_kernel);
  load_tensor_section(ckpt, "capsnet/conv2_bias", p.conv2_bias);
  load_tensor_section(ckpt, "capsnet/routing_weights", p.routing_weights);
  load_tensor_section(ckpt, "capsnet/decoder_w1", p.decoder_w1);
  load_tensor_section(ckpt, "capsnet/decoder_b1", p.decoder_b1);
  load_tensor_section(ckpt, "capsnet/decoder_w2", p.decoder_w2);
  load_tensor_section(ckpt, "capsnet/decoder_b2", p.decoder_b2);
  load_tensor_section(ckpt, "capsnet/decoder_w3", p.decoder_w3);
  load_tensor_section(ckpt, "capsnet/decoder_b3", p.decoder_b3);
  load_tensor_section(ckpt, "capsnet/head_w", p.head_w);
  load_tensor_section(ckpt, "capsnet/head_b", p.head_b);
}

ColumnStats stats_from_sections(const Checkpoint& ckpt, const std::string& base) {
  ColumnStats stats;
  stats.mean = ckpt.require(base + "_mean").values;
  stats.sd = ckpt.require(base + "_sd").values;
  return stats;
}

struct PreparedSample {
  Tensor input_map;            // standardized, cropped/padded stacked features
  FeatureMatrix pitch;         // standardized series
  FeatureMatrix energy;
  int label = -1;
};

PreparedSample prepare_sample(const Sample& sample, const ColumnStats& stacked_stats,
                              const ColumnStats& pitch_stats,
                              const ColumnStats& energy_stats, int frame_budget) {
  PreparedSample out;
  FeatureMatrix clipped = remove_outliers(sample.stacked, stacked_stats);
  FeatureMatrix standardized = standardize_columns(clipped, stacked_stats);
  out.input_map = matrix_tensor(crop_or_pad(standardized, frame_budget));
  out.pitch = standardize_columns(sample.pitch, pitch_stats);
  out.energy = standardize_columns(sample.energy, energy_stats);
  out.label = sample.label;
  return out;
}

}  // namespace

FeaturizedSet featurize_manifest(const Manifest& manifest,
                                 const FeatureConfig& features,
                                 const std::filesystem::path& base_dir) {
  FeaturizedSet out;
  out.labels = manifest.labels;
  out.samples.reserve(manifest.records.size());
  for (const ManifestRecord& rec : manifest.records) {
    std::filesystem::path p(rec.path);
    if (p.is_relative()) p = base_dir / p;
    AudioClip clip = decode_wav(read_file(p));
    Sample sample;
    sample.stacked = mfcc_stack(clip, features);
    sample.pitch = pitch_series(clip, features);
    sample.energy = energy_series(clip, features);
    sample.label = rec.label;
    sample.speaker = rec.speaker;
    out.samples.push_back(std::move(sample));
  }
  return out;
}

TrainResult train(const TrainConfig& config, const Manifest& train_manifest,
                  const std::filesystem::path& base_dir, std::ostream* log) {
  auto t0 = std::chrono::steady_clock::now();
  config.validate();
  if (train_manifest.records.empty()) throw DataError("train: empty manifest");
  const int num_classes = static_cast<int>(train_manifest.labels.size());
  if (num_classes < 2) throw DataError("train: need at least 2 emotion classes");

  FeaturizedSet fs = featurize_manifest(train_manifest, config.features, base_dir);
  const std::size_t n = fs.samples.size();
  if (log) *log << "featurized " << n << " clips\n";

  // Outlier statistics come from the training split only.
  std::vector<FeatureMatrix> stacked_refs, pitch_refs, energy_refs;
  for (const Sample& s : fs.samples) {
    stacked_refs.push_back(s.stacked);
    pitch_refs.push_back(s.pitch);
    energy_refs.push_back(s.energy);
  }
  ColumnStats stacked_stats = fit_column_stats(stacked_refs);
  ColumnStats pitch_stats = fit_column_stats(pitch_refs);
  ColumnStats energy_stats = fit_column_stats(energy_refs);

  std::vector<PreparedSample> prepared;
  prepared.reserve(n);
  for (const Sample& s : fs.samples) {
    prepared.push_back(prepare_sample(s, stacked_stats, pitch_stats, energy_stats,
                                      config.frame_budget));
  }

  // Stage 1: the dual-channel LSTM classifier.
  DcLstmConfig lstm_cfg = config.dclstm;
  lstm_cfg.num_classes = num_classes;
  DcLstm lstm(lstm_cfg, config.seed);
  {
    AdamOptimizer opt(lstm.trainable(), AdamConfig{config.dclstm_learning_rate});
    Rng shuffle_rng = Rng::derive(config.seed, "dclstm-shuffle");
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    for (int epoch = 0; epoch < config.dclstm_epochs; ++epoch) {
      shuffle_indices(order, shuffle_rng);
      double epoch_loss = 0.0;
      for (std::size_t start = 0; start < n; start += config.batch_size) {
        std::size_t stop = std::min(n, start + config.batch_size);
        Tape tape;
        Tensor total;
        for (std::size_t i = start; i < stop; ++i) {
          const PreparedSample& s = prepared[order[i]];
          Tensor l = lstm.loss(tape, s.pitch, s.energy, s.label);
          total = total.defined() ? add(tape, total, l) : l;
        }
        Tensor batch_loss =
            mul(tape, Tensor::scalar(1.0 / static_cast<double>(stop - start)), total);
        epoch_loss += batch_loss.scalar_value() * static_cast<double>(stop - start);
        tape.backward(batch_loss);
        opt.step();
      }
      if (log) {
        *log << "dclstm epoch " << epoch << " loss " << epoch_loss / static_cast<double>(n)
             << "\n";
      }
    }
  }
  double dclstm_acc = 0.0;
  for (const PreparedSample& s : prepared) {
    if (lstm.predict(s.pitch, s.energy) == s.label) dclstm_acc += 1.0;
  }
  dclstm_acc /= static_cast<double>(n);
  if (log) *log << "dclstm train accuracy " << dclstm_acc << "\n";

  // Stage 2: variance calibration -> elimination list -> compression mask.
  const int capsule_dim = config.capsnet.capsule_dim;
  CompressionMask mask = identity_mask(capsule_dim);
  if (config.compression_enabled && config.compression_rate > 0.0) {
    std::vector<std::vector<double>> fused_vectors;
    fused_vectors.reserve(n);
    for (const PreparedSample& s : prepared) {
      Tape tape;
      tape.set_recording(false);
      Tensor f = lstm.fused(tape, s.pitch, s.energy);
      fused_vectors.emplace_back(f.values().begin(), f.values().end());
    }
    VarianceProfile profile = variance_profile(fused_vectors, capsule_dim);
    EliminationList elim = elimination_list(profile.variances, config.compression_rate);
    mask = build_mask(elim, capsule_dim);
    if (log) {
      *log << "compression mask eliminates " << mask.eliminated.size() << " of "
           << capsule_dim << " instantiation parameters\n";
    }
  }

  // Stage 3: the compressed capsule network.
  CapsNetConfig caps_cfg = config.capsnet;
  caps_cfg.input_frames = config.frame_budget;
  caps_cfg.input_dims = 3 * config.features.n_mfcc;
  caps_cfg.num_classes = num_classes;
  if (std::string warn = width_warning(caps_cfg); !warn.empty() && log) {
    *log << "note: " << warn << "\n";
  }
  CapsNet net(caps_cfg, config.seed);

  TrainResult result;
  {
    AdamOptimizer opt(net.trainable(), AdamConfig{config.learning_rate});
    Rng shuffle_rng = Rng::derive(config.seed, "capsnet-shuffle");
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
      const bool masked = config.compression_enabled && epoch >= config.warmup_epochs;
      shuffle_indices(order, shuffle_rng);
      double epoch_loss = 0.0;
      std::size_t correct = 0;
      for (std::size_t start = 0; start < n; start += config.batch_size) {
        std::size_t stop = std::min(n, start + config.batch_size);
        Tape tape;
        Tensor total;
        try {
          for (std::size_t i = start; i < stop; ++i) {
            const PreparedSample& s = prepared[order[i]];
            CapsNet::Forward fwd =
                net.forward(tape, s.input_map, masked ? &mask : nullptr);
            if (caps_cfg.cnn_ablation) {
              int best = 0;
              for (int k = 1; k < num_classes; ++k) {
                if (fwd.logits.value_at(k) > fwd.logits.value_at(best)) best = k;
              }
              if (best == s.label) ++correct;
            } else if (classify(fwd.class_caps).first == s.label) {
              ++correct;
            }
            Tensor l = net.loss(tape, fwd, s.label);
            total = total.defined() ? add(tape, total, l) : l;
          }
          Tensor batch_loss =
              mul(tape, Tensor::scalar(1.0 / static_cast<double>(stop - start)), total);
          epoch_loss += batch_loss.scalar_value() * static_cast<double>(stop - start);
          tape.backward(batch_loss);
          opt.step();
        } catch (const NumericError& e) {
          throw NumericError("epoch " + std::to_string(epoch) + ", batch starting at "
                             "sample " + std::to_string(start) + ": " + e.what());
        }
      }
      result.epoch_losses.push_back(epoch_loss / static_cast<double>(n));
      result.epoch_accuracies.push_back(static_cast<double>(correct) /
                                        static_cast<double>(n));
      if (log) {
        *log << "epoch " << epoch << " loss " << result.epoch_losses.back() << " acc "
             << result.epoch_accuracies.back() << (masked ? " [masked]" : "") << "\n";
      }
    }
  }

  // Checkpoint assembly. The echo records the effective compression state
  // (rate 0 and compression-off train identically, and their checkpoints are
  // bit-identical).
  Checkpoint ckpt;
  TrainConfig echoed = config;
  echoed.dclstm.num_classes = num_classes;
  echoed.compression_rate = mask.rate;
  echoed.compression_enabled = !mask.is_identity();
  for (const auto& [key, value] : echoed.numeric_entries()) {
    ckpt.add_scalar("config/" + key, value);
  }
  ckpt.add_scalar("meta/num_labels", static_cast<double>(num_classes));
  for (int i = 0; i < num_classes; ++i) {
    ckpt.add_string("label/" + std::to_string(i), train_manifest.labels[i]);
  }
  ckpt.add("features/stacked_mean",
           {static_cast<std::uint32_t>(stacked_stats.mean.size())}, stacked_stats.mean);
  ckpt.add("features/stacked_sd",
           {static_cast<std::uint32_t>(stacked_stats.sd.size())}, stacked_stats.sd);
  ckpt.add("features/pitch_mean", {1}, pitch_stats.mean);
  ckpt.add("features/pitch_sd", {1}, pitch_stats.sd);
  ckpt.add("features/energy_mean", {1}, energy_stats.mean);
  ckpt.add("features/energy_sd", {1}, energy_stats.sd);
  add_dclstm_sections(ckpt, lstm);
  ckpt.add("compress/mask", {static_cast<std::uint32_t>(mask.d.size())}, mask.d);
  ckpt.add_scalar("compress/rate", mask.rate);
  {
    std::vector<double> elim(mask.eliminated.begin(), mask.eliminated.end());
    const auto count = static_cast<std::uint32_t>(elim.size());
    ckpt.add("compress/eliminated", {count}, std::move(elim));
  }
  add_capsnet_sections(ckpt, net);

  result.checkpoint = std::move(ckpt);
  result.dclstm_train_accuracy = dclstm_acc;
  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

TrainedModel TrainedModel::from_checkpoint(const Checkpoint& ckpt) {
  TrainedModel model;
  TrainConfig& cfg = model.config;
  cfg.seed = static_cast<std::uint64_t>(ckpt.scalar("config/seed"));
  cfg.epochs = static_cast<int>(ckpt.scalar("config/epochs"));
  cfg.batch_size = static_cast<int>(ckpt.scalar("config/batch_size"));
  cfg.learning_rate = ckpt.scalar("config/learning_rate");
  cfg.compression_rate = ckpt.scalar("config/compression_rate");
  cfg.compression_enabled = ckpt.scalar("config/compression_enabled") != 0.0;
  cfg.warmup_epochs = static_cast<int>(ckpt.scalar("config/warmup_epochs"));
  cfg.dclstm_epochs = static_cast<int>(ckpt.scalar("config/dclstm_epochs"));
  cfg.dclstm_learning_rate = ckpt.scalar("config/dclstm_learning_rate");
  cfg.dclstm.hidden_dim = static_cast<int>(ckpt.scalar("config/dclstm_hidden"));
  cfg.frame_budget = static_cast<int>(ckpt.scalar("config/frame_budget"));
  cfg.features.n_fft = static_cast<int>(ckpt.scalar("config/n_fft"));
  cfg.features.hop = static_cast<int>(ckpt.scalar("config/hop"));
  cfg.features.sample_rate = static_cast<int>(ckpt.scalar("config/sample_rate"));
  cfg.features.n_mfcc = static_cast<int>(ckpt.scalar("config/n_mfcc"));
  cfg.features.n_mels = static_cast<int>(ckpt.scalar("config/n_mels"));
  cfg.features.delta_window = static_cast<int>(ckpt.scalar("config/delta_window"));
  cfg.capsnet.conv1.out_channels = static_cast<int>(ckpt.scalar("config/conv1_channels"));
  cfg.capsnet.conv1.kernel = static_cast<int>(ckpt.scalar("config/conv1_kernel"));
  cfg.capsnet.conv1.stride = static_cast<int>(ckpt.scalar("config/conv1_stride"));
  cfg.capsnet.conv2.out_channels = static_cast<int>(ckpt.scalar("config/conv2_channels"));
  cfg.capsnet.conv2.kernel = static_cast<int>(ckpt.scalar("config/conv2_kernel"));
  cfg.capsnet.conv2.stride = static_cast<int>(ckpt.scalar("config/conv2_stride"));
  cfg.capsnet.capsule_dim = static_cast<int>(ckpt.scalar("config/capsule_dim"));
  cfg.capsnet.class_capsule_dim =
      static_cast<int>(ckpt.scalar("config/class_capsule_dim"));
  cfg.capsnet.routing_iters = static_cast<int>(ckpt.scalar("config/routing_iters"));
  cfg.capsnet.first_stage_width =
      static_cast<int>(ckpt.scalar("config/first_stage_width"));
  cfg.capsnet.decoder_hidden1 = static_cast<int>(ckpt.scalar("config/decoder_hidden1"));
  cfg.capsnet.decoder_hidden2 = static_cast<int>(ckpt.scalar("config/decoder_hidden2"));
  cfg.capsnet.margin_pos = ckpt.scalar("config/margin_pos");
  cfg.capsnet.margin_neg = ckpt.scalar("config/margin_neg");
  cfg.capsnet.margin_lambda = ckpt.scalar("config/margin_lambda");
  cfg.capsnet.recon_weight = ckpt.scalar("config/recon_weight");
  cfg.capsnet.decoder_reconstructs_map = ckpt.scalar("config/decoder_target") != 0.0;
  cfg.capsnet.cnn_ablation = ckpt.scalar("config/cnn_ablation") != 0.0;

  const int num_labels = static_cast<int>(ckpt.scalar("meta/num_labels"));
  for (int i = 0; i < num_labels; ++i) {
    model.labels.push_back(ckpt.text("label/" + std::to_string(i)));
  }
  model.feature_stats = stats_from_sections(ckpt, "features/stacked");
  model.pitch_stats = stats_from_sections(ckpt, "features/pitch");
  model.energy_stats = stats_from_sections(ckpt, "features/energy");

  {
    const CheckpointSection& m = ckpt.require("compress/mask");
    EliminationList elim;
    for (std::size_t i = 0; i < m.values.size(); ++i) {
      if (m.values[i] == 0.0) elim.indices.push_back(static_cast<int>(i));
    }
    model.mask = build_mask(elim, static_cast<int>(m.values.size()));
  }

  DcLstmConfig lstm_cfg = cfg.dclstm;
  lstm_cfg.num_classes = num_labels;
  model.lstm = std::make_unique<DcLstm>(lstm_cfg, cfg.seed);
  load_dclstm_sections(ckpt, *model.lstm);

  CapsNetConfig caps_cfg = cfg.capsnet;
  caps_cfg.input_frames = cfg.frame_budget;
  caps_cfg.input_dims = 3 * cfg.features.n_mfcc;
  caps_cfg.num_classes = num_labels;
  model.net = std::make_unique<CapsNet>(caps_cfg, cfg.seed);
  load_capsnet_sections(ckpt, *model.net);
  return model;
}

std::pair<int, std::vector<double>> TrainedModel::predict_clip(
    const AudioClip& clip) const {
  Sample sample;
  sample.stacked = mfcc_stack(clip, config.features);
  sample.pitch = pitch_series(clip, config.features);
  sample.energy = energy_series(clip, config.features);
  PreparedSample prepared = prepare_sample(sample, feature_stats, pitch_stats,
                                           energy_stats, config.frame_budget);
  return net->predict(prepared.input_map, &mask);
}

EvalResult evaluate(const Checkpoint& ckpt, const Manifest& test_manifest,
                    const std::filesystem::path& base_dir) {
  TrainedModel model = TrainedModel::from_checkpoint(ckpt);
  for (const std::string& label : test_manifest.labels) {
    if (std::find(model.labels.begin(), model.labels.end(), label) ==
        model.labels.end()) {
      throw DataError("evaluate: test label '" + label +
                      "' is not in the checkpoint's label set");
    }
  }
  FeaturizedSet fs =
      featurize_manifest(test_manifest, model.config.features, base_dir);

  EvalResult result;
  result.labels = model.labels;
  const int k = static_cast<int>(model.labels.size());
  for (std::size_t i = 0; i < fs.samples.size(); ++i) {
    const Sample& s = fs.samples[i];
    PreparedSample prepared =
        prepare_sample(s, model.feature_stats, model.pitch_stats, model.energy_stats,
                       model.config.frame_budget);
    auto [pred, scores] = model.net->predict(prepared.input_map, &model.mask);
    // Test labels map into the checkpoint's label space by name.
    const std::string& emotion = test_manifest.labels[s.label];
    int truth = static_cast<int>(
        std::find(model.labels.begin(), model.labels.end(), emotion) -
        model.labels.begin());
    result.y_true.push_back(truth);
    result.y_pred.push_back(pred);
    result.scores.push_back(std::move(scores));
  }
  result.confusion = confusion(result.y_true, result.y_pred, k);
  result.metrics = precision_recall(result.confusion);
  return result;
}

void write_reports(const EvalResult& result, const std::filesystem::path& report_dir) {
  std::filesystem::create_directories(report_dir);
  auto write = [&](const std::filesystem::path& name, const std::string& content) {
    std::ofstream out(report_dir / name, std::ios::binary);
    if (!out) throw DataError("cannot write report '" + (report_dir / name).string() + "'");
    out << content;
  };
  write("confusion.csv", confusion_csv(result.confusion, result.labels));
  write("metrics.csv", metrics_csv(result.metrics, result.labels));
  write("summary.txt", summary_text(result.metrics, result.labels));
  {
    std::ostringstream os;
    os << "true,pred";
    for (const std::string& label : result.labels) os << ",score_" << label;
    os << "\n";
    for (std::size_t i = 0; i < result.y_true.size(); ++i) {
      os << result.labels[result.y_true[i]] << "," << result.labels[result.y_pred[i]];
      for (double s : result.scores[i]) os << "," << s;
      os << "\n";
    }
    write("scores.csv", os.str());
  }
  for (std::size_t k = 0; k < result.labels.size(); ++k) {
    std::vector<double> class_scores;
    for (const auto& row : result.scores) class_scores.push_back(row[k]);
    auto points = roc_points(class_scores, result.y_true, static_cast<int>(k));
    write("roc_" + result.labels[k] + ".csv", roc_csv(points));
  }
}

GridSearchResult grid_search(const GridAxes& grid, const TrainConfig& base,
                             const Manifest& manifest,
                             const std::filesystem::path& base_dir, int folds,
                             std::ostream* log) {
  if (grid.empty()) throw DataError("grid search: empty grid");
  for (const auto& [key, values] : grid) {
    if (values.empty()) {
      throw DataError("grid search: key '" + key + "' has an empty value list");
    }
  }
  if (folds < 2) throw std::invalid_argument("grid search: folds must be >= 2");

  // Speaker-partitioned folds keep every candidate speaker-independent.
  std::vector<std::string> speakers;
  for (const ManifestRecord& rec : manifest.records) speakers.push_back(rec.speaker);
  std::sort(speakers.begin(), speakers.end());
  speakers.erase(std::unique(speakers.begin(), speakers.end()), speakers.end());
  if (static_cast<int>(speakers.size()) < folds) {
    throw DataError("grid search: fewer speakers than folds");
  }
  std::vector<std::vector<std::string>> fold_speakers(folds);
  for (std::size_t i = 0; i < speakers.size(); ++i) {
    fold_speakers[i % folds].push_back(speakers[i]);
  }

  // Enumeration order: sorted parameter names (GridAxes is an ordered map),
  // values in listed order.
  std::vector<std::string> keys;
  for (const auto& [key, values] : grid) keys.push_back(key);
  std::vector<std::size_t> at(keys.size(), 0);

  GridSearchResult result;
  bool done = false;
  while (!done) {
    GridCandidate cand;
    for (std::size_t i = 0; i < keys.size(); ++i) {
      cand.overrides[keys[i]] = grid.at(keys[i])[at[i]];
    }
    TrainConfig cfg = base;
    for (const auto& [key, value] : cand.overrides) cfg.apply(key, value);
    cfg.validate();

    for (int f = 0; f < folds; ++f) {
      SplitPlan plan;
      plan.test_speakers = fold_speakers[f];
      for (int other = 0; other < folds; ++other) {
        if (other == f) continue;
        plan.train_speakers.insert(plan.train_speakers.end(),
                                   fold_speakers[other].begin(),
                                   fold_speakers[other].end());
      }
      Split cv = split(manifest, plan);
      TrainResult trained = train(cfg, cv.train, base_dir);
      EvalResult eval = evaluate(trained.checkpoint, cv.test, base_dir);
      cand.fold_accuracies.push_back(eval.metrics.accuracy);
    }
    cand.mean_accuracy =
        std::accumulate(cand.fold_accuracies.begin(), cand.fold_accuracies.end(), 0.0) /
        static_cast<double>(folds);
    if (log) {
      *log << "grid candidate";
      for (const auto& [key, value] : cand.overrides) *log << " " << key << "=" << value;
      *log << " -> " << cand.mean_accuracy << "\n";
    }
    result.table.push_back(cand);

    // Ties keep the first-enumerated candidate.
    if (result.table.size() == 1 ||
        cand.mean_accuracy > result.best.mean_accuracy) {
      result.best = cand;
    }

    done = true;
    for (std::size_t i = keys.size(); i-- > 0;) {
      if (++at[i] < grid.at(keys[i]).size()) {
        done = false;
        break;
      }
      at[i] = 0;
    }
  }
  return result;
}

CompareReport compare(std::span<const double> runs_a, std::span<const double> runs_b,
                      double acc_a, double acc_b) {
  CompareReport report;
  report.ttest = t_test(runs_a, runs_b);
  report.improvement = relative_improvement(acc_a, acc_b);
  std::ostringstream os;
  os << "t = " << report.ttest.t << " vs critical " << kTTestCritical << " -> "
     << (report.ttest.significant ? "significant at 0.01" : "not significant at 0.01")
     << "; relative improvement " << format_improvement(report.improvement) << "%";
  report.verdict = os.str();
  return report;
}

}  // namespace sercaps
