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

#include "sercaps/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace sercaps {

KeyValueConfig KeyValueConfig::parse(std::string_view text) {
  KeyValueConfig cfg;
  std::istringstream is{std::string(text)};
  std::string line;
  int line_no = 0;
  auto trim = [](std::string s) {
    auto issp = [](unsigned char c) { return std::isspace(c) != 0; };
    while (!s.empty() && issp(s.front())) s.erase(s.begin());
    while (!s.empty() && issp(s.back())) s.pop_back();
    return s;
  };
  while (std::getline(is, line)) {
    ++line_no;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw DataError("config line " + std::to_string(line_no) +
                      ": expected key=value, got '" + line + "'");
    }
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw DataError("config line " + std::to_string(line_no) + ": empty key");
    }
    cfg.entries_.emplace_back(std::move(key), std::move(value));
  }
  return cfg;
}

KeyValueConfig KeyValueConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open config '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

bool KeyValueConfig::has(const std::string& key) const {
  for (const auto& [k, v] : entries_) {
    if (k == key) return true;
  }
  return false;
}

const std::string& KeyValueConfig::get(const std::string& key) const {
  for (const auto& [k, v] : entries_) {
    if (k == key) return v;
  }
  throw DataError("config key '" + key + "' not found");
}

namespace {

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument("trailing junk");
    return v;
  } catch (const std::exception&) {
    throw DataError("config key '" + key + "': expected a number, got '" + value + "'");
  }
}

int parse_int(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    int v = std::stoi(value, &used);
    if (used != value.size()) throw std::invalid_argument("trailing junk");
    return v;
  } catch (const std::exception&) {
    throw DataError("config key '" + key + "': expected an integer, got '" + value + "'");
  }
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    unsigned long long v = std::stoull(value, &used);
    if (used != value.size()) throw std::invalid_argument("trailing junk");
    return v;
  } catch (const std::exception&) {
    throw DataError("config key '" + key + "': expected an unsigned integer, got '" +
                    value + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw DataError("config key '" + key + "': expected true/false, got '" + value + "'");
}

}  // namespace

void TrainConfig::apply(const std::string& key, const std::string& value) {
  if (key == "seed") seed = parse_u64(key, value);
  else if (key == "epochs") epochs = parse_int(key, value);
  else if (key == "batch_size") batch_size = parse_int(key, value);
  else if (key == "learning_rate") learning_rate = parse_double(key, value);
  else if (key == "compression_rate") compression_rate = parse_double(key, value);
  else if (key == "compression_enabled") compression_enabled = parse_bool(key, value);
  else if (key == "warmup_epochs") warmup_epochs = parse_int(key, value);
  else if (key == "dclstm_epochs") dclstm_epochs = parse_int(key, value);
  else if (key == "dclstm_learning_rate") dclstm_learning_rate = parse_double(key, value);
  else if (key == "dclstm_hidden") dclstm.hidden_dim = parse_int(key, value);
  else if (key == "frame_budget") frame_budget = parse_int(key, value);
  else if (key == "n_fft") features.n_fft = parse_int(key, value);
  else if (key == "hop") features.hop = parse_int(key, value);
  else if (key == "sample_rate") features.sample_rate = parse_int(key, value);
  else if (key == "n_mfcc") features.n_mfcc = parse_int(key, value);
  else if (key == "n_mels") features.n_mels = parse_int(key, value);
  else if (key == "delta_window") features.delta_window = parse_int(key, value);
  else if (key == "conv1_channels") capsnet.conv1.out_channels = parse_int(key, value);
  else if (key == "conv1_kernel") capsnet.conv1.kernel = parse_int(key, value);
  else if (key == "conv1_stride") capsnet.conv1.stride = parse_int(key, value);
  else if (key == "conv2_channels") capsnet.conv2.out_channels = parse_int(key, value);
  else if (key == "conv2_kernel") capsnet.conv2.kernel = parse_int(key, value);
  else if (key == "conv2_stride") capsnet.conv2.stride = parse_int(key, value);
  else if (key == "capsule_dim") capsnet.capsule_dim = parse_int(key, value);
  else if (key == "class_capsule_dim") capsnet.class_capsule_dim = parse_int(key, value);
  else if (key == "routing_iters") capsnet.routing_iters = parse_int(key, value);
  else if (key == "first_stage_width") capsnet.first_stage_width = parse_int(key, value);
  else if (key == "decoder_hidden1") capsnet.decoder_hidden1 = parse_int(key, value);
  else if (key == "decoder_hidden2") capsnet.decoder_hidden2 = parse_int(key, value);
  else if (key == "margin_pos") capsnet.margin_pos = parse_double(key, value);
  else if (key == "margin_neg") capsnet.margin_neg = parse_double(key, value);
  else if (key == "margin_lambda") capsnet.margin_lambda = parse_double(key, value);
  else if (key == "recon_weight") capsnet.recon_weight = parse_double(key, value);
  else if (key == "decoder_target") {
    if (value == "pooled") capsnet.decoder_reconstructs_map = false;
    else if (value == "map") capsnet.decoder_reconstructs_map = true;
    else throw DataError("config key 'decoder_target': expected pooled or map, got '" +
                         value + "'");
  }
  else if (key == "cnn_ablation") capsnet.cnn_ablation = parse_bool(key, value);
  else {
    throw DataError("unknown config key '" + key + "'");
  }
}

TrainConfig TrainConfig::from_config(const KeyValueConfig& kv) {
  TrainConfig cfg;
  for (const auto& [key, value] : kv.entries()) cfg.apply(key, value);
  cfg.validate();
  return cfg;
}

TrainConfig TrainConfig::load(const std::filesystem::path& path) {
  return from_config(KeyValueConfig::load(path));
}

std::vector<std::pair<std::string, double>> TrainConfig::numeric_entries() const {
  return {
      {"seed", static_cast<double>(seed)},
      {"epochs", static_cast<double>(epochs)},
      {"batch_size", static_cast<double>(batch_size)},
      {"learning_rate", learning_rate},
      {"compression_rate", compression_rate},
      {"compression_enabled", compression_enabled ? 1.0 : 0.0},
      {"warmup_epochs", static_cast<double>(warmup_epochs)},
      {"dclstm_epochs", static_cast<double>(dclstm_epochs)},
      {"dclstm_learning_rate", dclstm_learning_rate},
      {"dclstm_hidden", static_cast<double>(dclstm.hidden_dim)},
      {"frame_budget", static_cast<double>(frame_budget)},
      {"n_fft", static_cast<double>(features.n_fft)},
      {"hop", static_cast<double>(features.hop)},
      {"sample_rate", static_cast<double>(features.sample_rate)},
      {"n_mfcc", static_cast<double>(features.n_mfcc)},
      {"n_mels", static_cast<double>(features.n_mels)},
      {"delta_window", static_cast<double>(features.delta_window)},
      {"conv1_channels", static_cast<double>(capsnet.conv1.out_channels)},
      {"conv1_kernel", static_cast<double>(capsnet.conv1.kernel)},
      {"conv1_stride", static_cast<double>(capsnet.conv1.stride)},
      {"conv2_channels", static_cast<double>(capsnet.conv2.out_channels)},
      {"conv2_kernel", static_cast<double>(capsnet.conv2.kernel)},
      {"conv2_stride", static_cast<double>(capsnet.conv2.stride)},
      {"capsule_dim", static_cast<double>(capsnet.capsule_dim)},
      {"class_capsule_dim", static_cast<double>(capsnet.class_capsule_dim)},
      {"routing_iters", static_cast<double>(capsnet.routing_iters)},
      {"first_stage_width", static_cast<double>(capsnet.first_stage_width)},
      {"decoder_hidden1", static_cast<double>(capsnet.decoder_hidden1)},
      {"decoder_hidden2", static_cast<double>(capsnet.decoder_hidden2)},
      {"margin_pos", capsnet.margin_pos},
      {"margin_neg", capsnet.margin_neg},
      {"margin_lambda", capsnet.margin_lambda},
      {"recon_weight", capsnet.recon_weight},
      {"decoder_target", capsnet.decoder_reconstructs_map ? 1.0 : 0.0},
      {"cnn_ablation", capsnet.cnn_ablation ? 1.0 : 0.0},
  };
}

void TrainConfig::validate() const {
  if (epochs < 1 || batch_size < 1 || dclstm_epochs < 0 || warmup_epochs < 0) {
    throw std::invalid_argument("train config: counts must be positive");
  }
  if (!(compression_rate >= 0.0 && compression_rate < 1.0)) {
    throw std::invalid_argument("train config: compression_rate must lie in [0, 1)");
  }
  if (frame_budget < 1) throw std::invalid_argument("train config: frame_budget must be >= 1");
  features.validate();
  dclstm.validate();
  // The capsnet input dims are derived at train time from the feature stack
  // and the frame budget; validate the rest here.
  if ((2 * dclstm.hidden_dim) % capsnet.capsule_dim != 0) {
    throw std::invalid_argument(
        "train config: fused width 2*dclstm_hidden must be divisible by capsule_dim "
        "for the variance calibration");
  }
}

}  // namespace sercaps
