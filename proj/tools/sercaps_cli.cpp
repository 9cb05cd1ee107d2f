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

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "sercaps/checkpoint.hpp"
#include "sercaps/config.hpp"
#include "sercaps/manifest.hpp"
#include "sercaps/synth.hpp"
#include "sercaps/train.hpp"

namespace fs = std::filesystem;
using namespace sercaps;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;

std::vector<double> read_runs_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open runs file '" + path.string() + "'");
  std::vector<double> runs;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    try {
      runs.push_back(std::stod(line));
    } catch (const std::exception&) {
      throw DataError("runs file line " + std::to_string(line_no) +
                      ": expected a number, got '" + line + "'");
    }
  }
  if (runs.empty()) throw DataError("runs file '" + path.string() + "' is empty");
  return runs;
}

TrainConfig config_from_option(const std::string& config_path) {
  if (config_path.empty()) return TrainConfig{};
  return TrainConfig::load(config_path);
}

int run_synth(const std::string& spec_path, std::uint64_t seed,
              const std::string& out_dir) {
  SynthSpec spec = spec_path.empty()
                       ? SynthSpec::defaults()
                       : SynthSpec::from_config(KeyValueConfig::load(spec_path));
  for (const std::string& warning : spec.validate()) {
    std::cerr << "warning: " << warning << "\n";
  }
  Manifest manifest = synth_corpus(spec, seed, out_dir);
  std::cout << "wrote " << manifest.records.size() << " clips and manifest.csv under "
            << out_dir << "\n";
  return kExitOk;
}

int run_featurize(const std::string& manifest_path, const std::string& config_path,
                  const std::string& out_dir) {
  TrainConfig cfg = config_from_option(config_path);
  Manifest manifest = load_manifest(manifest_path);
  fs::path base = fs::path(manifest_path).parent_path();
  FeaturizedSet fs_set = featurize_manifest(manifest, cfg.features, base);
  fs::create_directories(out_dir);
  for (std::size_t i = 0; i < fs_set.samples.size(); ++i) {
    const Sample& sample = fs_set.samples[i];
    Checkpoint container;
    auto add_matrix = [&container](const std::string& kind, const FeatureMatrix& m) {
      container.add(kind,
                    {static_cast<std::uint32_t>(m.rows), static_cast<std::uint32_t>(m.cols)},
                    m.values);
    };
    add_matrix(feature_kind_name(sample.stacked.kind), sample.stacked);
    add_matrix(feature_kind_name(sample.pitch.kind), sample.pitch);
    add_matrix(feature_kind_name(sample.energy.kind), sample.energy);
    fs::path stem = fs::path(manifest.records[i].path).stem();
    save_checkpoint(container, fs::path(out_dir) / (stem.string() + ".feat"));
  }
  std::cout << "featurized " << fs_set.samples.size() << " clips into " << out_dir << "\n";
  return kExitOk;
}

int run_train(const std::string& config_path, const std::string& manifest_path,
              const std::string& out_path, bool quiet) {
  TrainConfig cfg = config_from_option(config_path);
  Manifest manifest = load_manifest(manifest_path);
  fs::path base = fs::path(manifest_path).parent_path();
  TrainResult result = train(cfg, manifest, base, quiet ? nullptr : &std::cerr);
  save_checkpoint(result.checkpoint, out_path);
  std::cout << "trained " << result.epoch_losses.size() << " epochs in "
            << result.wall_seconds << " s; final loss " << result.epoch_losses.back()
            << ", train accuracy " << result.epoch_accuracies.back() << "\n";
  std::cout << "checkpoint written to " << out_path << "\n";
  return kExitOk;
}

int run_evaluate(const std::string& ckpt_path, const std::string& manifest_path,
                 const std::string& report_dir) {
  Checkpoint ckpt = load_checkpoint(ckpt_path);
  Manifest manifest = load_manifest(manifest_path);
  fs::path base = fs::path(manifest_path).parent_path();
  EvalResult result = evaluate(ckpt, manifest, base);
  if (!report_dir.empty()) write_reports(result, report_dir);
  std::cout << "accuracy " << result.metrics.accuracy << " on "
            << result.y_true.size() << " samples\n";
  if (!report_dir.empty()) std::cout << "reports written to " << report_dir << "\n";
  return kExitOk;
}

int run_gridsearch(const std::string& grid_path, const std::string& config_path,
                   const std::string& manifest_path, int folds,
                   const std::string& report_path, bool quiet) {
  KeyValueConfig grid_kv = KeyValueConfig::load(grid_path);
  GridAxes grid;
  for (const auto& [key, value] : grid_kv.entries()) {
    std::istringstream is(value);
    std::string item;
    while (std::getline(is, item, ',')) grid[key].push_back(item);
  }
  TrainConfig base_cfg = config_from_option(config_path);
  Manifest manifest = load_manifest(manifest_path);
  fs::path base = fs::path(manifest_path).parent_path();
  GridSearchResult result =
      grid_search(grid, base_cfg, manifest, base, folds, quiet ? nullptr : &std::cerr);
  std::cout << "best candidate (mean CV accuracy " << result.best.mean_accuracy << "):\n";
  for (const auto& [key, value] : result.best.overrides) {
    std::cout << key << "=" << value << "\n";
  }
  if (!report_path.empty()) {
    std::ofstream out(report_path);
    if (!out) throw DataError("cannot write grid report '" + report_path + "'");
    out << "candidate,mean_accuracy\n";
    for (const GridCandidate& cand : result.table) {
      std::string desc;
      for (const auto& [key, value] : cand.overrides) {
        if (!desc.empty()) desc += ' ';
        desc += key + "=" + value;
      }
      out << desc << "," << cand.mean_accuracy << "\n";
    }
  }
  return kExitOk;
}

int run_compare(const std::string& runs_a_path, const std::string& runs_b_path,
                double acc_a, double acc_b, bool have_accs) {
  std::vector<double> runs_a = read_runs_file(runs_a_path);
  std::vector<double> runs_b = read_runs_file(runs_b_path);
  if (!have_accs) {
    acc_a = 0.0;
    acc_b = 0.0;
    for (double v : runs_a) acc_a += v;
    for (double v : runs_b) acc_b += v;
    acc_a /= static_cast<double>(runs_a.size());
    acc_b /= static_cast<double>(runs_b.size());
  }
  CompareReport report = compare(runs_a, runs_b, acc_a, acc_b);
  std::cout << "t = " << report.ttest.t << " (pooled sd " << report.ttest.sd_pooled
            << ", n = " << report.ttest.n << ")\n";
  std::cout << "relative improvement = " << format_improvement(report.improvement)
            << "%\n";
  std::cout << report.verdict << "\n";
  return kExitOk;
}

int run_predict(const std::string& ckpt_path, const std::string& wav_path) {
  Checkpoint ckpt = load_checkpoint(ckpt_path);
  TrainedModel model = TrainedModel::from_checkpoint(ckpt);
  std::ifstream in(wav_path, std::ios::binary);
  if (!in) throw DataError("cannot open wav '" + wav_path + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  AudioClip clip = decode_wav(bytes);
  auto [cls, scores] = model.predict_clip(clip);
  std::cout << model.labels[cls] << "\n";
  for (std::size_t k = 0; k < scores.size(); ++k) {
    std::cout << model.labels[k] << " " << scores[k] << "\n";
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"speech emotion recognition with a compressed capsule network"};
  app.require_subcommand(1);

  std::string manifest_path, config_path, out_path, ckpt_path, report_dir;
  std::string spec_path, grid_path, wav_path, runs_a, runs_b;
  std::uint64_t seed = 42;
  int folds = 5;
  double acc_a = 0.0, acc_b = 0.0;
  bool quiet = false;

  CLI::App* synth_cmd = app.add_subcommand("synth", "generate a synthetic corpus");
  synth_cmd->add_option("--spec", spec_path, "synth spec file (key=value)");
  synth_cmd->add_option("--seed", seed, "corpus seed");
  synth_cmd->add_option("--out", out_path, "output directory")->required();

  CLI::App* feat_cmd = app.add_subcommand("featurize", "extract features for a manifest");
  feat_cmd->add_option("--manifest", manifest_path, "manifest CSV")->required();
  feat_cmd->add_option("--config", config_path, "train config (feature keys used)");
  feat_cmd->add_option("--out", out_path, "output directory")->required();

  CLI::App* train_cmd = app.add_subcommand("train", "train the full pipeline");
  train_cmd->add_option("--config", config_path, "train config file");
  train_cmd->add_option("--manifest", manifest_path, "training manifest")->required();
  train_cmd->add_option("--out", ckpt_path, "output checkpoint")->required();
  train_cmd->add_flag("--quiet", quiet, "suppress per-epoch logs");

  CLI::App* eval_cmd = app.add_subcommand("evaluate", "evaluate a checkpoint");
  eval_cmd->add_option("--ckpt", ckpt_path, "checkpoint file")->required();
  eval_cmd->add_option("--manifest", manifest_path, "test manifest")->required();
  eval_cmd->add_option("--report", report_dir, "report output directory");

  CLI::App* grid_cmd = app.add_subcommand("gridsearch", "exhaustive CV sweep");
  grid_cmd->add_option("--grid", grid_path, "grid file (key=v1,v2,...)")->required();
  grid_cmd->add_option("--config", config_path, "base train config");
  grid_cmd->add_option("--manifest", manifest_path, "manifest")->required();
  grid_cmd->add_option("--folds", folds, "speaker-partitioned folds");
  grid_cmd->add_option("--report", report_dir, "CV table CSV path");
  grid_cmd->add_flag("--quiet", quiet, "suppress per-candidate logs");

  CLI::App* cmp_cmd = app.add_subcommand("compare", "t-test and improvement report");
  cmp_cmd->add_option("--runs-a", runs_a, "accuracies file, one per line")->required();
  cmp_cmd->add_option("--runs-b", runs_b, "accuracies file, one per line")->required();
  CLI::Option* acc_a_opt = cmp_cmd->add_option("--acc-a", acc_a, "headline accuracy A (%)");
  CLI::Option* acc_b_opt = cmp_cmd->add_option("--acc-b", acc_b, "headline accuracy B (%)");

  CLI::App* pred_cmd = app.add_subcommand("predict", "classify a single wav");
  pred_cmd->add_option("--ckpt", ckpt_path, "checkpoint file")->required();
  pred_cmd->add_option("--wav", wav_path, "input wav")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (synth_cmd->parsed()) return run_synth(spec_path, seed, out_path);
    if (feat_cmd->parsed()) return run_featurize(manifest_path, config_path, out_path);
    if (train_cmd->parsed()) return run_train(config_path, manifest_path, ckpt_path, quiet);
    if (eval_cmd->parsed()) return run_evaluate(ckpt_path, manifest_path, report_dir);
    if (grid_cmd->parsed()) {
      return run_gridsearch(grid_path, config_path, manifest_path, folds, report_dir,
                            quiet);
    }
    if (cmp_cmd->parsed()) {
      bool have = acc_a_opt->count() > 0 && acc_b_opt->count() > 0;
      return run_compare(runs_a, runs_b, acc_a, acc_b, have);
    }
    if (pred_cmd->parsed()) return run_predict(ckpt_path, wav_path);
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}
