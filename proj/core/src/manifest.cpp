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

#include "sercaps/manifest.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_set>

namespace sercaps {

int Manifest::label_index(const std::string& emotion) const {
  auto it = std::lower_bound(labels.begin(), labels.end(), emotion);
  if (it == labels.end() || *it != emotion) return -1;
  return static_cast<int>(it - labels.begin());
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream is(line);
  while (std::getline(is, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

}  // namespace

Manifest parse_manifest(std::string_view text,
                        std::span<const std::string> expected_labels) {
  std::istringstream is{std::string(text)};
  std::string line;
  if (!std::getline(is, line)) throw DataError("manifest: empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "path,speaker,emotion,utterance,rep") {
    throw DataError("manifest line 1: expected header "
                    "'path,speaker,emotion,utterance,rep', got '" + line + "'");
  }

  Manifest manifest;
  std::set<std::string> label_set(expected_labels.begin(), expected_labels.end());
  std::unordered_set<std::string> seen_paths;
  int line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split_csv_line(line);
    if (fields.size() != 5) {
      throw DataError("manifest line " + std::to_string(line_no) + ": expected 5 "
                      "fields, got " + std::to_string(fields.size()));
    }
    ManifestRecord rec;
    rec.path = fields[0];
    rec.speaker = fields[1];
    rec.emotion = fields[2];
    rec.utterance = fields[3];
    if (rec.path.empty() || rec.speaker.empty() || rec.emotion.empty() ||
        rec.utterance.empty()) {
      throw DataError("manifest line " + std::to_string(line_no) + ": empty field");
    }
    try {
      std::size_t used = 0;
      rec.rep = std::stoi(fields[4], &used);
      if (used != fields[4].size()) throw std::invalid_argument("trailing junk");
    } catch (const std::exception&) {
      throw DataError("manifest line " + std::to_string(line_no) +
                      ": rep must be an integer, got '" + fields[4] + "'");
    }
    if (!seen_paths.insert(rec.path).second) {
      throw DataError("manifest line " + std::to_string(line_no) +
                      ": duplicate path '" + rec.path + "'");
    }
    if (!expected_labels.empty() && label_set.count(rec.emotion) == 0) {
      throw DataError("manifest line " + std::to_string(line_no) +
                      ": unknown label '" + rec.emotion + "'");
    }
    label_set.insert(rec.emotion);
    manifest.records.push_back(std::move(rec));
  }
  if (manifest.records.empty()) throw DataError("manifest: no records");
  manifest.labels.assign(label_set.begin(), label_set.end());
  for (ManifestRecord& rec : manifest.records) {
    rec.label = manifest.label_index(rec.emotion);
  }
  return manifest;
}

Manifest load_manifest(const std::filesystem::path& path,
                       std::span<const std::string> expected_labels) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open manifest '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_manifest(buf.str(), expected_labels);
}

void save_manifest(const Manifest& manifest, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write manifest '" + path.string() + "'");
  out << "path,speaker,emotion,utterance,rep\n";
  for (const ManifestRecord& rec : manifest.records) {
    out << rec.path << ',' << rec.speaker << ',' << rec.emotion << ','
        << rec.utterance << ',' << rec.rep << '\n';
  }
}

Split split(const Manifest& manifest, const SplitPlan& plan) {
  std::set<std::string> train_spk(plan.train_speakers.begin(), plan.train_speakers.end());
  std::set<std::string> test_spk(plan.test_speakers.begin(), plan.test_speakers.end());
  for (const std::string& s : train_spk) {
    if (test_spk.count(s)) {
      throw DataError("split plan: speaker '" + s + "' appears in both sets");
    }
  }
  std::set<std::string> train_utt(plan.train_utterances.begin(), plan.train_utterances.end());
  std::set<std::string> test_utt(plan.test_utterances.begin(), plan.test_utterances.end());
  if (!train_utt.empty() && !test_utt.empty()) {
    for (const std::string& u : train_utt) {
      if (test_utt.count(u)) {
        throw DataError("split plan: utterance '" + u + "' appears in both subsets");
      }
    }
  }

  auto select = [&](const std::set<std::string>& speakers,
                    const std::set<std::string>& utts) {
    Manifest out;
    out.labels = manifest.labels;
    for (const ManifestRecord& rec : manifest.records) {
      if (!speakers.count(rec.speaker)) continue;
      if (!utts.empty() && !utts.count(rec.utterance)) continue;
      out.records.push_back(rec);
    }
    return out;
  };
  Split result;
  result.train = select(train_spk, train_utt);
  result.test = select(test_spk, test_utt);
  return result;
}

}  // namespace sercaps
