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

#include "sercaps/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <limits>

namespace sercaps {

namespace {
constexpr char kMagic[4] = {'D', 'C', 'C', 'C'};
constexpr std::uint32_t kVersion = 1;
}  // namespace

void Checkpoint::add(std::string name, std::vector<std::uint32_t> dims,
                     std::vector<double> values) {
  std::size_t expect = 1;
  for (std::uint32_t d : dims) expect *= d;
  if (expect != values.size()) {
    throw std::invalid_argument("checkpoint section '" + name +
                                "': dims do not match value count");
  }
  if (name.empty() || name.size() > std::numeric_limits<std::uint16_t>::max()) {
    throw std::invalid_argument("checkpoint section name length out of range");
  }
  if (dims.size() > 255) {
    throw std::invalid_argument("checkpoint section rank exceeds 255");
  }
  sections.push_back({std::move(name), std::move(dims), std::move(values)});
}

void Checkpoint::add_scalar(std::string name, double value) {
  add(std::move(name), {1}, {value});
}

void Checkpoint::add_string(std::string name, std::string_view text) {
  std::vector<double> bytes;
  bytes.reserve(text.size());
  for (unsigned char c : text) bytes.push_back(static_cast<double>(c));
  add(std::move(name), {static_cast<std::uint32_t>(text.size())}, std::move(bytes));
}

bool Checkpoint::has(const std::string& name) const {
  for (const auto& s : sections) {
    if (s.name == name) return true;
  }
  return false;
}

const CheckpointSection& Checkpoint::require(const std::string& name) const {
  for (const auto& s : sections) {
    if (s.name == name) return s;
  }
  throw DataError("checkpoint is missing section '" + name + "'");
}

double Checkpoint::scalar(const std::string& name) const {
  const CheckpointSection& s = require(name);
  if (s.values.size() != 1) {
    throw DataError("checkpoint section '" + name + "' is not a scalar");
  }
  return s.values[0];
}

std::string Checkpoint::text(const std::string& name) const {
  const CheckpointSection& s = require(name);
  std::string out;
  out.reserve(s.values.size());
  for (double v : s.values) out.push_back(static_cast<char>(static_cast<int>(v)));
  return out;
}

namespace {

void push_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xff));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void push_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void push_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void push_f64(std::vector<std::uint8_t>& out, double v) {
  push_u64(out, std::bit_cast<std::uint64_t>(v));
}

class Reader {
 public:
  Reader(std::span<const std::uint8_t> bytes, std::size_t limit)
      : bytes_(bytes), limit_(limit) {}

  std::size_t pos() const { return pos_; }

  void need(std::size_t n, const std::string& what) const {
    if (pos_ + n > limit_) throw DataError("checkpoint: truncated " + what);
  }

  std::uint16_t u16(const std::string& what) {
    need(2, what);
    std::uint16_t v = static_cast<std::uint16_t>(bytes_[pos_] | (bytes_[pos_ + 1] << 8));
    pos_ += 2;
    return v;
  }

  std::uint8_t u8(const std::string& what) {
    need(1, what);
    return bytes_[pos_++];
  }

  std::uint32_t u32(const std::string& what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }

  std::uint64_t u64(const std::string& what) {
    need(8, what);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 8;
    return v;
  }

  std::string str(std::size_t n, const std::string& what) {
    need(n, what);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }

  double f64(const std::string& what) { return std::bit_cast<double>(u64(what)); }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t limit_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> serialize_checkpoint(const Checkpoint& ckpt) {
  std::vector<std::uint8_t> out;
  out.insert(out.end(), kMagic, kMagic + 4);
  push_u32(out, ckpt.version);
  push_u32(out, static_cast<std::uint32_t>(ckpt.sections.size()));
  for (const CheckpointSection& s : ckpt.sections) {
    push_u16(out, static_cast<std::uint16_t>(s.name.size()));
    out.insert(out.end(), s.name.begin(), s.name.end());
    out.push_back(static_cast<std::uint8_t>(s.dims.size()));
    for (std::uint32_t d : s.dims) push_u32(out, d);
    for (double v : s.values) push_f64(out, v);
  }
  push_u64(out, fnv1a64(out.data(), out.size()));
  return out;
}

Checkpoint deserialize_checkpoint(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 + 4 + 4 + 8) throw DataError("checkpoint: file too short");
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw DataError("checkpoint: bad magic");
  }
  std::size_t body = bytes.size() - 8;
  std::uint64_t stored = 0;
  for (int i = 0; i < 8; ++i) {
    stored |= static_cast<std::uint64_t>(bytes[body + i]) << (8 * i);
  }
  if (fnv1a64(bytes.data(), body) != stored) {
    throw DataError("checkpoint: checksum mismatch (corrupted file)");
  }

  Reader r(bytes, body);
  r.str(4, "magic");
  Checkpoint ckpt;
  ckpt.version = r.u32("version");
  if (ckpt.version > kVersion) {
    throw DataError("checkpoint: unsupported version " + std::to_string(ckpt.version) +
                    " (newer than this build)");
  }
  std::uint32_t count = r.u32("section count");
  for (std::uint32_t i = 0; i < count; ++i) {
    std::uint16_t name_len = r.u16("section name length");
    std::string name = r.str(name_len, "section name");
    std::uint8_t rank = r.u8("rank of section '" + name + "'");
    std::vector<std::uint32_t> dims(rank);
    std::size_t total = 1;
    for (std::uint8_t d = 0; d < rank; ++d) {
      dims[d] = r.u32("dims of section '" + name + "'");
      if (dims[d] != 0 && total > body / 8 / dims[d] + 1) {
        throw DataError("checkpoint: section '" + name + "' dims overflow the file");
      }
      total *= dims[d];
    }
    r.need(total * 8, "values of section '" + name + "'");
    std::vector<double> values(total);
    for (std::size_t v = 0; v < total; ++v) {
      values[v] = r.f64("values of section '" + name + "'");
    }
    ckpt.sections.push_back({std::move(name), std::move(dims), std::move(values)});
  }
  if (r.pos() != body) {
    throw DataError("checkpoint: trailing bytes after the last section");
  }
  return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  std::vector<std::uint8_t> bytes = serialize_checkpoint(ckpt);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint '" + path.string() + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("failed writing checkpoint '" + path.string() + "'");
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint '" + path.string() + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return deserialize_checkpoint(bytes);
}

}  // namespace sercaps
