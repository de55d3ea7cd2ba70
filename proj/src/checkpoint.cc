// Copyright 2026 The tdnas Authors.
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

#include "checkpoint.h"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <utility>
#include <vector>

#include "common.h"

static_assert(std::endian::native == std::endian::little,
              "checkpoint container assumes a little-endian host");
static_assert(sizeof(double) == 8, "checkpoint container assumes 8-byte doubles");

namespace tdnas {
namespace checkpoint {

namespace {

constexpr char kMagic[8] = {'T', 'D', 'N', 'A', 'S', 'C', 'K', '1'};

void AppendU64(std::string* out, uint64_t v) {
  char buf[8];
  std::memcpy(buf, &v, 8);
  out->append(buf, 8);
}

uint64_t ReadU64(const std::string& bytes, size_t at) {
  uint64_t v = 0;
  std::memcpy(&v, bytes.data() + at, 8);
  return v;
}

}  // namespace

std::string ReadFileBytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  Require(in.good(), "cannot open for reading: " + path, ErrorKind::kIo);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  Require(!in.bad(), "read failed: " + path, ErrorKind::kIo);
  return bytes;
}

void WriteFileBytes(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  Require(out.good(), "cannot open for writing: " + path, ErrorKind::kIo);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  out.flush();
  Require(out.good(), "write failed: " + path, ErrorKind::kIo);
}

void Save(const Container& c, const std::string& path) {
  Require(c.meta.is_object(), "container meta must be a JSON object", ErrorKind::kInvalidArgument);
  nlohmann::json header;
  header["meta"] = c.meta;
  header["arrays"] = nlohmann::json::array();
  uint64_t offset = 0;
  for (const auto& [name, t] : c.arrays) {
    nlohmann::json a;
    a["name"] = name;
    a["shape"] = t.shape;
    a["offset"] = offset;
    a["count"] = t.Numel();
    header["arrays"].push_back(std::move(a));
    offset += static_cast<uint64_t>(t.Numel());
  }
  const std::string header_text = header.dump();

  std::string bytes;
  bytes.reserve(16 + header_text.size() + offset * 8);
  bytes.append(kMagic, 8);
  AppendU64(&bytes, header_text.size());
  bytes.append(header_text);
  for (const auto& [name, t] : c.arrays) {
    (void)name;
    const char* raw = reinterpret_cast<const char*>(t.data.data());
    bytes.append(raw, t.data.size() * 8);
  }
  WriteFileBytes(path, bytes);
}

Container Load(const std::string& path) {
  const std::string bytes = ReadFileBytes(path);
  Require(bytes.size() >= 16, "container too short: " + path, ErrorKind::kCorrupt);
  Require(std::memcmp(bytes.data(), kMagic, 8) == 0, "bad container magic: " + path, ErrorKind::kCorrupt);
  const uint64_t header_len = ReadU64(bytes, 8);
  Require(16 + header_len <= bytes.size(), "container header length exceeds file size: " + path, ErrorKind::kCorrupt);
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.substr(16, header_len));
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorKind::kCorrupt, std::string("container header is not valid JSON: ") + e.what());
  }
  Require(header.is_object() && header.contains("meta") && header.contains("arrays") &&
              header["meta"].is_object() && header["arrays"].is_array(),
          "container header missing meta/arrays: " + path, ErrorKind::kCorrupt);

  Container c;
  c.meta = header["meta"];
  const size_t payload_at = 16 + header_len;
  const uint64_t payload_count = (bytes.size() - payload_at) / 8;
  Require((bytes.size() - payload_at) % 8 == 0, "container payload is not a multiple of 8 bytes: " + path, ErrorKind::kCorrupt);
  uint64_t expect_offset = 0;
  for (const auto& a : header["arrays"]) {
    Require(a.is_object() && a.contains("name") && a.contains("shape") && a.contains("offset") &&
                a.contains("count"),
            "container array entry missing fields: " + path, ErrorKind::kCorrupt);
    const std::string name = a["name"].get<std::string>();
    Require(!c.arrays.count(name), "duplicate array name: " + name, ErrorKind::kCorrupt);
    Tensor t;
    t.shape = a["shape"].get<std::vector<int64_t>>();
    int64_t numel = 1;
    for (int64_t d : t.shape) {
      Require(d >= 0, "negative dimension in array " + name, ErrorKind::kCorrupt);
      numel *= d;
    }
    const uint64_t offset = a["offset"].get<uint64_t>();
    const uint64_t count = a["count"].get<uint64_t>();
    Require(count == static_cast<uint64_t>(numel), "array " + name + " count does not match its shape", ErrorKind::kCorrupt);
    Require(offset == expect_offset, "array " + name + " has a non-contiguous offset", ErrorKind::kCorrupt);
    Require(offset + count <= payload_count, "array " + name + " extends past the payload", ErrorKind::kCorrupt);
    t.data.resize(static_cast<size_t>(count));
    std::memcpy(t.data.data(), bytes.data() + payload_at + offset * 8, count * 8);
    expect_offset = offset + count;
    c.arrays.emplace(name, std::move(t));
  }
  Require(expect_offset == payload_count, "container payload size does not match the declared arrays: " + path, ErrorKind::kCorrupt);
  return c;
}

}  // namespace checkpoint
}  // namespace tdnas
