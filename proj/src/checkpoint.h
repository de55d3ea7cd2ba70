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

#ifndef TDNAS_CHECKPOINT_H_
#define TDNAS_CHECKPOINT_H_

#include <map>
#include <string>

#include "json.hpp"
#include "tensor.h"

namespace tdnas {
namespace checkpoint {

// Single-file array container.  Layout:
//   bytes 0..7    magic "TDNASCK1"
//   bytes 8..15   little-endian u64 header length in bytes
//   header        UTF-8 JSON: {"meta": {...}, "arrays": [{"name","shape","offset","count"}...]}
//   payload       concatenated little-endian float64 data, offsets in elements
// Arrays are stored sorted by name and offsets are assigned densely in that
// order, so saving the same content always produces identical bytes.
struct Container {
  nlohmann::json meta;  // must be a JSON object
  std::map<std::string, Tensor> arrays;
};

void Save(const Container& c, const std::string& path);
Container Load(const std::string& path);

// Low-level helpers shared with other file writers.
std::string ReadFileBytes(const std::string& path);
void WriteFileBytes(const std::string& path, const std::string& bytes);

}  // namespace checkpoint
}  // namespace tdnas

#endif  // TDNAS_CHECKPOINT_H_
