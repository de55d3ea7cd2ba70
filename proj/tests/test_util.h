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

#ifndef TDNAS_TESTS_TEST_UTIL_H_
#define TDNAS_TESTS_TEST_UTIL_H_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "common.h"
#include "space.h"
#include "supernet.h"
#include "tensor.h"

namespace tdnas {
namespace testutil {

// Small search-space shape used across the tests: same structure as the
// published one, scaled so forwards run in milliseconds.  The stage-2
// multiplier menu avoids values that would quantize onto each other at
// width 64.
inline space::SpaceShape ToyShape() {
  space::SpaceShape s;
  s.max_width_front = 64;
  s.max_width_back = 192;
  s.width_multipliers_stage2 = {0.25, 0.5, 0.75, 1.0};
  return s;
}

inline supernet::SupernetConfig ToySupernetConfig() {
  supernet::SupernetConfig cfg;
  cfg.shape = ToyShape();
  cfg.in_channels = 20;
  cfg.res2net_scale = 4;
  cfg.se_bottleneck_cap = 32;
  cfg.att_bottleneck = 32;
  cfg.embedding_dim = 48;
  cfg.default_frames = 64;
  return cfg;
}

// Full-size configuration with the published dimensions (the struct defaults).
inline supernet::SupernetConfig FullSupernetConfig() {
  return supernet::SupernetConfig{};
}

// Named full-size subnets used by the cost-model checks, written as
// (depth, kernels, widths, back).
inline space::SubnetSpec NamedSpec(const std::string& which) {
  auto mk = [](int d, std::vector<int> k, std::vector<int> w, int back) {
    space::SubnetSpec s;
    s.depth = d;
    s.kernels = std::move(k);
    s.widths = std::move(w);
    s.width_back = back;
    return s;
  };
  if (which == "max") return mk(4, {5, 5, 5, 5, 5}, {512, 512, 512, 512, 512}, 1536);
  if (which == "kmin") return mk(4, {1, 1, 1, 1, 1}, {512, 512, 512, 512, 512}, 1536);
  if (which == "dmin") return mk(2, {1, 1, 1}, {512, 512, 512}, 1536);
  if (which == "c1min") return mk(2, {1, 1, 1}, {256, 256, 256}, 768);
  if (which == "c2min") return mk(2, {1, 1, 1}, {128, 128, 128}, 384);
  if (which == "base") return mk(3, {5, 3, 3, 3}, {512, 512, 512, 512}, 1536);
  if (which == "mobile") return mk(3, {5, 3, 3, 3}, {384, 256, 256, 256}, 768);
  if (which == "small") return mk(2, {3, 3, 3}, {256, 256, 256}, 400);
  Fail(ErrorKind::kInternal, "NamedSpec: unknown name " + which);
}

// Deterministic pseudo-feature batch [b, c, t].
inline Tensor RandomBatch(int64_t b, int64_t c, int64_t t, uint64_t seed) {
  Rng rng(seed);
  Tensor x({b, c, t});
  for (double& v : x.data) v = rng.Normal();
  return x;
}

inline std::vector<space::SubnetSpec> SampleSpecs(const space::SpaceConfig& cfg,
                                                  int n, uint64_t seed) {
  space::SamplerState st{seed, 0};
  std::vector<space::SubnetSpec> out;
  out.reserve(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) out.push_back(space::Sample(cfg, &st));
  return out;
}

inline double MaxAbsDiff(const Tensor& a, const Tensor& b) {
  Check(a.SameShape(b), "MaxAbsDiff: shape mismatch");
  double m = 0;
  for (size_t i = 0; i < a.data.size(); ++i) {
    const double d = std::fabs(a.data[i] - b.data[i]);
    if (d > m) m = d;
  }
  return m;
}

inline double MaxRelDiff(const Tensor& a, const Tensor& b) {
  Check(a.SameShape(b), "MaxRelDiff: shape mismatch");
  double m = 0;
  for (size_t i = 0; i < a.data.size(); ++i) {
    const double scale =
        std::max({1.0, std::fabs(a.data[i]), std::fabs(b.data[i])});
    const double d = std::fabs(a.data[i] - b.data[i]) / scale;
    if (d > m) m = d;
  }
  return m;
}

inline bool BitEqual(const Tensor& a, const Tensor& b) {
  if (!a.SameShape(b)) return false;
  for (size_t i = 0; i < a.data.size(); ++i)
    if (a.data[i] != b.data[i]) return false;
  return true;
}

// Unique path in the system temp directory.
inline std::string TempPath(const std::string& stem) {
  static int counter = 0;
  const std::string name =
      "tdnas_test_" + stem + "_" + std::to_string(++counter);
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace testutil
}  // namespace tdnas

#endif  // TDNAS_TESTS_TEST_UTIL_H_
