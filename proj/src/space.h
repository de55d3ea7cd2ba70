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

#ifndef TDNAS_SPACE_H_
#define TDNAS_SPACE_H_

#include <cstdint>
#include <string>
#include <vector>

#include "common.h"

namespace tdnas {
namespace space {

// One architecture drawn from the dynamic network.  `kernels` and `widths`
// have depth+1 entries: position 0 is the frame-level stem cell, positions
// 1..depth are the residual blocks.  `widths[0]` is the shared block
// input/output width, `widths[i]` (i>=1) is the bottleneck width inside block
// i, and `width_back` is the output width of the aggregation cell feeding the
// pooling head.
struct SubnetSpec {
  int depth = 0;
  std::vector<int> kernels;
  std::vector<int> widths;
  int width_back = 0;

  bool operator==(const SubnetSpec&) const = default;
  std::string ToString() const;
};

// Progressive training stages, in schedule order.  Each stage widens the
// sampling space of the previous one.
enum class Stage { kLargest, kKernel, kDepth, kWidth1, kWidth2 };

const std::vector<Stage>& StageOrder();
std::string StageName(Stage s);
Stage StageFromName(const std::string& name);

enum class Coupling {
  kIndependent,  // every dimension drawn on its own
  kGrid,         // one kernel and one width shared by all cells, back = ratio*C
};

// Static description of the dynamic network's outer limits, from which every
// per-stage sampling space is derived.
struct SpaceShape {
  int min_depth = 2;
  int max_depth = 4;
  std::vector<int> kernel_options = {1, 3, 5};
  int max_width_front = 512;
  int max_width_back = 1536;
  int granularity = 8;
  // Width multiplier menus for the two width stages.  Multiplied widths are
  // rounded down to the nearest multiple of the granularity.
  std::vector<double> width_multipliers_stage1 = {0.5, 0.75, 1.0};
  std::vector<double> width_multipliers_stage2 = {0.25, 0.35, 0.5, 0.75, 1.0};
};

int QuantizeWidth(double w, int granularity);

// A concrete sampling space: explicit option sets per dimension.  Option sets
// are sorted ascending; singleton sets mark dimensions pinned at one value.
struct SpaceConfig {
  std::vector<int> depth_options;
  std::vector<int> kernel_options;
  std::vector<int> width_front_options;
  std::vector<int> width_back_options;
  int granularity = 8;
  Stage stage = Stage::kWidth2;
  Coupling coupling = Coupling::kIndependent;
};

// Throws kBadConfig on malformed configs (unsorted sets, widths off the
// granularity grid, even kernels, grid coupling with a non-integer ratio...).
void ValidateConfig(const SpaceConfig& cfg);

struct Validation {
  bool ok = true;
  std::string reason;
};

// Structured membership check; reports the first violated constraint.
Validation Validate(const SubnetSpec& spec, const SpaceConfig& cfg);

// Number of distinct subnets in the space.  Throws kValidation if the exact
// count does not fit in 64 bits.
uint64_t SpaceSize(const SpaceConfig& cfg);

// Number of dimensions that can actually vary.  A pinned (singleton)
// dimension contributes nothing; dynamic kernels and front widths contribute
// one degree per cell position of the deepest option.
int DegreesOfFreedom(const SpaceConfig& cfg);

// Resumable uniform sampler position: raw draws consumed so far from the
// seeded stream.  Two samplers with equal state produce equal futures.
struct SamplerState {
  uint64_t seed = 0;
  uint64_t draw_count = 0;
};

SubnetSpec Sample(const SpaceConfig& cfg, SamplerState* state);

// All subnets of a grid-coupled config, ordered by (depth, kernel, width).
std::vector<SubnetSpec> EnumerateGrid(const SpaceConfig& cfg);

// Block one-hot encoding: depth block, then per cell position a kernel block
// and a width block (all zero beyond the spec's depth), then the back width
// block.  Distinct valid specs map to distinct vectors.
int64_t EncodingLength(const SpaceConfig& cfg);
std::vector<double> EncodeOneHot(const SubnetSpec& spec, const SpaceConfig& cfg);

SubnetSpec MinSpec(const SpaceConfig& cfg);
SubnetSpec MaxSpec(const SpaceConfig& cfg);

// Per-stage sampling spaces derived from the shape.  Dimensions not yet
// released by `stage` sit at their maximum as singleton sets.
SpaceConfig StageConfig(const SpaceShape& shape, Stage stage);
// Full space at the granularity grid (every multiple of `granularity` between
// the smallest stage-2 width and the maximum).
SpaceConfig FineConfig(const SpaceShape& shape);
// Grid-coupled slice of the fine space used for exhaustive sweeps.
SpaceConfig GridConfig(const SpaceShape& shape);

}  // namespace space
}  // namespace tdnas

#endif  // TDNAS_SPACE_H_
