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

#include "space.h"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace tdnas {
namespace space {

namespace {

bool Contains(const std::vector<int>& v, int x) {
  return std::find(v.begin(), v.end(), x) != v.end();
}

int IndexOf(const std::vector<int>& v, int x) {
  auto it = std::find(v.begin(), v.end(), x);
  Check(it != v.end(), "IndexOf: value not present");
  return static_cast<int>(it - v.begin());
}

void CheckOptionSet(const std::vector<int>& v, const std::string& what) {
  Require(!v.empty(), "SpaceConfig: empty " + what, ErrorKind::kBadConfig);
  for (size_t i = 1; i < v.size(); ++i)
    Require(v[i - 1] < v[i], "SpaceConfig: " + what + " must be strictly increasing",
            ErrorKind::kBadConfig);
}

int BackRatio(const SpaceConfig& cfg) {
  const int front_max = cfg.width_front_options.back();
  const int back_max = cfg.width_back_options.back();
  Require(back_max % front_max == 0,
          "SpaceConfig: grid coupling needs back/front width ratio to be an "
          "integer",
          ErrorKind::kBadConfig);
  return back_max / front_max;
}

}  // namespace

std::string SubnetSpec::ToString() const {
  std::ostringstream os;
  os << "(d=" << depth << " k=[";
  for (size_t i = 0; i < kernels.size(); ++i) os << (i ? "," : "") << kernels[i];
  os << "] w=[";
  for (size_t i = 0; i < widths.size(); ++i) os << (i ? "," : "") << widths[i];
  os << "] b=" << width_back << ")";
  return os.str();
}

const std::vector<Stage>& StageOrder() {
  static const std::vector<Stage> kOrder = {Stage::kLargest, Stage::kKernel,
                                            Stage::kDepth, Stage::kWidth1,
                                            Stage::kWidth2};
  return kOrder;
}

std::string StageName(Stage s) {
  switch (s) {
    case Stage::kLargest: return "largest";
    case Stage::kKernel: return "kernel";
    case Stage::kDepth: return "depth";
    case Stage::kWidth1: return "width1";
    case Stage::kWidth2: return "width2";
  }
  Fail(ErrorKind::kInternal, "StageName: bad stage value");
}

Stage StageFromName(const std::string& name) {
  for (Stage s : StageOrder())
    if (StageName(s) == name) return s;
  Fail(ErrorKind::kInvalidArgument, "unknown stage name: " + name);
}

int QuantizeWidth(double w, int granularity) {
  Require(granularity >= 1, "QuantizeWidth: granularity must be positive");
  const int q = static_cast<int>(std::floor(w / granularity)) * granularity;
  Require(q >= granularity, "QuantizeWidth: width collapsed to zero");
  return q;
}

void ValidateConfig(const SpaceConfig& cfg) {
  CheckOptionSet(cfg.depth_options, "depth options");
  CheckOptionSet(cfg.kernel_options, "kernel options");
  CheckOptionSet(cfg.width_front_options, "front width options");
  CheckOptionSet(cfg.width_back_options, "back width options");
  Require(cfg.granularity >= 1, "SpaceConfig: granularity must be positive",
          ErrorKind::kBadConfig);
  Require(cfg.depth_options.front() >= 1, "SpaceConfig: depth must be >= 1",
          ErrorKind::kBadConfig);
  for (int k : cfg.kernel_options)
    Require(k >= 1 && k <= 5 && k % 2 == 1,
            "SpaceConfig: kernel options must be odd and between 1 and 5",
            ErrorKind::kBadConfig);
  for (int w : cfg.width_front_options)
    Require(w >= 1 && w % cfg.granularity == 0,
            "SpaceConfig: front widths must sit on the granularity grid",
            ErrorKind::kBadConfig);
  for (int w : cfg.width_back_options)
    Require(w >= 1 && w % cfg.granularity == 0,
            "SpaceConfig: back widths must sit on the granularity grid",
            ErrorKind::kBadConfig);
  if (cfg.stage == Stage::kLargest) {
    Require(cfg.depth_options.size() == 1 && cfg.kernel_options.size() == 1 &&
                cfg.width_front_options.size() == 1 &&
                cfg.width_back_options.size() == 1,
            "SpaceConfig: the largest stage pins every dimension",
            ErrorKind::kBadConfig);
  }
  if (cfg.coupling == Coupling::kGrid) {
    const int ratio = BackRatio(cfg);
    Require(cfg.width_back_options.size() == cfg.width_front_options.size(),
            "SpaceConfig: grid coupling needs one back width per front width",
            ErrorKind::kBadConfig);
    for (size_t i = 0; i < cfg.width_front_options.size(); ++i)
      Require(cfg.width_back_options[i] == ratio * cfg.width_front_options[i],
              "SpaceConfig: grid coupling back widths must equal ratio * front",
              ErrorKind::kBadConfig);
  }
}

Validation Validate(const SubnetSpec& spec, const SpaceConfig& cfg) {
  Validation v;
  auto reject = [&v](const std::string& why) {
    v.ok = false;
    v.reason = why;
    return v;
  };
  if (!Contains(cfg.depth_options, spec.depth))
    return reject("depth " + std::to_string(spec.depth) + " not in options");
  const size_t want = static_cast<size_t>(spec.depth) + 1;
  if (spec.kernels.size() != want)
    return reject("kernel list must have depth+1 entries, got " +
                  std::to_string(spec.kernels.size()));
  if (spec.widths.size() != want)
    return reject("width list must have depth+1 entries, got " +
                  std::to_string(spec.widths.size()));
  for (size_t i = 0; i < want; ++i)
    if (!Contains(cfg.kernel_options, spec.kernels[i]))
      return reject("kernel " + std::to_string(spec.kernels[i]) +
                    " at position " + std::to_string(i) + " not in options");
  for (size_t i = 0; i < want; ++i)
    if (!Contains(cfg.width_front_options, spec.widths[i]))
      return reject("width " + std::to_string(spec.widths[i]) +
                    " at position " + std::to_string(i) + " not in options");
  if (!Contains(cfg.width_back_options, spec.width_back))
    return reject("back width " + std::to_string(spec.width_back) +
                  " not in options");
  if (cfg.coupling == Coupling::kGrid) {
    for (size_t i = 1; i < want; ++i) {
      if (spec.kernels[i] != spec.kernels[0])
        return reject("grid coupling requires one shared kernel size");
      if (spec.widths[i] != spec.widths[0])
        return reject("grid coupling requires one shared width");
    }
    if (spec.width_back != BackRatio(cfg) * spec.widths[0])
      return reject("grid coupling requires back width = ratio * front width");
  }
  return v;
}

uint64_t SpaceSize(const SpaceConfig& cfg) {
  ValidateConfig(cfg);
  if (cfg.coupling == Coupling::kGrid) {
    return static_cast<uint64_t>(cfg.depth_options.size()) *
           cfg.kernel_options.size() * cfg.width_front_options.size();
  }
  const unsigned __int128 nk = cfg.kernel_options.size();
  const unsigned __int128 nf = cfg.width_front_options.size();
  const unsigned __int128 nb = cfg.width_back_options.size();
  unsigned __int128 total = 0;
  for (int d : cfg.depth_options) {
    unsigned __int128 per_depth = 1;
    for (int i = 0; i < d + 1; ++i) per_depth *= nk * nf;
    total += per_depth;
  }
  total *= nb;
  Require(total <= static_cast<unsigned __int128>(UINT64_MAX),
          "SpaceSize: count exceeds 64 bits", ErrorKind::kValidation);
  return static_cast<uint64_t>(total);
}

int DegreesOfFreedom(const SpaceConfig& cfg) {
  ValidateConfig(cfg);
  const int positions = cfg.depth_options.back() + 1;
  if (cfg.coupling == Coupling::kGrid) {
    int dof = 0;
    if (cfg.depth_options.size() > 1) ++dof;
    if (cfg.kernel_options.size() > 1) ++dof;
    if (cfg.width_front_options.size() > 1) ++dof;
    return dof;
  }
  int dof = 0;
  if (cfg.depth_options.size() > 1) ++dof;
  if (cfg.kernel_options.size() > 1) dof += positions;
  if (cfg.width_front_options.size() > 1) dof += positions;
  if (cfg.width_back_options.size() > 1) ++dof;
  return dof;
}

SubnetSpec Sample(const SpaceConfig& cfg, SamplerState* state) {
  ValidateConfig(cfg);
  Require(state != nullptr, "Sample: null sampler state");
  Rng rng(state->seed, state->draw_count);
  auto pick = [&rng](const std::vector<int>& opts) {
    return opts[rng.UniformIndex(opts.size())];
  };
  SubnetSpec spec;
  spec.depth = pick(cfg.depth_options);
  const int cells = spec.depth + 1;
  if (cfg.coupling == Coupling::kGrid) {
    const int k = pick(cfg.kernel_options);
    const int w = pick(cfg.width_front_options);
    spec.kernels.assign(static_cast<size_t>(cells), k);
    spec.widths.assign(static_cast<size_t>(cells), w);
    spec.width_back = BackRatio(cfg) * w;
  } else {
    for (int i = 0; i < cells; ++i) spec.kernels.push_back(pick(cfg.kernel_options));
    for (int i = 0; i < cells; ++i) spec.widths.push_back(pick(cfg.width_front_options));
    spec.width_back = pick(cfg.width_back_options);
  }
  state->draw_count = rng.draw_count();
  return spec;
}

std::vector<SubnetSpec> EnumerateGrid(const SpaceConfig& cfg) {
  ValidateConfig(cfg);
  Require(cfg.coupling == Coupling::kGrid,
          "EnumerateGrid: config is not grid coupled");
  const int ratio = BackRatio(cfg);
  std::vector<SubnetSpec> out;
  for (int d : cfg.depth_options) {
    for (int k : cfg.kernel_options) {
      for (int w : cfg.width_front_options) {
        SubnetSpec s;
        s.depth = d;
        s.kernels.assign(static_cast<size_t>(d) + 1, k);
        s.widths.assign(static_cast<size_t>(d) + 1, w);
        s.width_back = ratio * w;
        out.push_back(std::move(s));
      }
    }
  }
  return out;
}

int64_t EncodingLength(const SpaceConfig& cfg) {
  ValidateConfig(cfg);
  const int64_t positions = cfg.depth_options.back() + 1;
  return static_cast<int64_t>(cfg.depth_options.size()) +
         positions * static_cast<int64_t>(cfg.kernel_options.size()) +
         positions * static_cast<int64_t>(cfg.width_front_options.size()) +
         static_cast<int64_t>(cfg.width_back_options.size());
}

std::vector<double> EncodeOneHot(const SubnetSpec& spec,
                                 const SpaceConfig& cfg) {
  Validation v = Validate(spec, cfg);
  Require(v.ok, "EncodeOneHot: spec outside space: " + v.reason,
          ErrorKind::kValidation);
  const int positions = cfg.depth_options.back() + 1;
  std::vector<double> out(static_cast<size_t>(EncodingLength(cfg)), 0.0);
  size_t off = 0;
  out[off + static_cast<size_t>(IndexOf(cfg.depth_options, spec.depth))] = 1.0;
  off += cfg.depth_options.size();
  for (int p = 0; p < positions; ++p) {
    if (p <= spec.depth)
      out[off + static_cast<size_t>(
                    IndexOf(cfg.kernel_options, spec.kernels[static_cast<size_t>(p)]))] = 1.0;
    off += cfg.kernel_options.size();
  }
  for (int p = 0; p < positions; ++p) {
    if (p <= spec.depth)
      out[off + static_cast<size_t>(
                    IndexOf(cfg.width_front_options, spec.widths[static_cast<size_t>(p)]))] = 1.0;
    off += cfg.width_front_options.size();
  }
  out[off + static_cast<size_t>(IndexOf(cfg.width_back_options, spec.width_back))] = 1.0;
  return out;
}

SubnetSpec MinSpec(const SpaceConfig& cfg) {
  ValidateConfig(cfg);
  SubnetSpec s;
  s.depth = cfg.depth_options.front();
  s.kernels.assign(static_cast<size_t>(s.depth) + 1, cfg.kernel_options.front());
  s.widths.assign(static_cast<size_t>(s.depth) + 1,
                  cfg.width_front_options.front());
  s.width_back = cfg.coupling == Coupling::kGrid
                     ? BackRatio(cfg) * s.widths[0]
                     : cfg.width_back_options.front();
  return s;
}

SubnetSpec MaxSpec(const SpaceConfig& cfg) {
  ValidateConfig(cfg);
  SubnetSpec s;
  s.depth = cfg.depth_options.back();
  s.kernels.assign(static_cast<size_t>(s.depth) + 1, cfg.kernel_options.back());
  s.widths.assign(static_cast<size_t>(s.depth) + 1,
                  cfg.width_front_options.back());
  s.width_back = cfg.coupling == Coupling::kGrid ? BackRatio(cfg) * s.widths[0]
                                                 : cfg.width_back_options.back();
  return s;
}

namespace {

std::vector<int> MultiplierWidths(const std::vector<double>& mults, int max_w,
                                  int granularity) {
  std::set<int> vals;
  for (double m : mults) vals.insert(QuantizeWidth(m * max_w, granularity));
  return std::vector<int>(vals.begin(), vals.end());
}

std::vector<int> GridWidths(int lo, int hi, int granularity) {
  std::vector<int> out;
  for (int w = lo; w <= hi; w += granularity) out.push_back(w);
  return out;
}

void CheckShape(const SpaceShape& shape) {
  Require(shape.min_depth >= 1 && shape.min_depth <= shape.max_depth,
          "SpaceShape: bad depth range", ErrorKind::kBadConfig);
  Require(shape.max_width_front % shape.granularity == 0 &&
              shape.max_width_back % shape.granularity == 0,
          "SpaceShape: max widths must sit on the granularity grid",
          ErrorKind::kBadConfig);
  Require(!shape.kernel_options.empty(), "SpaceShape: no kernel options",
          ErrorKind::kBadConfig);
  Require(!shape.width_multipliers_stage1.empty() &&
              !shape.width_multipliers_stage2.empty(),
          "SpaceShape: empty multiplier menu", ErrorKind::kBadConfig);
}

}  // namespace

SpaceConfig StageConfig(const SpaceShape& shape, Stage stage) {
  CheckShape(shape);
  SpaceConfig cfg;
  cfg.granularity = shape.granularity;
  cfg.stage = stage;
  cfg.coupling = Coupling::kIndependent;
  cfg.depth_options = {shape.max_depth};
  cfg.kernel_options = {shape.kernel_options.back()};
  cfg.width_front_options = {shape.max_width_front};
  cfg.width_back_options = {shape.max_width_back};
  // Stages accumulate: each one releases its dimension and keeps all earlier
  // releases in place.
  auto release_kernel = [&] { cfg.kernel_options = shape.kernel_options; };
  auto release_depth = [&] {
    cfg.depth_options.clear();
    for (int d = shape.min_depth; d <= shape.max_depth; ++d)
      cfg.depth_options.push_back(d);
  };
  auto release_width = [&](const std::vector<double>& mults) {
    cfg.width_front_options =
        MultiplierWidths(mults, shape.max_width_front, shape.granularity);
    cfg.width_back_options =
        MultiplierWidths(mults, shape.max_width_back, shape.granularity);
  };
  switch (stage) {
    case Stage::kLargest:
      break;
    case Stage::kKernel:
      release_kernel();
      break;
    case Stage::kDepth:
      release_kernel();
      release_depth();
      break;
    case Stage::kWidth1:
      release_kernel();
      release_depth();
      release_width(shape.width_multipliers_stage1);
      break;
    case Stage::kWidth2:
      release_kernel();
      release_depth();
      release_width(shape.width_multipliers_stage2);
      break;
  }
  ValidateConfig(cfg);
  return cfg;
}

SpaceConfig FineConfig(const SpaceShape& shape) {
  CheckShape(shape);
  SpaceConfig cfg = StageConfig(shape, Stage::kWidth2);
  cfg.width_front_options = GridWidths(cfg.width_front_options.front(),
                                       shape.max_width_front, shape.granularity);
  cfg.width_back_options = GridWidths(cfg.width_back_options.front(),
                                      shape.max_width_back, shape.granularity);
  ValidateConfig(cfg);
  return cfg;
}

SpaceConfig GridConfig(const SpaceShape& shape) {
  SpaceConfig cfg = FineConfig(shape);
  Require(shape.max_width_back % shape.max_width_front == 0,
          "GridConfig: back/front ratio must be an integer",
          ErrorKind::kBadConfig);
  const int ratio = shape.max_width_back / shape.max_width_front;
  cfg.coupling = Coupling::kGrid;
  cfg.width_back_options.clear();
  for (int w : cfg.width_front_options)
    cfg.width_back_options.push_back(ratio * w);
  ValidateConfig(cfg);
  return cfg;
}

}  // namespace space
}  // namespace tdnas
