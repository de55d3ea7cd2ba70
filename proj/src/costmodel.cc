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

#include "costmodel.h"

#include <algorithm>
#include <chrono>
#include <set>
#include <sstream>

#include "nn_kernels.h"

namespace tdnas {
namespace costmodel {

int64_t SeHidden(const supernet::SupernetConfig& cfg, int64_t c1) {
  return std::max<int64_t>(
      1, std::min<int64_t>(c1 / cfg.se_reduction, cfg.se_bottleneck_cap));
}

int64_t StemMacs(int64_t c0, int64_t c1, int64_t k, int64_t frames) {
  return c1 * c0 * k * frames;
}

int64_t BlockMacs(const supernet::SupernetConfig& cfg, int64_t c1, int64_t c2,
                  int64_t k, int64_t frames) {
  const int64_t s = cfg.res2net_scale;
  const int64_t ws = c2 / s;
  const int64_t se_h = SeHidden(cfg, c1);
  int64_t macs = c2 * c1 * frames;                // 1x1 in
  macs += (s - 1) * ws * ws * k * frames;         // res2 ladder
  macs += c1 * c2 * frames;                       // 1x1 out
  macs += se_h * c1 + c1 * se_h + c1 * frames;    // squeeze, excite, gate
  return macs;
}

int64_t AggMacs(int64_t in_width, int64_t c3, int64_t frames) {
  return c3 * in_width * frames;
}

int64_t PoolMacs(const supernet::SupernetConfig& cfg, int64_t c3,
                 int64_t frames) {
  const int64_t a = cfg.att_bottleneck;
  return a * c3 * frames + c3 * a * frames + 3 * c3 * frames + c3;
}

int64_t FcMacs(const supernet::SupernetConfig& cfg, int64_t c3) {
  return static_cast<int64_t>(cfg.embedding_dim) * 2 * c3;
}

int64_t CountMacs(const space::SubnetSpec& spec,
                  const supernet::SupernetConfig& cfg, int64_t frames) {
  supernet::CheckStructural(spec, cfg);
  Require(frames >= 1, "CountMacs: frames must be positive");
  const int64_t c1 = spec.widths[0];
  const int64_t c3 = spec.width_back;
  int64_t macs = StemMacs(cfg.in_channels, c1, spec.kernels[0], frames);
  for (int i = 1; i <= spec.depth; ++i)
    macs += BlockMacs(cfg, c1, spec.widths[static_cast<size_t>(i)],
                      spec.kernels[static_cast<size_t>(i)], frames);
  macs += AggMacs(static_cast<int64_t>(spec.depth) * c1, c3, frames);
  macs += PoolMacs(cfg, c3, frames);
  macs += FcMacs(cfg, c3);
  return macs;
}

int64_t CountParams(const space::SubnetSpec& spec,
                    const supernet::SupernetConfig& cfg) {
  supernet::CheckStructural(spec, cfg);
  const int64_t c1 = spec.widths[0];
  const int64_t c3 = spec.width_back;
  const int64_t s = cfg.res2net_scale;
  const int64_t se_h = SeHidden(cfg, c1);
  int64_t p = 0;
  // stem: conv + bias + BN affine
  p += c1 * cfg.in_channels * spec.kernels[0] + c1 + 2 * c1;
  for (int i = 1; i <= spec.depth; ++i) {
    const int64_t c2 = spec.widths[static_cast<size_t>(i)];
    const int64_t k = spec.kernels[static_cast<size_t>(i)];
    const int64_t ws = c2 / s;
    p += c2 * c1 + c2 + 2 * c2;                    // 1x1 in + bn1
    p += (s - 1) * (ws * ws * k + ws) + 2 * c2;    // ladder + bn2
    p += c1 * c2 + c1 + 2 * c1;                    // 1x1 out + bn3
    p += se_h * c1 + se_h + c1 * se_h + c1;        // squeeze-excitation
  }
  p += c3 * static_cast<int64_t>(spec.depth) * c1 + c3;  // aggregation
  const int64_t a = cfg.att_bottleneck;
  p += a * c3 + a + c3 * a + c3 + 2 * (2 * c3);    // attention + pool bn
  p += static_cast<int64_t>(cfg.embedding_dim) * 2 * c3 + cfg.embedding_dim +
       2 * cfg.embedding_dim;                      // fc + bn
  return p;
}

int64_t InstrumentedMacs(const supernet::Supernet& net,
                         const space::SubnetSpec& spec, int64_t frames) {
  Require(frames >= 1, "InstrumentedMacs: frames must be positive");
  supernet::ExportedSubnet sub = supernet::ExportSubnet(net, spec);
  Tensor x({1, net.cfg.in_channels, frames});
  nn::CostMeter meter;
  supernet::ForwardExported(sub, x, &meter);
  return meter.macs;
}

std::string CellKey(const std::string& cell, int64_t kernel, int64_t in_width,
                    int64_t out_width, int64_t frames) {
  std::ostringstream os;
  os << cell << ":k" << kernel << ":i" << in_width << ":o" << out_width << ":t"
     << frames;
  return os.str();
}

std::vector<std::string> RequiredKeys(const space::SpaceConfig& sc,
                                      const supernet::SupernetConfig& cfg,
                                      int64_t frames) {
  space::ValidateConfig(sc);
  std::set<std::string> keys;
  for (int k : sc.kernel_options)
    for (int c1 : sc.width_front_options)
      keys.insert(CellKey("stem", k, cfg.in_channels, c1, frames));
  for (int k : sc.kernel_options)
    for (int c1 : sc.width_front_options)
      for (int c2 : sc.width_front_options)
        keys.insert(CellKey("block", k, c1, c2, frames));
  for (int d : sc.depth_options)
    for (int c1 : sc.width_front_options)
      for (int c3 : sc.width_back_options)
        keys.insert(CellKey("agg", 1, static_cast<int64_t>(d) * c1, c3, frames));
  for (int c3 : sc.width_back_options) {
    keys.insert(CellKey("pool", 1, c3, 2 * static_cast<int64_t>(c3), frames));
    keys.insert(CellKey("fc", 1, 2 * static_cast<int64_t>(c3),
                        cfg.embedding_dim, frames));
  }
  return {keys.begin(), keys.end()};
}

namespace {

struct ParsedKey {
  std::string cell;
  int64_t kernel = 0, in_width = 0, out_width = 0, frames = 0;
};

ParsedKey ParseKey(const std::string& key) {
  ParsedKey p;
  std::istringstream is(key);
  std::string part;
  std::vector<std::string> parts;
  while (std::getline(is, part, ':')) parts.push_back(part);
  Require(parts.size() == 5, "latency key malformed: " + key,
          ErrorKind::kCorrupt);
  p.cell = parts[0];
  p.kernel = std::stoll(parts[1].substr(1));
  p.in_width = std::stoll(parts[2].substr(1));
  p.out_width = std::stoll(parts[3].substr(1));
  p.frames = std::stoll(parts[4].substr(1));
  return p;
}

int64_t SyntheticCellMacs(const ParsedKey& p,
                          const supernet::SupernetConfig& cfg) {
  if (p.cell == "stem") return StemMacs(p.in_width, p.out_width, p.kernel, p.frames);
  if (p.cell == "block") return BlockMacs(cfg, p.in_width, p.out_width, p.kernel, p.frames);
  if (p.cell == "agg") return AggMacs(p.in_width, p.out_width, p.frames);
  if (p.cell == "pool") return PoolMacs(cfg, p.in_width, p.frames);
  if (p.cell == "fc") return FcMacs(cfg, p.in_width / 2);
  Fail(ErrorKind::kCorrupt, "latency key has unknown cell: " + p.cell);
}

Tensor RandomTensor(std::vector<int64_t> shape, Rng* rng) {
  Tensor t(std::move(shape));
  for (double& v : t.data) v = 0.1 * rng->Normal();
  return t;
}

// One wall-clock execution of the cell named by `p`, in milliseconds.
double RunCellOnce(const ParsedKey& p, const supernet::SupernetConfig& cfg,
                   Rng* rng) {
  using Clock = std::chrono::steady_clock;
  const int64_t t = p.frames;
  const auto t0 = Clock::now();
  if (p.cell == "stem") {
    Tensor x = RandomTensor({1, p.in_width, t}, rng);
    Tensor w = RandomTensor({p.out_width, p.in_width, p.kernel}, rng);
    Tensor b = RandomTensor({p.out_width}, rng);
    nn::Conv1dSame(x, w, b, 1, 1, nullptr);
  } else if (p.cell == "block") {
    const int64_t c1 = p.in_width, c2 = p.out_width;
    const int64_t s = cfg.res2net_scale, ws = c2 / s;
    const int64_t se_h = SeHidden(cfg, c1);
    const int64_t dil = cfg.dilations.empty() ? 1 : cfg.dilations[0];
    Tensor x = RandomTensor({1, c1, t}, rng);
    Tensor ones({c2}), zeros({c2});
    for (double& v : ones.data) v = 1.0;
    Tensor a = nn::Conv1dSame(x, RandomTensor({c2, c1, 1}, rng),
                              RandomTensor({c2}, rng), 1, 1, nullptr);
    a = nn::BnApply(nn::Relu(a), ones, zeros, zeros, ones, nn::kBnEps);
    std::vector<Tensor> outs;
    for (int64_t j = 0; j < s; ++j) {
      Tensor yj = nn::IndexSelect(a, 1, [&] {
        std::vector<int64_t> idx;
        for (int64_t i = 0; i < ws; ++i) idx.push_back(j * ws + i);
        return idx;
      }());
      if (j == 0) {
        outs.push_back(std::move(yj));
        continue;
      }
      Tensor inp = std::move(yj);
      if (j > 1)
        for (size_t n = 0; n < inp.data.size(); ++n)
          inp.data[n] += outs.back().data[n];
      outs.push_back(nn::Conv1dSame(inp, RandomTensor({ws, ws, p.kernel}, rng),
                                    RandomTensor({ws}, rng), dil, 1, nullptr));
    }
    std::vector<const Tensor*> op;
    for (const Tensor& o : outs) op.push_back(&o);
    Tensor r = nn::ConcatChannels(op);
    r = nn::BnApply(nn::Relu(r), ones, zeros, zeros, ones, nn::kBnEps);
    Tensor cc = nn::Conv1dSame(r, RandomTensor({c1, c2, 1}, rng),
                               RandomTensor({c1}, rng), 1, 1, nullptr);
    Tensor m = nn::MeanTime(cc);
    Tensor u = nn::Relu(nn::Linear(m, RandomTensor({se_h, c1}, rng),
                                   RandomTensor({se_h}, rng), nullptr));
    Tensor g = nn::SigmoidT(nn::Linear(u, RandomTensor({c1, se_h}, rng),
                                       RandomTensor({c1}, rng), nullptr));
    nn::BroadcastMulTime(cc, g, nullptr);
  } else if (p.cell == "agg") {
    Tensor x = RandomTensor({1, p.in_width, t}, rng);
    nn::Relu(nn::Conv1dSame(x, RandomTensor({p.out_width, p.in_width, 1}, rng),
                            RandomTensor({p.out_width}, rng), 1, 1, nullptr));
  } else if (p.cell == "pool") {
    const int64_t c3 = p.in_width, a = cfg.att_bottleneck;
    Tensor x = RandomTensor({1, c3, t}, rng);
    Tensor e = nn::TanhT(nn::Conv1dSame(x, RandomTensor({a, c3, 1}, rng),
                                        RandomTensor({a}, rng), 1, 1, nullptr));
    Tensor sc = nn::Conv1dSame(e, RandomTensor({c3, a, 1}, rng),
                               RandomTensor({c3}, rng), 1, 1, nullptr);
    nn::WeightedStats(x, nn::SoftmaxTime(sc), nn::kPoolEps, nullptr);
  } else if (p.cell == "fc") {
    Tensor x = RandomTensor({1, p.in_width}, rng);
    nn::Linear(x, RandomTensor({p.out_width, p.in_width}, rng),
               RandomTensor({p.out_width}, rng), nullptr);
  } else {
    Fail(ErrorKind::kInvalidArgument, "unknown cell kind: " + p.cell);
  }
  const auto t1 = Clock::now();
  return std::chrono::duration<double, std::milli>(t1 - t0).count();
}

}  // namespace

LatencyTable BuildLatencyTable(const space::SpaceConfig& sc,
                               const supernet::SupernetConfig& cfg,
                               int64_t frames,
                               const LatencyRunnerOptions& opts) {
  Require(opts.repeats >= 1, "BuildLatencyTable: repeats must be positive");
  LatencyTable table;
  table.device = opts.synthetic ? "synthetic" : "host";
  table.repeats = opts.repeats;
  table.warmup = opts.warmup;
  table.frames = static_cast<int>(frames);
  Rng rng(opts.seed);
  for (const std::string& key : RequiredKeys(sc, cfg, frames)) {
    const ParsedKey p = ParseKey(key);
    if (opts.synthetic) {
      table.ms[key] =
          static_cast<double>(SyntheticCellMacs(p, cfg)) * 1e-6 + 0.01;
      continue;
    }
    for (int i = 0; i < opts.warmup; ++i) RunCellOnce(p, cfg, &rng);
    std::vector<double> times;
    for (int i = 0; i < opts.repeats; ++i) times.push_back(RunCellOnce(p, cfg, &rng));
    std::sort(times.begin(), times.end());
    table.ms[key] = times[times.size() / 2];
  }
  return table;
}

double EstimateLatencyMs(const space::SubnetSpec& spec,
                         const supernet::SupernetConfig& cfg,
                         const LatencyTable& table) {
  supernet::CheckStructural(spec, cfg);
  const int64_t t = table.frames;
  const int64_t c1 = spec.widths[0];
  const int64_t c3 = spec.width_back;
  std::vector<std::string> keys;
  keys.push_back(CellKey("stem", spec.kernels[0], cfg.in_channels, c1, t));
  for (int i = 1; i <= spec.depth; ++i)
    keys.push_back(CellKey("block", spec.kernels[static_cast<size_t>(i)], c1,
                           spec.widths[static_cast<size_t>(i)], t));
  keys.push_back(CellKey("agg", 1, static_cast<int64_t>(spec.depth) * c1, c3, t));
  keys.push_back(CellKey("pool", 1, c3, 2 * c3, t));
  keys.push_back(CellKey("fc", 1, 2 * c3, cfg.embedding_dim, t));
  double total = 0.0;
  for (const std::string& key : keys) {
    auto it = table.ms.find(key);
    Require(it != table.ms.end(), "latency table has no entry for " + key,
            ErrorKind::kValidation);
    total += it->second;
  }
  return total;
}

CostReport MakeReport(const space::SubnetSpec& spec,
                      const supernet::SupernetConfig& cfg, int64_t frames,
                      const LatencyTable* table) {
  CostReport r;
  r.frames = frames;
  r.macs = CountMacs(spec, cfg, frames);
  r.params = CountParams(spec, cfg);
  const int64_t c1 = spec.widths[0];
  const int64_t c3 = spec.width_back;
  r.macs_by_cell["stem"] = StemMacs(cfg.in_channels, c1, spec.kernels[0], frames);
  int64_t blocks = 0;
  for (int i = 1; i <= spec.depth; ++i)
    blocks += BlockMacs(cfg, c1, spec.widths[static_cast<size_t>(i)],
                        spec.kernels[static_cast<size_t>(i)], frames);
  r.macs_by_cell["blocks"] = blocks;
  r.macs_by_cell["agg"] = AggMacs(static_cast<int64_t>(spec.depth) * c1, c3, frames);
  r.macs_by_cell["pool"] = PoolMacs(cfg, c3, frames);
  r.macs_by_cell["fc"] = FcMacs(cfg, c3);
  if (table) {
    r.has_latency = true;
    r.latency_ms = EstimateLatencyMs(spec, cfg, *table);
  }
  return r;
}

}  // namespace costmodel
}  // namespace tdnas
