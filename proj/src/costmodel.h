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

#ifndef TDNAS_COSTMODEL_H_
#define TDNAS_COSTMODEL_H_

#include <map>
#include <string>
#include <vector>

#include "space.h"
#include "supernet.h"

namespace tdnas {
namespace costmodel {

// Multiply-accumulate convention, shared with the instrumented counter in the
// forward kernels: convolutions and linear layers count out*in*k*frames
// including padded taps, squeeze-excitation counts its two projections plus
// the per-frame gate, the pooling head counts its weighted moments (3*C*T+C),
// and BN, activations, softmax and additions count zero.
int64_t CountMacs(const space::SubnetSpec& spec,
                  const supernet::SupernetConfig& cfg, int64_t frames);

// Trainable tensor elements of the materialized subnet: conv and linear
// weights and biases plus BN affine pairs.  Running statistics and the kernel
// transformation matrices are not part of a deployed subnet.
int64_t CountParams(const space::SubnetSpec& spec,
                    const supernet::SupernetConfig& cfg);

// Runs the exported subnet forward over one zero utterance with counting
// enabled in every kernel; agrees exactly with CountMacs.
int64_t InstrumentedMacs(const supernet::Supernet& net,
                         const space::SubnetSpec& spec, int64_t frames);

// Per-cell MAC helpers (single utterance).  Exposed because the synthetic
// latency runner prices cells with them.
int64_t SeHidden(const supernet::SupernetConfig& cfg, int64_t c1);
int64_t StemMacs(int64_t c0, int64_t c1, int64_t k, int64_t frames);
int64_t BlockMacs(const supernet::SupernetConfig& cfg, int64_t c1, int64_t c2,
                  int64_t k, int64_t frames);
int64_t AggMacs(int64_t in_width, int64_t c3, int64_t frames);
int64_t PoolMacs(const supernet::SupernetConfig& cfg, int64_t c3,
                 int64_t frames);
int64_t FcMacs(const supernet::SupernetConfig& cfg, int64_t c3);

// Operator-wise latency lookup keyed by cell kind, kernel size, input width,
// output width and frame count.  A subnet estimate is the sum of its cells'
// entries; a missing key is an error naming the key.
struct LatencyTable {
  std::string device;
  int repeats = 5;
  int warmup = 2;
  int frames = 0;
  std::map<std::string, double> ms;
};

std::string CellKey(const std::string& cell, int64_t kernel, int64_t in_width,
                    int64_t out_width, int64_t frames);

// All keys needed to estimate any subnet of `sc`.
std::vector<std::string> RequiredKeys(const space::SpaceConfig& sc,
                                      const supernet::SupernetConfig& cfg,
                                      int64_t frames);

struct LatencyRunnerOptions {
  int repeats = 5;
  int warmup = 2;
  // Synthetic pricing: ms = cell_macs * 1e-6 + 0.01, a deterministic stand-in
  // that is strictly increasing in every dimension.  When false, cells are
  // built and timed on this machine (median of repeats).
  bool synthetic = false;
  uint64_t seed = 1;
};

LatencyTable BuildLatencyTable(const space::SpaceConfig& sc,
                               const supernet::SupernetConfig& cfg,
                               int64_t frames,
                               const LatencyRunnerOptions& opts);

double EstimateLatencyMs(const space::SubnetSpec& spec,
                         const supernet::SupernetConfig& cfg,
                         const LatencyTable& table);

struct CostReport {
  int64_t macs = 0;
  int64_t params = 0;
  int64_t frames = 0;
  bool has_latency = false;
  double latency_ms = 0.0;
  std::map<std::string, int64_t> macs_by_cell;
};

CostReport MakeReport(const space::SubnetSpec& spec,
                      const supernet::SupernetConfig& cfg, int64_t frames,
                      const LatencyTable* table);

}  // namespace costmodel
}  // namespace tdnas

#endif  // TDNAS_COSTMODEL_H_
