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

#ifndef TDNAS_SUPERNET_H_
#define TDNAS_SUPERNET_H_

#include <map>
#include <string>
#include <vector>

#include "autodiff.h"
#include "space.h"
#include "tensor.h"

namespace tdnas {
namespace supernet {

// Static architecture constants of the weight-sharing network.  The dynamic
// ranges (depth, kernels, widths) live in `shape`; everything else is fixed
// across all subnets.
struct SupernetConfig {
  space::SpaceShape shape;
  int in_channels = 80;
  int res2net_scale = 8;
  // Squeeze-excitation hidden width is min(block_width / se_reduction, cap).
  int se_reduction = 4;
  int se_bottleneck_cap = 128;
  int att_bottleneck = 128;  // attention hidden width, fixed for all subnets
  std::vector<int> dilations = {2, 3, 4, 5};  // one per residual block
  int embedding_dim = 192;
  int default_frames = 300;
};

void ValidateSupernetConfig(const SupernetConfig& cfg);

// Rejects specs that the weight store cannot host (regardless of any sampling
// space): depth/kernel/width outside the structural limits.
void CheckStructural(const space::SubnetSpec& spec, const SupernetConfig& cfg);

// Active-slice geometry of one spec: how many leading channels of each stored
// tensor participate, and the scattered column sets of the aggregation and
// pooling layers.
struct ActivePlan {
  int depth = 0;
  int c1 = 0;                  // stem / block input-output width
  std::vector<int> c2;         // per-block bottleneck widths
  int c3 = 0;                  // aggregation output width
  int se_hidden = 0;           // min(c1 / se_reduction, cap)
  std::vector<int> split;      // per-block res2net split width (c2 / scale)
  std::vector<int64_t> agg_cols;   // columns of the aggregation conv
  std::vector<int64_t> pool_cols;  // mean||sigma columns of pool BN and fc
};

ActivePlan MakePlan(const space::SubnetSpec& spec, const SupernetConfig& cfg);

struct Supernet {
  SupernetConfig cfg;
  std::map<std::string, Tensor> params;   // trainable tensors
  std::map<std::string, Tensor> buffers;  // BN running mean / var
};

// Fresh network with He-initialized convolutions and linear layers, identity
// kernel-transformation matrices and unit-variance BN statistics.
Supernet Build(const SupernetConfig& cfg, uint64_t seed);

int64_t NumParams(const Supernet& net);

// Accumulates per-layer batch statistics over a recalibration stream; Apply
// overwrites the running statistics of the active slices with the plain
// average of the per-batch values.
struct BnRecalAccum {
  struct Entry {
    std::vector<int64_t> idx;
    std::vector<double> sum_mean;
    std::vector<double> sum_var;
    int64_t count = 0;
  };
  std::map<std::string, Entry> entries;
};

struct ForwardHooks {
  bool update_running = false;  // EMA update of running statistics
  double bn_momentum = 0.1;
  BnRecalAccum* recal = nullptr;
  nn::CostMeter* meter = nullptr;
};

// Builds the active path of `spec` on the tape and returns the embedding node
// [B, embedding_dim].  `training` selects batch statistics inside BN layers;
// otherwise the stored running statistics are used.  Only parameters on the
// active path become tape leaves, so gradients exist exactly for them.
ad::ValueId Forward(ad::Tape* tape, Supernet* net,
                    const space::SubnetSpec& spec, const Tensor& batch,
                    bool training, const ForwardHooks& hooks = {});

// Convenience eval-mode forward returning the embeddings as a plain tensor.
Tensor Embed(Supernet* net, const space::SubnetSpec& spec, const Tensor& batch);

// Overwrites the running statistics of every BN layer on the active path with
// averages of the batch statistics observed over `batches`.  Statistics of
// inactive channels are untouched.  Deterministic in the stream order and
// idempotent when repeated on the same stream.
void RecalibrateBn(Supernet* net, const space::SubnetSpec& spec,
                   const std::vector<const Tensor*>& batches);

// A subnet cut free of the weight store: transformed kernels materialized,
// active slices copied, transformation matrices dropped.
struct ExportedSubnet {
  space::SubnetSpec spec;
  SupernetConfig cfg;  // shape limits kept for bookkeeping; slices are exact
  std::map<std::string, Tensor> params;
  std::map<std::string, Tensor> buffers;
};

ExportedSubnet ExportSubnet(const Supernet& net, const space::SubnetSpec& spec);

int64_t NumParams(const ExportedSubnet& sub);

// Eval-mode forward of an exported subnet, without any slicing.
Tensor ForwardExported(const ExportedSubnet& sub, const Tensor& batch,
                       nn::CostMeter* meter = nullptr);

}  // namespace supernet
}  // namespace tdnas

#endif  // TDNAS_SUPERNET_H_
