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

#ifndef TDNAS_NN_KERNELS_H_
#define TDNAS_NN_KERNELS_H_

#include <vector>

#include "tensor.h"

namespace tdnas {
namespace nn {

// Counts multiply-accumulate work as the kernels actually execute it.
// Convention (applied consistently by the analytic counter in costmodel):
// convolutions and linear layers count their full multiply grids including
// zero-padded taps, elementwise gates and weighted moments count each multiply,
// and normalization / activation / softmax / additions count zero.
struct CostMeter {
  int64_t macs = 0;
};

constexpr double kBnEps = 1e-5;
constexpr double kPoolEps = 1e-5;

// 1-D convolution over [B, C_in, T] with odd kernel, stride 1 and zero padding
// chosen so the output keeps T frames.  `w` is [C_out, C_in/groups, K] and the
// optional bias is [C_out] (empty tensor = no bias).
Tensor Conv1dSame(const Tensor& x, const Tensor& w, const Tensor& b,
                  int64_t dilation, int64_t groups, CostMeter* meter);

// Gradient building blocks for Conv1dSame; dy has the output shape.
Tensor Conv1dSameGradInput(const Tensor& dy, const Tensor& w,
                           const std::vector<int64_t>& x_shape,
                           int64_t dilation, int64_t groups);
void Conv1dSameGradParams(const Tensor& dy, const Tensor& x, const Tensor& w,
                          int64_t dilation, int64_t groups, Tensor* dw,
                          Tensor* db);

// x [B, F] times w [O, F] transposed, plus optional bias [O].
Tensor Linear(const Tensor& x, const Tensor& w, const Tensor& b,
              CostMeter* meter);

// Per-channel moments over the batch (and time, for rank 3).  Outputs are
// rank-1 tensors of length C.  var is the biased estimate; var_unbiased gets
// the n/(n-1) correction used for running-average updates.
void BatchMoments(const Tensor& x, Tensor* mean, Tensor* var,
                  Tensor* var_unbiased);

// Normalizes x (rank 2 [B, C] or rank 3 [B, C, T]) with the given per-channel
// statistics and affine parameters.
Tensor BnApply(const Tensor& x, const Tensor& gamma, const Tensor& beta,
               const Tensor& mean, const Tensor& var, double eps);

Tensor Relu(const Tensor& x);
Tensor TanhT(const Tensor& x);
Tensor SigmoidT(const Tensor& x);

Tensor MeanTime(const Tensor& x);                          // [B,C,T] -> [B,C]
Tensor BroadcastMulTime(const Tensor& x, const Tensor& s,  // x*[B,C] gate
                        CostMeter* meter);
Tensor SoftmaxTime(const Tensor& x);  // softmax along T for every (b, c)

// Attention-weighted mean and standard deviation per channel, concatenated to
// [B, 2C].  alpha must already be normalized along T.  The variance is clamped
// at zero before the epsilon floor, so sigma >= sqrt(eps) always holds.
Tensor WeightedStats(const Tensor& x, const Tensor& alpha, double eps,
                     CostMeter* meter);

// Derives a K=3 or K=1 kernel from a stored K=5 kernel through the two
// transformation matrices (kt1 is 3x3 over the centered 3 taps, kt2 is 1x1
// over the centered result).  K=5 returns a copy of w5.
Tensor TransformKernel(const Tensor& w5, const Tensor& kt1, const Tensor& kt2,
                       int64_t k);

Tensor IndexSelect(const Tensor& x, int axis, const std::vector<int64_t>& idx);
Tensor ConcatChannels(const std::vector<const Tensor*>& xs);  // rank 3, axis 1
Tensor ConcatCols(const std::vector<const Tensor*>& xs);      // rank 2, axis 1
Tensor L2NormalizeRows(const Tensor& x, double tiny = 1e-12);

}  // namespace nn
}  // namespace tdnas

#endif  // TDNAS_NN_KERNELS_H_
