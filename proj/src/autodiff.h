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

#ifndef TDNAS_AUTODIFF_H_
#define TDNAS_AUTODIFF_H_

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "nn_kernels.h"
#include "tensor.h"

namespace tdnas {
namespace ad {

using ValueId = int32_t;
constexpr ValueId kNone = -1;

struct BnBatchStats {
  Tensor mean;
  Tensor var;           // biased, as used for normalization
  Tensor var_unbiased;  // n/(n-1) corrected, for running-average updates
};

// Reverse-mode tape over the kernels in nn_kernels.h.  Ops append nodes in
// topological order; Backward walks them in reverse.  Node evaluation order
// and every inner reduction order are fixed, so a rebuilt tape over identical
// inputs reproduces values and gradients bit for bit.
class Tape {
 public:
  // Non-differentiable input (data batches, frozen statistics).
  ValueId Constant(Tensor v);
  // Differentiable leaf.  A non-empty name registers the leaf for gradient
  // lookup by name after Backward.
  ValueId Leaf(Tensor v, const std::string& name = "");

  const Tensor& Value(ValueId id) const;
  bool HasGrad(ValueId id) const;
  const Tensor& Grad(ValueId id) const;  // valid only if HasGrad
  // Gradient of a named leaf, or nullptr if it never received one.
  const Tensor* GradByName(const std::string& name) const;
  const std::map<std::string, ValueId>& named_leaves() const {
    return named_leaves_;
  }
  size_t NumNodes() const { return nodes_.size(); }

  ValueId IndexSelect(ValueId x, int axis, std::vector<int64_t> idx);
  ValueId Conv1d(ValueId x, ValueId w, ValueId b, int64_t dilation,
                 int64_t groups, nn::CostMeter* meter = nullptr);
  ValueId Linear(ValueId x, ValueId w, ValueId b,
                 nn::CostMeter* meter = nullptr);
  ValueId BnTrain(ValueId x, ValueId gamma, ValueId beta, double eps,
                  BnBatchStats* stats_out);
  ValueId BnEval(ValueId x, ValueId gamma, ValueId beta, const Tensor& mean,
                 const Tensor& var, double eps);
  ValueId Relu(ValueId x);
  ValueId Tanh(ValueId x);
  ValueId Sigmoid(ValueId x);
  ValueId Add(ValueId a, ValueId b);
  ValueId Sub(ValueId a, ValueId b);
  ValueId Mul(ValueId a, ValueId b);
  ValueId Scale(ValueId x, double c);
  ValueId Abs(ValueId x);
  ValueId ConcatChannels(const std::vector<ValueId>& xs);
  ValueId ConcatCols(const std::vector<ValueId>& xs);
  ValueId MeanTime(ValueId x);
  ValueId BroadcastMulTime(ValueId x, ValueId s,
                           nn::CostMeter* meter = nullptr);
  ValueId SoftmaxTime(ValueId x);
  ValueId WeightedStats(ValueId x, ValueId alpha, double eps,
                        nn::CostMeter* meter = nullptr);
  ValueId TransformKernel(ValueId w5, ValueId kt1, ValueId kt2, int64_t k);
  ValueId L2NormalizeRows(ValueId x);
  // Shifts the label-position cosine of each row from cos(theta) to
  // cos(theta + margin); other entries pass through.
  ValueId AamMargin(ValueId cosines, const std::vector<int64_t>& labels,
                    double margin);
  // Mean over rows of -log softmax(logits)[label].
  ValueId CrossEntropy(ValueId logits, const std::vector<int64_t>& labels);
  ValueId SumAll(ValueId x);
  ValueId MeanAll(ValueId x);

  // Seeds the root gradient with 1 and accumulates into every reachable
  // differentiable node.  The root must be scalar.
  void Backward(ValueId root);

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    bool has_grad = false;
    std::function<void(Tape*)> backprop;
  };

  ValueId Push(Tensor value, bool requires_grad,
               std::function<void(Tape*)> backprop);
  bool Requires(ValueId id) const;
  void Accum(ValueId id, const Tensor& g);
  Node& N(ValueId id) { return nodes_[static_cast<size_t>(id)]; }
  const Node& N(ValueId id) const { return nodes_[static_cast<size_t>(id)]; }

  std::vector<Node> nodes_;
  std::map<std::string, ValueId> named_leaves_;
};

// Adam with a single step counter shared by all parameters.  Only parameters
// present in `grads` are touched: a parameter that was never on a sampled path
// keeps its value and moments for the step.
struct OptimizerState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  int64_t step = 0;
  std::map<std::string, Tensor> m;
  std::map<std::string, Tensor> v;
};

void AdamStep(std::map<std::string, Tensor>* params,
              const std::map<std::string, Tensor>& grads,
              OptimizerState* state, double lr);

}  // namespace ad
}  // namespace tdnas

#endif  // TDNAS_AUTODIFF_H_
