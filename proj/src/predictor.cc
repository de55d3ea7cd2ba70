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

#include "predictor.h"

#include <algorithm>
#include <cmath>
#include <utility>

#include "autodiff.h"
#include "common.h"
#include "nn_kernels.h"

namespace tdnas {
namespace predictor {

namespace {

void ValidateOptions(const PredictorTrainOptions& opts) {
  Require(opts.hidden >= 1, "predictor hidden width must be >= 1", ErrorKind::kBadConfig);
  Require(opts.epochs >= 1, "predictor epochs must be >= 1", ErrorKind::kBadConfig);
  Require(opts.lr > 0, "predictor learning rate must be > 0", ErrorKind::kBadConfig);
  Require(opts.batch_size >= 1, "predictor batch_size must be >= 1", ErrorKind::kBadConfig);
  Require(opts.val_fraction >= 0 && opts.val_fraction < 1,
          "predictor val_fraction must lie in [0, 1)", ErrorKind::kBadConfig);
  Require(opts.target_metric == "eer" || opts.target_metric == "min_dcf",
          "predictor target_metric must be \"eer\" or \"min_dcf\"", ErrorKind::kBadConfig);
}

double TargetOf(const AccuracyRecord& r, const std::string& metric) {
  return metric == "eer" ? r.eer : r.min_dcf;
}

Tensor HeInit(int64_t rows, int64_t cols, double fan_in, Rng* rng) {
  Tensor t = Tensor::Zeros({rows, cols});
  const double std = std::sqrt(2.0 / fan_in);
  for (double& v : t.data) v = std * rng->Normal();
  return t;
}

// Normalized-scale forward used for both inference and reporting.
double MlpForward(const PredictorModel& m, const Tensor& x_row) {
  Tensor h = nn::Relu(nn::Linear(x_row, m.params.at("l1.w"), m.params.at("l1.b"), nullptr));
  h = nn::Relu(nn::Linear(h, m.params.at("l2.w"), m.params.at("l2.b"), nullptr));
  h = nn::Relu(nn::Linear(h, m.params.at("l3.w"), m.params.at("l3.b"), nullptr));
  h = nn::Linear(h, m.params.at("head.w"), m.params.at("head.b"), nullptr);
  return h.data[0];
}

Tensor EncodeRow(const PredictorModel& m, const space::SubnetSpec& spec) {
  const std::vector<double> enc = space::EncodeOneHot(spec, m.space_cfg);
  Tensor x = Tensor::Zeros({1, static_cast<int64_t>(enc.size())});
  x.data = enc;
  return x;
}

}  // namespace

PredictorModel TrainPredictor(const std::vector<AccuracyRecord>& records,
                              const space::SpaceConfig& cfg,
                              const PredictorTrainOptions& opts,
                              PredictorTrainReport* report) {
  ValidateOptions(opts);
  space::ValidateConfig(cfg);
  Require(records.size() >= 4, "predictor needs at least 4 records", ErrorKind::kValidation);

  const int64_t enc_len = space::EncodingLength(cfg);
  const int64_t n = static_cast<int64_t>(records.size());
  std::vector<std::vector<double>> xs(n);
  std::vector<double> ys_raw(n);
  for (int64_t i = 0; i < n; ++i) {
    xs[i] = space::EncodeOneHot(records[i].spec, cfg);
    ys_raw[i] = TargetOf(records[i], opts.target_metric);
    Require(std::isfinite(ys_raw[i]), "record target is not finite", ErrorKind::kValidation);
  }

  PredictorModel model;
  model.space_cfg = cfg;
  model.target_metric = opts.target_metric;
  model.hidden = opts.hidden;
  model.norm_lo = *std::min_element(ys_raw.begin(), ys_raw.end());
  model.norm_hi = *std::max_element(ys_raw.begin(), ys_raw.end());
  Require(model.norm_hi > model.norm_lo,
          "all record targets are identical; nothing to regress", ErrorKind::kValidation);
  const double span = model.norm_hi - model.norm_lo;
  std::vector<double> ys(n);
  for (int64_t i = 0; i < n; ++i) ys[i] = (ys_raw[i] - model.norm_lo) / span;

  // Deterministic split.
  std::vector<int64_t> order(n);
  for (int64_t i = 0; i < n; ++i) order[i] = i;
  Rng split_rng(opts.seed);
  for (int64_t i = n; i > 1; --i)
    std::swap(order[i - 1], order[split_rng.UniformIndex(static_cast<size_t>(i))]);
  int64_t n_val = static_cast<int64_t>(std::llround(opts.val_fraction * static_cast<double>(n)));
  n_val = std::min(n_val, n - 1);
  const int64_t n_train = n - n_val;
  std::vector<int64_t> train_idx(order.begin(), order.begin() + n_train);
  std::vector<int64_t> val_idx(order.begin() + n_train, order.end());

  Rng init_rng(opts.seed + 1);
  const int64_t h = opts.hidden;
  model.params["l1.w"] = HeInit(h, enc_len, static_cast<double>(enc_len), &init_rng);
  model.params["l1.b"] = Tensor::Zeros({h});
  model.params["l2.w"] = HeInit(h, h, static_cast<double>(h), &init_rng);
  model.params["l2.b"] = Tensor::Zeros({h});
  model.params["l3.w"] = HeInit(h, h, static_cast<double>(h), &init_rng);
  model.params["l3.b"] = Tensor::Zeros({h});
  model.params["head.w"] = HeInit(1, h, static_cast<double>(h), &init_rng);
  model.params["head.b"] = Tensor::Zeros({1});

  ad::OptimizerState opt;
  Rng epoch_rng(opts.seed + 2);
  for (int epoch = 0; epoch < opts.epochs; ++epoch) {
    std::vector<int64_t> idx = train_idx;
    for (int64_t i = static_cast<int64_t>(idx.size()); i > 1; --i)
      std::swap(idx[i - 1], idx[epoch_rng.UniformIndex(static_cast<size_t>(i))]);
    for (size_t at = 0; at < idx.size(); at += opts.batch_size) {
      const int64_t bsz = std::min<int64_t>(opts.batch_size, idx.size() - at);
      Tensor x = Tensor::Zeros({bsz, enc_len});
      Tensor t = Tensor::Zeros({bsz, 1});
      for (int64_t i = 0; i < bsz; ++i) {
        std::copy(xs[idx[at + i]].begin(), xs[idx[at + i]].end(),
                  x.data.begin() + i * enc_len);
        t.At(i, 0) = ys[idx[at + i]];
      }
      ad::Tape tape;
      const ad::ValueId xv = tape.Constant(std::move(x));
      const ad::ValueId w1 = tape.Leaf(model.params.at("l1.w"), "l1.w");
      const ad::ValueId b1 = tape.Leaf(model.params.at("l1.b"), "l1.b");
      const ad::ValueId w2 = tape.Leaf(model.params.at("l2.w"), "l2.w");
      const ad::ValueId b2 = tape.Leaf(model.params.at("l2.b"), "l2.b");
      const ad::ValueId w3 = tape.Leaf(model.params.at("l3.w"), "l3.w");
      const ad::ValueId b3 = tape.Leaf(model.params.at("l3.b"), "l3.b");
      const ad::ValueId wh = tape.Leaf(model.params.at("head.w"), "head.w");
      const ad::ValueId bh = tape.Leaf(model.params.at("head.b"), "head.b");
      ad::ValueId hv = tape.Relu(tape.Linear(xv, w1, b1));
      hv = tape.Relu(tape.Linear(hv, w2, b2));
      hv = tape.Relu(tape.Linear(hv, w3, b3));
      hv = tape.Linear(hv, wh, bh);
      const ad::ValueId loss =
          tape.MeanAll(tape.Abs(tape.Sub(hv, tape.Constant(std::move(t)))));
      tape.Backward(loss);
      std::map<std::string, Tensor> grads;
      for (const auto& [name, vid] : tape.named_leaves())
        if (tape.HasGrad(vid)) grads.emplace(name, tape.Grad(vid));
      ad::AdamStep(&model.params, grads, &opt, opts.lr);
    }
  }

  if (report != nullptr) {
    report->n_train = static_cast<int>(n_train);
    report->n_val = static_cast<int>(n_val);
    auto mae_over = [&](const std::vector<int64_t>& set) {
      if (set.empty()) return 0.0;
      double acc = 0;
      for (int64_t i : set) {
        Tensor x = Tensor::Zeros({1, enc_len});
        x.data = xs[i];
        acc += std::fabs(MlpForward(model, x) - ys[i]);
      }
      return span * acc / static_cast<double>(set.size());
    };
    report->train_mae = mae_over(train_idx);
    report->val_mae = mae_over(val_idx);
    double train_mean = 0;
    for (int64_t i : train_idx) train_mean += ys_raw[i];
    train_mean /= static_cast<double>(train_idx.size());
    double base = 0;
    for (int64_t i : val_idx) base += std::fabs(ys_raw[i] - train_mean);
    report->baseline_val_mae = val_idx.empty() ? 0.0 : base / static_cast<double>(val_idx.size());
  }
  return model;
}

double Predict(const PredictorModel& model, const space::SubnetSpec& spec) {
  const double y = MlpForward(model, EncodeRow(model, spec));
  return model.norm_lo + y * (model.norm_hi - model.norm_lo);
}

std::vector<double> PredictBatch(const PredictorModel& model,
                                 const std::vector<space::SubnetSpec>& specs) {
  std::vector<double> out;
  out.reserve(specs.size());
  for (const auto& s : specs) out.push_back(Predict(model, s));
  return out;
}

}  // namespace predictor
}  // namespace tdnas
