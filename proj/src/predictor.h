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

#ifndef TDNAS_PREDICTOR_H_
#define TDNAS_PREDICTOR_H_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "space.h"
#include "tensor.h"

namespace tdnas {
namespace predictor {

// One measured subnet: the spec and its trial metrics on the evaluation set.
struct AccuracyRecord {
  space::SubnetSpec spec;
  double eer = 0;
  double min_dcf = 0;
  bool recalibrated = false;
};

// Ranking regressor over one-hot architecture encodings: three hidden ReLU
// layers and a linear head, trained with mean absolute error on min-max
// normalized targets.  The model remembers the space it encodes against and
// the normalization constants, so Predict returns values in metric units.
struct PredictorModel {
  space::SpaceConfig space_cfg;
  std::string target_metric;  // "eer" or "min_dcf"
  double norm_lo = 0;
  double norm_hi = 1;
  int hidden = 400;
  std::map<std::string, Tensor> params;  // l1.w/b, l2.w/b, l3.w/b, head.w/b
};

struct PredictorTrainOptions {
  int hidden = 400;
  int epochs = 200;
  double lr = 1e-3;
  int batch_size = 64;
  double val_fraction = 0.2;
  std::string target_metric = "eer";
  uint64_t seed = 3;
};

struct PredictorTrainReport {
  int n_train = 0;
  int n_val = 0;
  double train_mae = 0;         // metric units, final epoch
  double val_mae = 0;           // metric units
  double baseline_val_mae = 0;  // constant mean-of-train predictor
};

PredictorModel TrainPredictor(const std::vector<AccuracyRecord>& records,
                              const space::SpaceConfig& cfg,
                              const PredictorTrainOptions& opts,
                              PredictorTrainReport* report = nullptr);

double Predict(const PredictorModel& model, const space::SubnetSpec& spec);

std::vector<double> PredictBatch(const PredictorModel& model,
                                 const std::vector<space::SubnetSpec>& specs);

}  // namespace predictor
}  // namespace tdnas

#endif  // TDNAS_PREDICTOR_H_
