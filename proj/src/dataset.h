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

#ifndef TDNAS_DATASET_H_
#define TDNAS_DATASET_H_

#include <cstdint>
#include <map>
#include <string>

#include "evalkit.h"
#include "tensor.h"

namespace tdnas {
namespace dataset {

// Synthetic speaker corpus: each speaker is a smoothed random-walk template
// over feature channels; utterances are the template at a random temporal
// offset plus fresh smoothed noise.  Fully determined by the seed.
struct DatasetConfig {
  int n_speakers = 32;
  int train_utts_per_speaker = 8;
  int eval_utts_per_speaker = 3;
  int feature_dim = 20;
  int frames = 150;
  double noise_scale = 0.35;
  int smoothing = 9;  // moving-average window of the random walks
  int n_trials = 300;
  uint64_t seed = 7;
};

void ValidateDatasetConfig(const DatasetConfig& cfg);

struct Dataset {
  DatasetConfig cfg;
  std::map<std::string, Tensor> train;  // utterance id -> [C, T]
  std::map<std::string, Tensor> eval;
  std::map<std::string, int> speaker_of;
  std::vector<evalkit::Trial> trials;  // over eval utterances
};

std::string UttId(int speaker, int utt, bool is_eval);

Dataset Generate(const DatasetConfig& cfg);

}  // namespace dataset
}  // namespace tdnas

#endif  // TDNAS_DATASET_H_
