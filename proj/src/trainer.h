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

#ifndef TDNAS_TRAINER_H_
#define TDNAS_TRAINER_H_

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "autodiff.h"
#include "dataset.h"
#include "space.h"
#include "supernet.h"

namespace tdnas {
namespace trainer {

// One transform is drawn per batch from the enabled set and applied to every
// utterance in it.  An empty enabled set means the batch passes through.
struct AugmentPolicy {
  bool identity = true;
  bool gauss_noise = true;
  bool time_mask = true;
  bool freq_mask = true;
  double noise_std = 0.05;
  int max_time_mask = 20;
  int max_freq_mask = 4;
};

struct TrainConfig {
  int epochs_per_stage = 8;
  std::map<std::string, int> stage_epochs;  // per-stage override, keyed by stage name
  double lr_min = 1e-8;
  double lr_max = 1e-3;
  int cycle_epochs = 4;   // full triangular cycle length
  int paths_per_step = 1; // sampled paths sharing one batch and one update
  int batch_size = 32;
  int frames_largest = 200;
  int frames_other = 300;
  double aam_margin = 0.2;
  double aam_scale = 30.0;
  double bn_momentum = 0.1;
  AugmentPolicy augment;
  uint64_t seed = 1;
};

void ValidateTrainConfig(const TrainConfig& tc);

// Triangular cycle: rises linearly from lr_min to lr_max over the first half,
// falls back to lr_min over the second.  `epoch` may be fractional.
double CyclicLr(double epoch, double lr_min, double lr_max, int cycle_epochs);

enum class AugmentKind { kIdentity, kGaussNoise, kTimeMask, kFreqMask };

std::vector<AugmentKind> EnabledAugments(const AugmentPolicy& p);

// Applies one transform drawn from the policy.  Mask widths are drawn once per
// batch; mask positions are drawn per utterance.
Tensor Augment(const Tensor& batch, const AugmentPolicy& p, Rng* rng);

// Shrinking schedule: one entry per phase, each widening exactly one dimension
// of the sampling space relative to its predecessor.
struct StageSchedule {
  struct Entry {
    space::Stage stage;
    space::SpaceConfig config;
    int epochs = 0;
  };
  std::vector<Entry> entries;
};

StageSchedule MakeSchedule(const space::SpaceShape& shape, const TrainConfig& tc);

// Every option set must contain its predecessor's options.
void ValidateSchedule(const StageSchedule& sched);

// Supernet plus the classifier head and optimizer.  The head weight lives in
// net.params under "head.aam.w" so that checkpointing and the optimizer see a
// single parameter map; it is not part of any exported subnet.
struct TrainerState {
  supernet::Supernet net;
  ad::OptimizerState opt;
  int n_classes = 0;
  int stages_done = 0;  // index of the next schedule entry to run
};

TrainerState InitTrainer(const supernet::SupernetConfig& cfg, int n_classes,
                         uint64_t seed);

struct TrainLogEntry {
  std::string stage;
  int epoch = 0;
  int batch = 0;
  double lr = 0;
  double loss = 0;  // mean over the paths of the step
  std::string spec;  // last path of the step
};

// One optimizer update: forward/backward `paths_per_step` sampled paths on the
// shared batch, sum their gradients, then apply Adam.  Returns the mean loss.
double DynamicPathStep(TrainerState* st, const space::SpaceConfig& stage_cfg,
                       const TrainConfig& tc, const Tensor& batch,
                       const std::vector<int64_t>& labels, double lr,
                       space::SamplerState* sampler,
                       space::SubnetSpec* last_spec);

// Runs one schedule entry over the dataset.  The stage RNG is derived from
// (tc.seed, stage index), so a run resumed from a stage boundary continues
// exactly like an uninterrupted one.  Optimizer moments and the learning-rate
// phase restart at each stage.
void TrainStage(TrainerState* st, const StageSchedule::Entry& entry,
                int stage_index, const TrainConfig& tc,
                const dataset::Dataset& data, std::vector<TrainLogEntry>* log);

// Runs all remaining entries of the schedule, invoking `on_stage_done` after
// each (for checkpointing).  st->stages_done tracks progress.
void ProgressiveTrain(TrainerState* st, const StageSchedule& sched,
                      const TrainConfig& tc, const dataset::Dataset& data,
                      std::vector<TrainLogEntry>* log,
                      const std::function<void(const TrainerState&, const StageSchedule::Entry&)>&
                          on_stage_done = nullptr);

}  // namespace trainer
}  // namespace tdnas

#endif  // TDNAS_TRAINER_H_
