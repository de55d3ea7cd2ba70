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

#include "trainer.h"

#include <algorithm>
#include <cmath>
#include <set>
#include <utility>

#include "common.h"
#include "evalkit.h"

namespace tdnas {
namespace trainer {

namespace {

constexpr char kHeadName[] = "head.aam.w";

uint64_t StageSeed(uint64_t base, int stage_index) {
  return base + 0x9e3779b97f4a7c15ULL * static_cast<uint64_t>(stage_index + 1);
}

void ShuffleInPlace(std::vector<std::string>* v, Rng* rng) {
  for (size_t i = v->size(); i > 1; --i) {
    const size_t j = rng->UniformIndex(i);
    std::swap((*v)[i - 1], (*v)[j]);
  }
}

}  // namespace

void ValidateTrainConfig(const TrainConfig& tc) {
  Require(tc.epochs_per_stage >= 1, "epochs_per_stage must be >= 1", ErrorKind::kBadConfig);
  for (const auto& [name, e] : tc.stage_epochs) {
    space::StageFromName(name);  // rejects unknown stage names
    Require(e >= 1, "stage_epochs for " + name + " must be >= 1", ErrorKind::kBadConfig);
  }
  Require(tc.lr_min > 0 && tc.lr_max >= tc.lr_min,
          "learning-rate bounds must satisfy 0 < lr_min <= lr_max", ErrorKind::kBadConfig);
  Require(tc.cycle_epochs >= 1, "cycle_epochs must be >= 1", ErrorKind::kBadConfig);
  Require(tc.paths_per_step >= 1, "paths_per_step must be >= 1", ErrorKind::kBadConfig);
  Require(tc.batch_size >= 1, "batch_size must be >= 1", ErrorKind::kBadConfig);
  Require(tc.frames_largest >= 1 && tc.frames_other >= 1,
          "segment frame counts must be >= 1", ErrorKind::kBadConfig);
  Require(tc.aam_margin >= 0 && tc.aam_margin < 1.5707963267948966,
          "aam_margin must lie in [0, pi/2)", ErrorKind::kBadConfig);
  Require(tc.aam_scale > 0, "aam_scale must be > 0", ErrorKind::kBadConfig);
  Require(tc.bn_momentum > 0 && tc.bn_momentum <= 1,
          "bn_momentum must lie in (0, 1]", ErrorKind::kBadConfig);
  Require(tc.augment.noise_std >= 0, "augment noise_std must be >= 0", ErrorKind::kBadConfig);
  Require(tc.augment.max_time_mask >= 1 && tc.augment.max_freq_mask >= 1,
          "augment mask maxima must be >= 1", ErrorKind::kBadConfig);
}

double CyclicLr(double epoch, double lr_min, double lr_max, int cycle_epochs) {
  const double cycle = static_cast<double>(cycle_epochs);
  double phase = std::fmod(epoch, cycle);
  if (phase < 0) phase += cycle;
  const double half = cycle / 2.0;
  const double span = lr_max - lr_min;
  if (phase <= half) return lr_min + span * (phase / half);
  return lr_max - span * ((phase - half) / half);
}

std::vector<AugmentKind> EnabledAugments(const AugmentPolicy& p) {
  std::vector<AugmentKind> kinds;
  if (p.identity) kinds.push_back(AugmentKind::kIdentity);
  if (p.gauss_noise) kinds.push_back(AugmentKind::kGaussNoise);
  if (p.time_mask) kinds.push_back(AugmentKind::kTimeMask);
  if (p.freq_mask) kinds.push_back(AugmentKind::kFreqMask);
  return kinds;
}

Tensor Augment(const Tensor& batch, const AugmentPolicy& p, Rng* rng) {
  CheckRank(batch, 3, "augment input");
  const std::vector<AugmentKind> kinds = EnabledAugments(p);
  Tensor out = batch;
  if (kinds.empty()) return out;
  const AugmentKind kind = kinds[rng->UniformIndex(kinds.size())];
  const int64_t bsz = batch.Dim(0), ch = batch.Dim(1), t = batch.Dim(2);
  switch (kind) {
    case AugmentKind::kIdentity:
      break;
    case AugmentKind::kGaussNoise:
      for (double& v : out.data) v += p.noise_std * rng->Normal();
      break;
    case AugmentKind::kTimeMask: {
      const int64_t wmax = std::min<int64_t>(p.max_time_mask, t);
      const int64_t w = 1 + static_cast<int64_t>(rng->UniformIndex(static_cast<size_t>(wmax)));
      for (int64_t b = 0; b < bsz; ++b) {
        const int64_t start = static_cast<int64_t>(rng->UniformIndex(static_cast<size_t>(t - w + 1)));
        for (int64_t c = 0; c < ch; ++c)
          for (int64_t i = start; i < start + w; ++i) out.At(b, c, i) = 0.0;
      }
      break;
    }
    case AugmentKind::kFreqMask: {
      const int64_t wmax = std::min<int64_t>(p.max_freq_mask, ch);
      const int64_t w = 1 + static_cast<int64_t>(rng->UniformIndex(static_cast<size_t>(wmax)));
      for (int64_t b = 0; b < bsz; ++b) {
        const int64_t start = static_cast<int64_t>(rng->UniformIndex(static_cast<size_t>(ch - w + 1)));
        for (int64_t c = start; c < start + w; ++c)
          for (int64_t i = 0; i < t; ++i) out.At(b, c, i) = 0.0;
      }
      break;
    }
  }
  return out;
}

StageSchedule MakeSchedule(const space::SpaceShape& shape, const TrainConfig& tc) {
  ValidateTrainConfig(tc);
  StageSchedule sched;
  for (space::Stage stage : space::StageOrder()) {
    StageSchedule::Entry e;
    e.stage = stage;
    e.config = space::StageConfig(shape, stage);
    const auto it = tc.stage_epochs.find(space::StageName(stage));
    e.epochs = it == tc.stage_epochs.end() ? tc.epochs_per_stage : it->second;
    sched.entries.push_back(std::move(e));
  }
  ValidateSchedule(sched);
  return sched;
}

namespace {

bool Includes(const std::vector<int>& small, const std::vector<int>& big) {
  const std::set<int> s(big.begin(), big.end());
  for (int v : small)
    if (!s.count(v)) return false;
  return true;
}

}  // namespace

void ValidateSchedule(const StageSchedule& sched) {
  Require(!sched.entries.empty(), "schedule has no entries", ErrorKind::kBadConfig);
  for (size_t i = 0; i < sched.entries.size(); ++i) {
    const auto& e = sched.entries[i];
    space::ValidateConfig(e.config);
    Require(e.epochs >= 1, "schedule entry " + space::StageName(e.stage) + " has epochs < 1",
            ErrorKind::kBadConfig);
    if (i == 0) {
      Require(space::SpaceSize(e.config) == 1,
              "the first schedule entry must pin a single architecture", ErrorKind::kBadConfig);
      continue;
    }
    const auto& p = sched.entries[i - 1].config;
    const auto& c = e.config;
    const bool ok = Includes(p.depth_options, c.depth_options) &&
                    Includes(p.kernel_options, c.kernel_options) &&
                    Includes(p.width_front_options, c.width_front_options) &&
                    Includes(p.width_back_options, c.width_back_options) &&
                    p.granularity == c.granularity && p.coupling == c.coupling;
    Require(ok,
            "schedule entry " + space::StageName(e.stage) +
                " does not contain every option of its predecessor",
            ErrorKind::kBadConfig);
  }
}

TrainerState InitTrainer(const supernet::SupernetConfig& cfg, int n_classes,
                         uint64_t seed) {
  Require(n_classes >= 2, "classifier needs at least 2 classes", ErrorKind::kBadConfig);
  TrainerState st;
  st.net = supernet::Build(cfg, seed);
  st.n_classes = n_classes;
  Rng rng(seed + 1);
  Tensor head = Tensor::Zeros({n_classes, cfg.embedding_dim});
  const double std = 1.0 / std::sqrt(static_cast<double>(cfg.embedding_dim));
  for (double& v : head.data) v = std * rng.Normal();
  st.net.params.emplace(kHeadName, std::move(head));
  return st;
}

double DynamicPathStep(TrainerState* st, const space::SpaceConfig& stage_cfg,
                       const TrainConfig& tc, const Tensor& batch,
                       const std::vector<int64_t>& labels, double lr,
                       space::SamplerState* sampler,
                       space::SubnetSpec* last_spec) {
  std::map<std::string, Tensor> grads;
  double loss_sum = 0.0;
  for (int path = 0; path < tc.paths_per_step; ++path) {
    const space::SubnetSpec spec = space::Sample(stage_cfg, sampler);
    ad::Tape tape;
    supernet::ForwardHooks hooks;
    hooks.update_running = true;
    hooks.bn_momentum = tc.bn_momentum;
    const ad::ValueId emb = supernet::Forward(&tape, &st->net, spec, batch, true, hooks);
    const ad::ValueId head = tape.Leaf(st->net.params.at(kHeadName), kHeadName);
    const ad::ValueId cosines =
        tape.Linear(tape.L2NormalizeRows(emb), tape.L2NormalizeRows(head), ad::kNone);
    const ad::ValueId logits =
        tape.Scale(tape.AamMargin(cosines, labels, tc.aam_margin), tc.aam_scale);
    const ad::ValueId loss = tape.CrossEntropy(logits, labels);
    const double loss_value = tape.Value(loss).data[0];
    if (!std::isfinite(loss_value)) {
      Fail(ErrorKind::kNumeric, "training loss is not finite on path " + spec.ToString());
    }
    loss_sum += loss_value;
    tape.Backward(loss);
    for (const auto& [name, vid] : tape.named_leaves()) {
      if (!tape.HasGrad(vid)) continue;
      const Tensor& g = tape.Grad(vid);
      auto it = grads.find(name);
      if (it == grads.end()) {
        grads.emplace(name, g);
      } else {
        Check(it->second.data.size() == g.data.size(), "gradient shape drift across paths");
        for (size_t i = 0; i < g.data.size(); ++i) it->second.data[i] += g.data[i];
      }
    }
    if (last_spec != nullptr) *last_spec = spec;
  }
  ad::AdamStep(&st->net.params, grads, &st->opt, lr);
  return loss_sum / tc.paths_per_step;
}

void TrainStage(TrainerState* st, const StageSchedule::Entry& entry,
                int stage_index, const TrainConfig& tc,
                const dataset::Dataset& data, std::vector<TrainLogEntry>* log) {
  space::ValidateConfig(entry.config);
  Require(!data.train.empty(), "dataset has no training utterances", ErrorKind::kInvalidArgument);

  const int64_t frames =
      entry.stage == space::Stage::kLargest ? tc.frames_largest : tc.frames_other;
  const int64_t feature_dim = data.train.begin()->second.Dim(0);

  std::vector<std::string> ids;
  ids.reserve(data.train.size());
  for (const auto& [id, utt] : data.train) ids.push_back(id);
  const int64_t bsz = std::min<int64_t>(tc.batch_size, static_cast<int64_t>(ids.size()));
  const int64_t num_batches = static_cast<int64_t>(ids.size()) / bsz;

  const uint64_t stage_seed = StageSeed(tc.seed, stage_index);
  Rng rng(stage_seed);
  space::SamplerState sampler{stage_seed + 1, 0};
  st->opt = ad::OptimizerState{};  // fresh moments for every stage

  for (int epoch = 0; epoch < entry.epochs; ++epoch) {
    ShuffleInPlace(&ids, &rng);
    for (int64_t b = 0; b < num_batches; ++b) {
      const double lr = CyclicLr(epoch + static_cast<double>(b) / num_batches,
                                 tc.lr_min, tc.lr_max, tc.cycle_epochs);
      Tensor batch = Tensor::Zeros({bsz, feature_dim, frames});
      std::vector<int64_t> labels(bsz);
      for (int64_t i = 0; i < bsz; ++i) {
        const std::string& id = ids[b * bsz + i];
        const Tensor& utt = data.train.at(id);
        const int64_t start =
            static_cast<int64_t>(rng.UniformIndex(static_cast<size_t>(utt.Dim(1))));
        const Tensor seg = evalkit::ExtractSegment(utt, start, frames);
        std::copy(seg.data.begin(), seg.data.end(),
                  batch.data.begin() + i * feature_dim * frames);
        labels[i] = data.speaker_of.at(id);
      }
      batch = Augment(batch, tc.augment, &rng);
      space::SubnetSpec last;
      const double loss =
          DynamicPathStep(st, entry.config, tc, batch, labels, lr, &sampler, &last);
      if (log != nullptr) {
        log->push_back(TrainLogEntry{space::StageName(entry.stage), epoch,
                                     static_cast<int>(b), lr, loss, last.ToString()});
      }
    }
  }
}

void ProgressiveTrain(TrainerState* st, const StageSchedule& sched,
                      const TrainConfig& tc, const dataset::Dataset& data,
                      std::vector<TrainLogEntry>* log,
                      const std::function<void(const TrainerState&, const StageSchedule::Entry&)>&
                          on_stage_done) {
  ValidateSchedule(sched);
  Require(st->stages_done >= 0 &&
              st->stages_done <= static_cast<int>(sched.entries.size()),
          "trainer resume index is outside the schedule", ErrorKind::kState);
  for (size_t i = st->stages_done; i < sched.entries.size(); ++i) {
    TrainStage(st, sched.entries[i], static_cast<int>(i), tc, data, log);
    st->stages_done = static_cast<int>(i) + 1;
    if (on_stage_done) on_stage_done(*st, sched.entries[i]);
  }
}

}  // namespace trainer
}  // namespace tdnas
