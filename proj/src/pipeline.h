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

#ifndef TDNAS_PIPELINE_H_
#define TDNAS_PIPELINE_H_

#include <string>
#include <vector>

#include "costmodel.h"
#include "dataset.h"
#include "evalkit.h"
#include "json.hpp"
#include "json_io.h"
#include "predictor.h"
#include "searcher.h"
#include "trainer.h"

// Orchestration shared by the C API and the command-line tool: bundled
// configuration, file round trips and the multi-step flows (progressive
// training, record collection, trial evaluation).
namespace tdnas {
namespace pipeline {

struct ProjectConfig {
  supernet::SupernetConfig supernet;
  dataset::DatasetConfig dataset;
  trainer::TrainConfig train;
  predictor::PredictorTrainOptions predictor;
  searcher::EvolutionConfig evolution;
};

nlohmann::json ToJson(const ProjectConfig& p);
ProjectConfig ProjectFromJson(const nlohmann::json& j);

// Presets.  "full" mirrors the published dynamic-network dimensions; "toy" is
// sized so the whole flow runs in seconds on a CPU.
ProjectConfig FullProject();
ProjectConfig ToyProject();
ProjectConfig ProjectPreset(const std::string& name);

// Plain-text JSON files.
void SaveJsonFile(const nlohmann::json& j, const std::string& path);
nlohmann::json LoadJsonFile(const std::string& path, const std::string& what);

// Single-file round trips through the array container.
void SaveDataset(const dataset::Dataset& ds, const std::string& path);
dataset::Dataset LoadDataset(const std::string& path);

void SaveTrainerState(const trainer::TrainerState& st, const std::string& path);
trainer::TrainerState LoadTrainerState(const std::string& path);

void SavePredictor(const predictor::PredictorModel& model, const std::string& path);
predictor::PredictorModel LoadPredictor(const std::string& path);

void SaveExportedSubnet(const supernet::ExportedSubnet& sub, const std::string& path);
supernet::ExportedSubnet LoadExportedSubnet(const std::string& path);

// Runs all schedule stages that st has not finished yet, checkpointing into
// out_dir after each ("stage-<name>.ckpt") and writing "train_log.json".
// Returns a summary with per-stage first/last losses.
nlohmann::json TrainProgressive(const ProjectConfig& p, const dataset::Dataset& ds,
                                trainer::TrainerState* st, const std::string& out_dir);

struct EvalOptions {
  int64_t segment_frames = 300;
  int segments_per_utt = 5;
  int recal_utts = 64;   // 0 skips BN recalibration
  int recal_batch = 16;
  int snorm_k = 0;       // 0 skips score normalization
  int snorm_cohort = 0;
};

// Missing keys keep the passed defaults; unknown keys are rejected.
EvalOptions EvalOptionsFromJson(const nlohmann::json& j, const EvalOptions& defaults);

struct EvalOutput {
  double eer = 0;
  double min_dcf = 0;
  int n_target = 0;
  int n_nontarget = 0;
  std::vector<evalkit::ScoredPair> scores;
};

// Scores every trial of the dataset with one subnet: optional BN
// recalibration on training utterances, segment embeddings, mean pairwise
// cosine, optional adaptive s-norm.
EvalOutput EvaluateTrials(trainer::TrainerState* st, const space::SubnetSpec& spec,
                          const dataset::Dataset& ds, const EvalOptions& opts);

// Samples `count` subnets from the space and measures each on the trial list.
std::vector<predictor::AccuracyRecord> CollectRecords(
    trainer::TrainerState* st, const space::SpaceConfig& cfg,
    const dataset::Dataset& ds, int count, uint64_t seed, const EvalOptions& opts);

// Budget metric lookup: "macs", "params" or "latency_ms" (the latter needs a
// table covering the space).
searcher::CostFn MakeCostFn(const supernet::SupernetConfig& cfg,
                            const std::string& budget_metric, int64_t frames,
                            const costmodel::LatencyTable* table);

}  // namespace pipeline
}  // namespace tdnas

#endif  // TDNAS_PIPELINE_H_
