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

#ifndef TDNAS_JSON_IO_H_
#define TDNAS_JSON_IO_H_

#include <string>

#include "costmodel.h"
#include "dataset.h"
#include "json.hpp"
#include "predictor.h"
#include "searcher.h"
#include "space.h"
#include "supernet.h"
#include "trainer.h"

// JSON bindings for every externally visible config and result type.  Readers
// treat missing keys as "keep the default", reject unknown keys and wrong
// types, and name the offending key in the error.
namespace tdnas {
namespace jsonio {

nlohmann::json ParseJsonText(const std::string& text, const std::string& what);

nlohmann::json ToJson(const space::SubnetSpec& s);
space::SubnetSpec SubnetSpecFromJson(const nlohmann::json& j);

nlohmann::json ToJson(const space::SpaceShape& s);
space::SpaceShape SpaceShapeFromJson(const nlohmann::json& j);

nlohmann::json ToJson(const space::SpaceConfig& c);
space::SpaceConfig SpaceConfigFromJson(const nlohmann::json& j);

nlohmann::json ToJson(const supernet::SupernetConfig& c);
supernet::SupernetConfig SupernetConfigFromJson(const nlohmann::json& j);

nlohmann::json ToJson(const dataset::DatasetConfig& c);
dataset::DatasetConfig DatasetConfigFromJson(const nlohmann::json& j);

nlohmann::json ToJson(const trainer::AugmentPolicy& p);
trainer::AugmentPolicy AugmentPolicyFromJson(const nlohmann::json& j);

nlohmann::json ToJson(const trainer::TrainConfig& c);
trainer::TrainConfig TrainConfigFromJson(const nlohmann::json& j);

nlohmann::json ToJson(const searcher::EvolutionConfig& c);
searcher::EvolutionConfig EvolutionConfigFromJson(const nlohmann::json& j);

nlohmann::json ToJson(const predictor::PredictorTrainOptions& o);
predictor::PredictorTrainOptions PredictorTrainOptionsFromJson(const nlohmann::json& j);

nlohmann::json ToJson(const costmodel::LatencyTable& t);
costmodel::LatencyTable LatencyTableFromJson(const nlohmann::json& j);

nlohmann::json ToJson(const costmodel::CostReport& r);

nlohmann::json ToJson(const predictor::AccuracyRecord& r);
predictor::AccuracyRecord AccuracyRecordFromJson(const nlohmann::json& j);

nlohmann::json ToJson(const searcher::SearchResult& r);

nlohmann::json ToJson(const trainer::TrainLogEntry& e);

}  // namespace jsonio
}  // namespace tdnas

#endif  // TDNAS_JSON_IO_H_
