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

#include "json_io.h"

#include <set>
#include <utility>

#include "common.h"

namespace tdnas {
namespace jsonio {

using nlohmann::json;

namespace {

std::string CouplingName(space::Coupling c) {
  return c == space::Coupling::kGrid ? "grid" : "independent";
}

space::Coupling CouplingFromName(const std::string& name) {
  if (name == "grid") return space::Coupling::kGrid;
  if (name == "independent") return space::Coupling::kIndependent;
  Fail(ErrorKind::kBadConfig, "unknown coupling \"" + name + "\"");
}

// Field-by-field reader: missing keys keep defaults, unknown keys and type
// mismatches are rejected by name.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string what) : j_(j), what_(std::move(what)) {
    Require(j_.is_object(), what_ + " must be a JSON object", ErrorKind::kBadConfig);
  }

  bool Take(const std::string& key, const json** out) {
    used_.insert(key);
    if (!j_.contains(key)) return false;
    *out = &j_.at(key);
    return true;
  }

  void Read(const std::string& key, int* out) {
    const json* v;
    if (!Take(key, &v)) return;
    RequireType(key, v->is_number_integer(), "an integer");
    *out = v->get<int>();
  }

  void Read(const std::string& key, int64_t* out) {
    const json* v;
    if (!Take(key, &v)) return;
    RequireType(key, v->is_number_integer(), "an integer");
    *out = v->get<int64_t>();
  }

  void Read(const std::string& key, uint64_t* out) {
    const json* v;
    if (!Take(key, &v)) return;
    RequireType(key, v->is_number_unsigned() ||
                         (v->is_number_integer() && v->get<int64_t>() >= 0),
                "a non-negative integer");
    *out = v->get<uint64_t>();
  }

  void Read(const std::string& key, double* out) {
    const json* v;
    if (!Take(key, &v)) return;
    RequireType(key, v->is_number(), "a number");
    *out = v->get<double>();
  }

  void Read(const std::string& key, bool* out) {
    const json* v;
    if (!Take(key, &v)) return;
    RequireType(key, v->is_boolean(), "a boolean");
    *out = v->get<bool>();
  }

  void Read(const std::string& key, std::string* out) {
    const json* v;
    if (!Take(key, &v)) return;
    RequireType(key, v->is_string(), "a string");
    *out = v->get<std::string>();
  }

  void Read(const std::string& key, std::vector<int>* out) {
    const json* v;
    if (!Take(key, &v)) return;
    RequireType(key, v->is_array(), "an array of integers");
    std::vector<int> items;
    for (const auto& e : *v) {
      RequireType(key, e.is_number_integer(), "an array of integers");
      items.push_back(e.get<int>());
    }
    *out = std::move(items);
  }

  void Read(const std::string& key, std::vector<double>* out) {
    const json* v;
    if (!Take(key, &v)) return;
    RequireType(key, v->is_array(), "an array of numbers");
    std::vector<double> items;
    for (const auto& e : *v) {
      RequireType(key, e.is_number(), "an array of numbers");
      items.push_back(e.get<double>());
    }
    *out = std::move(items);
  }

  void Read(const std::string& key, std::map<std::string, int>* out) {
    const json* v;
    if (!Take(key, &v)) return;
    RequireType(key, v->is_object(), "an object of integers");
    std::map<std::string, int> items;
    for (const auto& [k, e] : v->items()) {
      RequireType(key, e.is_number_integer(), "an object of integers");
      items.emplace(k, e.get<int>());
    }
    *out = std::move(items);
  }

  void Read(const std::string& key, std::map<std::string, double>* out) {
    const json* v;
    if (!Take(key, &v)) return;
    RequireType(key, v->is_object(), "an object of numbers");
    std::map<std::string, double> items;
    for (const auto& [k, e] : v->items()) {
      RequireType(key, e.is_number(), "an object of numbers");
      items.emplace(k, e.get<double>());
    }
    *out = std::move(items);
  }

  void Done() const {
    for (const auto& [key, value] : j_.items()) {
      (void)value;
      Require(used_.count(key) != 0, "unknown key \"" + key + "\" in " + what_,
              ErrorKind::kBadConfig);
    }
  }

 private:
  void RequireType(const std::string& key, bool ok, const std::string& want) const {
    Require(ok, "key \"" + key + "\" in " + what_ + " must be " + want,
            ErrorKind::kBadConfig);
  }

  const json& j_;
  std::string what_;
  std::set<std::string> used_;
};

}  // namespace

json ParseJsonText(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    Fail(ErrorKind::kBadConfig, what + " is not valid JSON: " + e.what());
  }
}

json ToJson(const space::SubnetSpec& s) {
  return json{{"depth", s.depth},
              {"kernels", s.kernels},
              {"widths", s.widths},
              {"width_back", s.width_back}};
}

space::SubnetSpec SubnetSpecFromJson(const json& j) {
  ObjectReader r(j, "subnet spec");
  space::SubnetSpec s;
  s.depth = -1;
  r.Read("depth", &s.depth);
  r.Read("kernels", &s.kernels);
  r.Read("widths", &s.widths);
  r.Read("width_back", &s.width_back);
  r.Done();
  Require(s.depth >= 0 && !s.kernels.empty() && !s.widths.empty() && s.width_back > 0,
          "subnet spec needs depth, kernels, widths and width_back", ErrorKind::kBadConfig);
  return s;
}

json ToJson(const space::SpaceShape& s) {
  return json{{"min_depth", s.min_depth},
              {"max_depth", s.max_depth},
              {"kernel_options", s.kernel_options},
              {"max_width_front", s.max_width_front},
              {"max_width_back", s.max_width_back},
              {"granularity", s.granularity},
              {"width_multipliers_stage1", s.width_multipliers_stage1},
              {"width_multipliers_stage2", s.width_multipliers_stage2}};
}

space::SpaceShape SpaceShapeFromJson(const json& j) {
  ObjectReader r(j, "space shape");
  space::SpaceShape s;
  r.Read("min_depth", &s.min_depth);
  r.Read("max_depth", &s.max_depth);
  r.Read("kernel_options", &s.kernel_options);
  r.Read("max_width_front", &s.max_width_front);
  r.Read("max_width_back", &s.max_width_back);
  r.Read("granularity", &s.granularity);
  r.Read("width_multipliers_stage1", &s.width_multipliers_stage1);
  r.Read("width_multipliers_stage2", &s.width_multipliers_stage2);
  r.Done();
  return s;
}

json ToJson(const space::SpaceConfig& c) {
  return json{{"depth_options", c.depth_options},
              {"kernel_options", c.kernel_options},
              {"width_front_options", c.width_front_options},
              {"width_back_options", c.width_back_options},
              {"granularity", c.granularity},
              {"stage", space::StageName(c.stage)},
              {"coupling", CouplingName(c.coupling)}};
}

space::SpaceConfig SpaceConfigFromJson(const json& j) {
  ObjectReader r(j, "space config");
  space::SpaceConfig c;
  r.Read("depth_options", &c.depth_options);
  r.Read("kernel_options", &c.kernel_options);
  r.Read("width_front_options", &c.width_front_options);
  r.Read("width_back_options", &c.width_back_options);
  r.Read("granularity", &c.granularity);
  std::string stage = space::StageName(c.stage);
  r.Read("stage", &stage);
  c.stage = space::StageFromName(stage);
  std::string coupling = CouplingName(c.coupling);
  r.Read("coupling", &coupling);
  c.coupling = CouplingFromName(coupling);
  r.Done();
  return c;
}

json ToJson(const supernet::SupernetConfig& c) {
  return json{{"shape", ToJson(c.shape)},
              {"in_channels", c.in_channels},
              {"res2net_scale", c.res2net_scale},
              {"se_reduction", c.se_reduction},
              {"se_bottleneck_cap", c.se_bottleneck_cap},
              {"att_bottleneck", c.att_bottleneck},
              {"dilations", c.dilations},
              {"embedding_dim", c.embedding_dim},
              {"default_frames", c.default_frames}};
}

supernet::SupernetConfig SupernetConfigFromJson(const json& j) {
  ObjectReader r(j, "supernet config");
  supernet::SupernetConfig c;
  const json* shape;
  if (r.Take("shape", &shape)) c.shape = SpaceShapeFromJson(*shape);
  r.Read("in_channels", &c.in_channels);
  r.Read("res2net_scale", &c.res2net_scale);
  r.Read("se_reduction", &c.se_reduction);
  r.Read("se_bottleneck_cap", &c.se_bottleneck_cap);
  r.Read("att_bottleneck", &c.att_bottleneck);
  r.Read("dilations", &c.dilations);
  r.Read("embedding_dim", &c.embedding_dim);
  r.Read("default_frames", &c.default_frames);
  r.Done();
  return c;
}

json ToJson(const dataset::DatasetConfig& c) {
  return json{{"n_speakers", c.n_speakers},
              {"train_utts_per_speaker", c.train_utts_per_speaker},
              {"eval_utts_per_speaker", c.eval_utts_per_speaker},
              {"feature_dim", c.feature_dim},
              {"frames", c.frames},
              {"noise_scale", c.noise_scale},
              {"smoothing", c.smoothing},
              {"n_trials", c.n_trials},
              {"seed", c.seed}};
}

dataset::DatasetConfig DatasetConfigFromJson(const json& j) {
  ObjectReader r(j, "dataset config");
  dataset::DatasetConfig c;
  r.Read("n_speakers", &c.n_speakers);
  r.Read("train_utts_per_speaker", &c.train_utts_per_speaker);
  r.Read("eval_utts_per_speaker", &c.eval_utts_per_speaker);
  r.Read("feature_dim", &c.feature_dim);
  r.Read("frames", &c.frames);
  r.Read("noise_scale", &c.noise_scale);
  r.Read("smoothing", &c.smoothing);
  r.Read("n_trials", &c.n_trials);
  r.Read("seed", &c.seed);
  r.Done();
  return c;
}

json ToJson(const trainer::AugmentPolicy& p) {
  return json{{"identity", p.identity},
              {"gauss_noise", p.gauss_noise},
              {"time_mask", p.time_mask},
              {"freq_mask", p.freq_mask},
              {"noise_std", p.noise_std},
              {"max_time_mask", p.max_time_mask},
              {"max_freq_mask", p.max_freq_mask}};
}

trainer::AugmentPolicy AugmentPolicyFromJson(const json& j) {
  ObjectReader r(j, "augment policy");
  trainer::AugmentPolicy p;
  r.Read("identity", &p.identity);
  r.Read("gauss_noise", &p.gauss_noise);
  r.Read("time_mask", &p.time_mask);
  r.Read("freq_mask", &p.freq_mask);
  r.Read("noise_std", &p.noise_std);
  r.Read("max_time_mask", &p.max_time_mask);
  r.Read("max_freq_mask", &p.max_freq_mask);
  r.Done();
  return p;
}

json ToJson(const trainer::TrainConfig& c) {
  return json{{"epochs_per_stage", c.epochs_per_stage},
              {"stage_epochs", c.stage_epochs},
              {"lr_min", c.lr_min},
              {"lr_max", c.lr_max},
              {"cycle_epochs", c.cycle_epochs},
              {"paths_per_step", c.paths_per_step},
              {"batch_size", c.batch_size},
              {"frames_largest", c.frames_largest},
              {"frames_other", c.frames_other},
              {"aam_margin", c.aam_margin},
              {"aam_scale", c.aam_scale},
              {"bn_momentum", c.bn_momentum},
              {"augment", ToJson(c.augment)},
              {"seed", c.seed}};
}

trainer::TrainConfig TrainConfigFromJson(const json& j) {
  ObjectReader r(j, "train config");
  trainer::TrainConfig c;
  r.Read("epochs_per_stage", &c.epochs_per_stage);
  r.Read("stage_epochs", &c.stage_epochs);
  r.Read("lr_min", &c.lr_min);
  r.Read("lr_max", &c.lr_max);
  r.Read("cycle_epochs", &c.cycle_epochs);
  r.Read("paths_per_step", &c.paths_per_step);
  r.Read("batch_size", &c.batch_size);
  r.Read("frames_largest", &c.frames_largest);
  r.Read("frames_other", &c.frames_other);
  r.Read("aam_margin", &c.aam_margin);
  r.Read("aam_scale", &c.aam_scale);
  r.Read("bn_momentum", &c.bn_momentum);
  const json* aug;
  if (r.Take("augment", &aug)) c.augment = AugmentPolicyFromJson(*aug);
  r.Read("seed", &c.seed);
  r.Done();
  return c;
}

json ToJson(const searcher::EvolutionConfig& c) {
  return json{{"population", c.population},
              {"generations", c.generations},
              {"mutation_rate", c.mutation_rate},
              {"tournament", c.tournament},
              {"elites", c.elites},
              {"seed", c.seed}};
}

searcher::EvolutionConfig EvolutionConfigFromJson(const json& j) {
  ObjectReader r(j, "evolution config");
  searcher::EvolutionConfig c;
  r.Read("population", &c.population);
  r.Read("generations", &c.generations);
  r.Read("mutation_rate", &c.mutation_rate);
  r.Read("tournament", &c.tournament);
  r.Read("elites", &c.elites);
  r.Read("seed", &c.seed);
  r.Done();
  return c;
}

json ToJson(const predictor::PredictorTrainOptions& o) {
  return json{{"hidden", o.hidden},
              {"epochs", o.epochs},
              {"lr", o.lr},
              {"batch_size", o.batch_size},
              {"val_fraction", o.val_fraction},
              {"target_metric", o.target_metric},
              {"seed", o.seed}};
}

predictor::PredictorTrainOptions PredictorTrainOptionsFromJson(const json& j) {
  ObjectReader r(j, "predictor options");
  predictor::PredictorTrainOptions o;
  r.Read("hidden", &o.hidden);
  r.Read("epochs", &o.epochs);
  r.Read("lr", &o.lr);
  r.Read("batch_size", &o.batch_size);
  r.Read("val_fraction", &o.val_fraction);
  r.Read("target_metric", &o.target_metric);
  r.Read("seed", &o.seed);
  r.Done();
  return o;
}

json ToJson(const costmodel::LatencyTable& t) {
  return json{{"device", t.device},
              {"repeats", t.repeats},
              {"warmup", t.warmup},
              {"frames", t.frames},
              {"ms", t.ms}};
}

costmodel::LatencyTable LatencyTableFromJson(const json& j) {
  ObjectReader r(j, "latency table");
  costmodel::LatencyTable t;
  r.Read("device", &t.device);
  r.Read("repeats", &t.repeats);
  r.Read("warmup", &t.warmup);
  r.Read("frames", &t.frames);
  r.Read("ms", &t.ms);
  r.Done();
  return t;
}

json ToJson(const costmodel::CostReport& r) {
  json j{{"macs", r.macs},
         {"params", r.params},
         {"frames", r.frames},
         {"has_latency", r.has_latency},
         {"macs_by_cell", r.macs_by_cell}};
  if (r.has_latency) j["latency_ms"] = r.latency_ms;
  return j;
}

json ToJson(const predictor::AccuracyRecord& r) {
  return json{{"spec", ToJson(r.spec)},
              {"eer", r.eer},
              {"min_dcf", r.min_dcf},
              {"recalibrated", r.recalibrated}};
}

predictor::AccuracyRecord AccuracyRecordFromJson(const json& j) {
  ObjectReader r(j, "accuracy record");
  predictor::AccuracyRecord rec;
  const json* spec;
  Require(r.Take("spec", &spec), "accuracy record is missing \"spec\"", ErrorKind::kBadConfig);
  rec.spec = SubnetSpecFromJson(*spec);
  r.Read("eer", &rec.eer);
  r.Read("min_dcf", &rec.min_dcf);
  r.Read("recalibrated", &rec.recalibrated);
  r.Done();
  return rec;
}

json ToJson(const searcher::SearchResult& r) {
  json j{{"found", r.found},
         {"cost_evaluations", r.cost_evaluations},
         {"metric_evaluations", r.metric_evaluations}};
  if (r.found) {
    j["best"] = json{{"spec", ToJson(r.best.spec)},
                     {"cost", r.best.cost},
                     {"metric", r.best.metric}};
  }
  if (!r.generations.empty()) {
    json gens = json::array();
    for (const auto& g : r.generations) {
      gens.push_back(json{{"generation", g.generation},
                          {"feasible_count", g.feasible_count},
                          {"best_metric", g.best_metric},
                          {"mean_metric", g.mean_metric}});
    }
    j["generations"] = std::move(gens);
  }
  return j;
}

json ToJson(const trainer::TrainLogEntry& e) {
  return json{{"stage", e.stage}, {"epoch", e.epoch}, {"batch", e.batch},
              {"lr", e.lr},       {"loss", e.loss},   {"spec", e.spec}};
}

}  // namespace jsonio
}  // namespace tdnas
