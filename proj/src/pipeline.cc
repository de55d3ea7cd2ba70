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

#include "pipeline.h"

#include <algorithm>
#include <filesystem>
#include <map>
#include <set>
#include <utility>

#include "checkpoint.h"
#include "common.h"

namespace tdnas {
namespace pipeline {

using nlohmann::json;

json ToJson(const ProjectConfig& p) {
  return json{{"supernet", jsonio::ToJson(p.supernet)},
              {"dataset", jsonio::ToJson(p.dataset)},
              {"train", jsonio::ToJson(p.train)},
              {"predictor", jsonio::ToJson(p.predictor)},
              {"evolution", jsonio::ToJson(p.evolution)}};
}

ProjectConfig ProjectFromJson(const json& j) {
  Require(j.is_object(), "project config must be a JSON object", ErrorKind::kBadConfig);
  ProjectConfig p;
  if (j.contains("preset")) {
    Require(j.at("preset").is_string(), "key \"preset\" in project config must be a string",
            ErrorKind::kBadConfig);
    p = ProjectPreset(j.at("preset").get<std::string>());
  }
  // Section overrides merge onto the preset, so a partial object touches only
  // the keys it names.
  const auto merged = [](const json& base, const json& over, const std::string& what) {
    Require(over.is_object(), "key \"" + what + "\" in project config must be an object",
            ErrorKind::kBadConfig);
    json m = base;
    m.update(over, /*merge_objects=*/true);
    return m;
  };
  for (const auto& [key, value] : j.items()) {
    if (key == "preset") continue;
    if (key == "supernet") {
      p.supernet = jsonio::SupernetConfigFromJson(merged(jsonio::ToJson(p.supernet), value, key));
    } else if (key == "dataset") {
      p.dataset = jsonio::DatasetConfigFromJson(merged(jsonio::ToJson(p.dataset), value, key));
    } else if (key == "train") {
      p.train = jsonio::TrainConfigFromJson(merged(jsonio::ToJson(p.train), value, key));
    } else if (key == "predictor") {
      p.predictor =
          jsonio::PredictorTrainOptionsFromJson(merged(jsonio::ToJson(p.predictor), value, key));
    } else if (key == "evolution") {
      p.evolution = jsonio::EvolutionConfigFromJson(merged(jsonio::ToJson(p.evolution), value, key));
    } else {
      Fail(ErrorKind::kBadConfig, "unknown key \"" + key + "\" in project config");
    }
  }
  return p;
}

ProjectConfig FullProject() {
  ProjectConfig p;  // struct defaults already describe the full-size network
  p.dataset.n_speakers = 64;
  p.dataset.train_utts_per_speaker = 10;
  p.dataset.eval_utts_per_speaker = 4;
  p.dataset.feature_dim = 80;
  p.dataset.frames = 300;
  p.dataset.n_trials = 1000;
  p.train.stage_epochs["largest"] = 16;
  return p;
}

ProjectConfig ToyProject() {
  ProjectConfig p;
  p.supernet.shape.min_depth = 2;
  p.supernet.shape.max_depth = 4;
  p.supernet.shape.kernel_options = {1, 3, 5};
  p.supernet.shape.max_width_front = 64;
  p.supernet.shape.max_width_back = 192;
  p.supernet.shape.granularity = 8;
  p.supernet.shape.width_multipliers_stage1 = {0.5, 0.75, 1.0};
  p.supernet.shape.width_multipliers_stage2 = {0.25, 0.5, 0.75, 1.0};
  p.supernet.in_channels = 20;
  p.supernet.res2net_scale = 4;
  p.supernet.se_reduction = 4;
  p.supernet.se_bottleneck_cap = 32;
  p.supernet.att_bottleneck = 32;
  p.supernet.dilations = {2, 3, 4, 5};
  p.supernet.embedding_dim = 48;
  p.supernet.default_frames = 64;

  p.dataset.n_speakers = 32;
  p.dataset.train_utts_per_speaker = 8;
  p.dataset.eval_utts_per_speaker = 3;
  p.dataset.feature_dim = 20;
  p.dataset.frames = 80;
  p.dataset.noise_scale = 0.35;
  p.dataset.smoothing = 9;
  p.dataset.n_trials = 300;
  p.dataset.seed = 7;

  p.train.epochs_per_stage = 4;
  p.train.stage_epochs = {{"largest", 8}, {"width2", 6}};
  p.train.lr_min = 1e-8;
  p.train.lr_max = 2e-3;
  p.train.cycle_epochs = 4;
  p.train.paths_per_step = 1;
  p.train.batch_size = 16;
  p.train.frames_largest = 48;
  p.train.frames_other = 64;
  p.train.seed = 1;

  p.predictor.hidden = 64;
  p.predictor.epochs = 150;
  p.predictor.batch_size = 32;

  p.evolution.population = 24;
  p.evolution.generations = 12;
  return p;
}

ProjectConfig ProjectPreset(const std::string& name) {
  if (name == "toy") return ToyProject();
  if (name == "full") return FullProject();
  Fail(ErrorKind::kBadConfig, "unknown preset \"" + name + "\" (expected \"toy\" or \"full\")");
}

void SaveJsonFile(const json& j, const std::string& path) {
  checkpoint::WriteFileBytes(path, j.dump(2) + "\n");
}

json LoadJsonFile(const std::string& path, const std::string& what) {
  return jsonio::ParseJsonText(checkpoint::ReadFileBytes(path), what);
}

void SaveDataset(const dataset::Dataset& ds, const std::string& path) {
  checkpoint::Container c;
  json speakers = json::object();
  for (const auto& [id, spk] : ds.speaker_of) speakers[id] = spk;
  c.meta = json{{"kind", "dataset"},
                {"config", jsonio::ToJson(ds.cfg)},
                {"speakers", std::move(speakers)},
                {"trials", evalkit::FormatTrialList(ds.trials)}};
  for (const auto& [id, utt] : ds.train) c.arrays.emplace("train:" + id, utt);
  for (const auto& [id, utt] : ds.eval) c.arrays.emplace("eval:" + id, utt);
  checkpoint::Save(c, path);
}

dataset::Dataset LoadDataset(const std::string& path) {
  const checkpoint::Container c = checkpoint::Load(path);
  Require(c.meta.value("kind", "") == "dataset",
          "not a dataset container: " + path, ErrorKind::kCorrupt);
  Require(c.meta.contains("config") && c.meta.contains("speakers") && c.meta.contains("trials"),
          "dataset container is missing config/speakers/trials", ErrorKind::kCorrupt);
  dataset::Dataset ds;
  ds.cfg = jsonio::DatasetConfigFromJson(c.meta.at("config"));
  for (const auto& [id, spk] : c.meta.at("speakers").items()) {
    Require(spk.is_number_integer(), "dataset speaker map holds a non-integer", ErrorKind::kCorrupt);
    ds.speaker_of.emplace(id, spk.get<int>());
  }
  for (const auto& [name, t] : c.arrays) {
    Require(t.Rank() == 2, "dataset utterance " + name + " is not rank 2", ErrorKind::kCorrupt);
    if (name.rfind("train:", 0) == 0) {
      ds.train.emplace(name.substr(6), t);
    } else if (name.rfind("eval:", 0) == 0) {
      ds.eval.emplace(name.substr(5), t);
    } else {
      Fail(ErrorKind::kCorrupt, "unexpected array \"" + name + "\" in dataset container");
    }
  }
  ds.trials = evalkit::ParseTrialList(c.meta.at("trials").get<std::string>());
  for (const auto& tr : ds.trials) {
    Require(ds.eval.count(tr.id_a) && ds.eval.count(tr.id_b),
            "trial references unknown utterance " + tr.id_a + " / " + tr.id_b,
            ErrorKind::kCorrupt);
  }
  return ds;
}

namespace {

constexpr char kHeadName[] = "head.aam.w";

void CheckArraysMatch(const std::map<std::string, Tensor>& got,
                      const std::map<std::string, Tensor>& want,
                      const std::string& what) {
  for (const auto& [name, t] : want) {
    const auto it = got.find(name);
    Require(it != got.end(), what + " is missing array " + name, ErrorKind::kCorrupt);
    Require(it->second.shape == t.shape, what + " array " + name + " has the wrong shape",
            ErrorKind::kCorrupt);
  }
  for (const auto& [name, t] : got) {
    (void)t;
    Require(want.count(name) != 0, what + " has unexpected array " + name, ErrorKind::kCorrupt);
  }
}

}  // namespace

void SaveTrainerState(const trainer::TrainerState& st, const std::string& path) {
  checkpoint::Container c;
  c.meta = json{{"kind", "trainer_state"},
                {"supernet", jsonio::ToJson(st.net.cfg)},
                {"n_classes", st.n_classes},
                {"stages_done", st.stages_done}};
  for (const auto& [name, t] : st.net.params) c.arrays.emplace("p:" + name, t);
  for (const auto& [name, t] : st.net.buffers) c.arrays.emplace("b:" + name, t);
  checkpoint::Save(c, path);
}

trainer::TrainerState LoadTrainerState(const std::string& path) {
  const checkpoint::Container c = checkpoint::Load(path);
  Require(c.meta.value("kind", "") == "trainer_state",
          "not a trainer-state container: " + path, ErrorKind::kCorrupt);
  Require(c.meta.contains("supernet") && c.meta.contains("n_classes") &&
              c.meta.contains("stages_done"),
          "trainer-state container is missing fields", ErrorKind::kCorrupt);
  trainer::TrainerState st;
  st.net.cfg = jsonio::SupernetConfigFromJson(c.meta.at("supernet"));
  st.n_classes = c.meta.at("n_classes").get<int>();
  st.stages_done = c.meta.at("stages_done").get<int>();
  for (const auto& [name, t] : c.arrays) {
    if (name.rfind("p:", 0) == 0) {
      st.net.params.emplace(name.substr(2), t);
    } else if (name.rfind("b:", 0) == 0) {
      st.net.buffers.emplace(name.substr(2), t);
    } else {
      Fail(ErrorKind::kCorrupt, "unexpected array \"" + name + "\" in trainer state");
    }
  }
  // Rebuild the expected geometry and compare shapes array by array.
  trainer::TrainerState ref = trainer::InitTrainer(st.net.cfg, st.n_classes, 0);
  CheckArraysMatch(st.net.params, ref.net.params, "trainer state " + path);
  CheckArraysMatch(st.net.buffers, ref.net.buffers, "trainer state " + path);
  return st;
}

void SavePredictor(const predictor::PredictorModel& model, const std::string& path) {
  checkpoint::Container c;
  c.meta = json{{"kind", "predictor"},
                {"space", jsonio::ToJson(model.space_cfg)},
                {"target_metric", model.target_metric},
                {"norm_lo", model.norm_lo},
                {"norm_hi", model.norm_hi},
                {"hidden", model.hidden}};
  c.arrays = model.params;
  checkpoint::Save(c, path);
}

predictor::PredictorModel LoadPredictor(const std::string& path) {
  const checkpoint::Container c = checkpoint::Load(path);
  Require(c.meta.value("kind", "") == "predictor",
          "not a predictor container: " + path, ErrorKind::kCorrupt);
  predictor::PredictorModel m;
  m.space_cfg = jsonio::SpaceConfigFromJson(c.meta.at("space"));
  space::ValidateConfig(m.space_cfg);
  m.target_metric = c.meta.at("target_metric").get<std::string>();
  m.norm_lo = c.meta.at("norm_lo").get<double>();
  m.norm_hi = c.meta.at("norm_hi").get<double>();
  m.hidden = c.meta.at("hidden").get<int>();
  m.params = c.arrays;
  const int64_t h = m.hidden;
  const int64_t enc = space::EncodingLength(m.space_cfg);
  const std::map<std::string, std::vector<int64_t>> want = {
      {"l1.w", {h, enc}}, {"l1.b", {h}}, {"l2.w", {h, h}}, {"l2.b", {h}},
      {"l3.w", {h, h}},   {"l3.b", {h}}, {"head.w", {1, h}}, {"head.b", {1}}};
  for (const auto& [name, shape] : want) {
    const auto it = m.params.find(name);
    Require(it != m.params.end(), "predictor container is missing array " + name,
            ErrorKind::kCorrupt);
    Require(it->second.shape == shape, "predictor array " + name + " has the wrong shape",
            ErrorKind::kCorrupt);
  }
  Require(m.params.size() == want.size(), "predictor container has unexpected arrays",
          ErrorKind::kCorrupt);
  return m;
}

void SaveExportedSubnet(const supernet::ExportedSubnet& sub, const std::string& path) {
  checkpoint::Container c;
  c.meta = json{{"kind", "subnet"},
                {"spec", jsonio::ToJson(sub.spec)},
                {"supernet", jsonio::ToJson(sub.cfg)}};
  for (const auto& [name, t] : sub.params) c.arrays.emplace("p:" + name, t);
  for (const auto& [name, t] : sub.buffers) c.arrays.emplace("b:" + name, t);
  checkpoint::Save(c, path);
}

supernet::ExportedSubnet LoadExportedSubnet(const std::string& path) {
  const checkpoint::Container c = checkpoint::Load(path);
  Require(c.meta.value("kind", "") == "subnet",
          "not a subnet container: " + path, ErrorKind::kCorrupt);
  Require(c.meta.contains("spec") && c.meta.contains("supernet"),
          "subnet container is missing spec/supernet", ErrorKind::kCorrupt);
  supernet::ExportedSubnet sub;
  sub.spec = jsonio::SubnetSpecFromJson(c.meta.at("spec"));
  sub.cfg = jsonio::SupernetConfigFromJson(c.meta.at("supernet"));
  for (const auto& [name, t] : c.arrays) {
    if (name.rfind("p:", 0) == 0) {
      sub.params.emplace(name.substr(2), t);
    } else if (name.rfind("b:", 0) == 0) {
      sub.buffers.emplace(name.substr(2), t);
    } else {
      Fail(ErrorKind::kCorrupt, "unexpected array \"" + name + "\" in subnet container");
    }
  }
  supernet::CheckStructural(sub.spec, sub.cfg);
  return sub;
}

json TrainProgressive(const ProjectConfig& p, const dataset::Dataset& ds,
                      trainer::TrainerState* st, const std::string& out_dir) {
  Require(st != nullptr, "trainer state is null");
  Require(st->n_classes == ds.cfg.n_speakers,
          "trainer was initialized for a different number of speakers",
          ErrorKind::kInvalidArgument);
  std::filesystem::create_directories(out_dir);
  const trainer::StageSchedule sched = trainer::MakeSchedule(p.supernet.shape, p.train);
  const int resumed_from = st->stages_done;

  std::vector<trainer::TrainLogEntry> log;
  std::vector<std::string> checkpoints;
  trainer::ProgressiveTrain(
      st, sched, p.train, ds, &log,
      [&](const trainer::TrainerState& state, const trainer::StageSchedule::Entry& entry) {
        const std::string path =
            out_dir + "/stage-" + space::StageName(entry.stage) + ".ckpt";
        SaveTrainerState(state, path);
        checkpoints.push_back(path);
      });

  json log_json = json::array();
  for (const auto& e : log) log_json.push_back(jsonio::ToJson(e));
  SaveJsonFile(log_json, out_dir + "/train_log.json");

  json stages = json::array();
  for (size_t i = resumed_from; i < sched.entries.size(); ++i) {
    const std::string name = space::StageName(sched.entries[i].stage);
    double first = 0, last = 0;
    bool seen = false;
    for (const auto& e : log) {
      if (e.stage != name) continue;
      if (!seen) first = e.loss;
      last = e.loss;
      seen = true;
    }
    stages.push_back(json{{"stage", name},
                          {"epochs", sched.entries[i].epochs},
                          {"first_loss", first},
                          {"last_loss", last}});
  }
  return json{{"resumed_from", resumed_from},
              {"stages", std::move(stages)},
              {"log_entries", log.size()},
              {"checkpoints", checkpoints},
              {"train_log", out_dir + "/train_log.json"}};
}

namespace {

void ValidateEvalOptions(const EvalOptions& opts) {
  Require(opts.segment_frames >= 1, "segment_frames must be >= 1", ErrorKind::kBadConfig);
  Require(opts.segments_per_utt >= 1, "segments_per_utt must be >= 1", ErrorKind::kBadConfig);
  Require(opts.recal_utts >= 0 && opts.recal_batch >= 1,
          "recalibration sizes must be non-negative", ErrorKind::kBadConfig);
  Require(opts.snorm_k >= 0 && opts.snorm_cohort >= 0,
          "s-norm sizes must be non-negative", ErrorKind::kBadConfig);
  Require((opts.snorm_k > 0) == (opts.snorm_cohort > 0),
          "snorm_k and snorm_cohort must be enabled together", ErrorKind::kBadConfig);
  if (opts.snorm_k > 0) {
    Require(opts.snorm_cohort >= opts.snorm_k,
            "snorm_cohort must be at least snorm_k", ErrorKind::kBadConfig);
  }
}

template <typename T>
void ReadIntField(const json& j, const std::string& key, T* out) {
  if (!j.contains(key)) return;
  Require(j.at(key).is_number_integer(),
          "key \"" + key + "\" in eval options must be an integer", ErrorKind::kBadConfig);
  *out = j.at(key).get<T>();
}

// Stacks fixed-length segments of one utterance and embeds them together.
Tensor EmbedUtterance(trainer::TrainerState* st, const space::SubnetSpec& spec,
                      const Tensor& utt, const EvalOptions& opts) {
  const std::vector<int64_t> starts =
      evalkit::SegmentStarts(utt.Dim(1), opts.segment_frames, opts.segments_per_utt);
  const int64_t n = static_cast<int64_t>(starts.size());
  Tensor batch = Tensor::Zeros({n, utt.Dim(0), opts.segment_frames});
  for (int64_t i = 0; i < n; ++i) {
    const Tensor seg = evalkit::ExtractSegment(utt, starts[i], opts.segment_frames);
    std::copy(seg.data.begin(), seg.data.end(),
              batch.data.begin() + i * utt.Dim(0) * opts.segment_frames);
  }
  return supernet::Embed(&st->net, spec, batch);
}

}  // namespace

EvalOptions EvalOptionsFromJson(const json& j, const EvalOptions& defaults) {
  Require(j.is_object(), "eval options must be a JSON object", ErrorKind::kBadConfig);
  EvalOptions opts = defaults;
  ReadIntField(j, "segment_frames", &opts.segment_frames);
  ReadIntField(j, "segments_per_utt", &opts.segments_per_utt);
  ReadIntField(j, "recal_utts", &opts.recal_utts);
  ReadIntField(j, "recal_batch", &opts.recal_batch);
  ReadIntField(j, "snorm_k", &opts.snorm_k);
  ReadIntField(j, "snorm_cohort", &opts.snorm_cohort);
  static const std::set<std::string> allowed = {
      "segment_frames", "segments_per_utt", "recal_utts",
      "recal_batch",    "snorm_k",          "snorm_cohort"};
  for (const auto& [key, value] : j.items()) {
    (void)value;
    Require(allowed.count(key) != 0, "unknown key \"" + key + "\" in eval options",
            ErrorKind::kBadConfig);
  }
  return opts;
}

EvalOutput EvaluateTrials(trainer::TrainerState* st, const space::SubnetSpec& spec,
                          const dataset::Dataset& ds, const EvalOptions& opts) {
  Require(st != nullptr, "trainer state is null");
  ValidateEvalOptions(opts);
  Require(!ds.trials.empty(), "dataset has no trials", ErrorKind::kInvalidArgument);

  if (opts.recal_utts > 0) {
    std::vector<const Tensor*> utts;
    for (const auto& [id, utt] : ds.train) {
      utts.push_back(&utt);
      if (static_cast<int>(utts.size()) >= opts.recal_utts) break;
    }
    Require(!utts.empty(), "no training utterances to recalibrate on",
            ErrorKind::kInvalidArgument);
    std::vector<Tensor> owned;
    std::vector<const Tensor*> batches;
    for (size_t at = 0; at < utts.size(); at += opts.recal_batch) {
      const int64_t bsz = std::min<size_t>(opts.recal_batch, utts.size() - at);
      const int64_t ch = utts[at]->Dim(0);
      const int64_t frames = utts[at]->Dim(1);
      Tensor batch = Tensor::Zeros({bsz, ch, frames});
      for (int64_t i = 0; i < bsz; ++i) {
        const Tensor& u = *utts[at + i];
        Require(u.Dim(0) == ch && u.Dim(1) == frames,
                "recalibration utterances must share one shape", ErrorKind::kInvalidArgument);
        std::copy(u.data.begin(), u.data.end(), batch.data.begin() + i * ch * frames);
      }
      owned.push_back(std::move(batch));
    }
    batches.reserve(owned.size());
    for (const Tensor& b : owned) batches.push_back(&b);
    supernet::RecalibrateBn(&st->net, spec, batches);
  }

  std::map<std::string, Tensor> embs;
  for (const auto& [id, utt] : ds.eval) embs.emplace(id, EmbedUtterance(st, spec, utt, opts));

  std::vector<std::string> cohort_ids;
  std::map<std::string, Tensor> cohort;
  if (opts.snorm_k > 0) {
    for (const auto& [id, utt] : ds.train) {
      cohort_ids.push_back(id);
      cohort.emplace(id, EmbedUtterance(st, spec, utt, opts));
      if (static_cast<int>(cohort_ids.size()) >= opts.snorm_cohort) break;
    }
    Require(static_cast<int>(cohort_ids.size()) >= opts.snorm_k,
            "cohort smaller than snorm_k", ErrorKind::kInvalidArgument);
  }

  EvalOutput out;
  std::vector<double> targets, nontargets;
  for (const auto& tr : ds.trials) {
    const auto ia = embs.find(tr.id_a);
    const auto ib = embs.find(tr.id_b);
    Require(ia != embs.end() && ib != embs.end(),
            "trial references unknown utterance " + tr.id_a + " / " + tr.id_b,
            ErrorKind::kValidation);
    double score = evalkit::ScoreSegmentPair(ia->second, ib->second);
    if (opts.snorm_k > 0) {
      std::vector<double> ec, tc;
      ec.reserve(cohort_ids.size());
      tc.reserve(cohort_ids.size());
      for (const std::string& cid : cohort_ids) {
        ec.push_back(evalkit::ScoreSegmentPair(ia->second, cohort.at(cid)));
        tc.push_back(evalkit::ScoreSegmentPair(ib->second, cohort.at(cid)));
      }
      score = evalkit::SNormScore(score, ec, tc, opts.snorm_k);
    }
    out.scores.push_back(evalkit::ScoredPair{tr.id_a, tr.id_b, score});
    if (tr.label == 1) {
      targets.push_back(score);
    } else {
      nontargets.push_back(score);
    }
  }
  out.n_target = static_cast<int>(targets.size());
  out.n_nontarget = static_cast<int>(nontargets.size());
  out.eer = evalkit::ComputeEer(targets, nontargets);
  out.min_dcf = evalkit::ComputeMinDcf(targets, nontargets);
  return out;
}

std::vector<predictor::AccuracyRecord> CollectRecords(
    trainer::TrainerState* st, const space::SpaceConfig& cfg,
    const dataset::Dataset& ds, int count, uint64_t seed, const EvalOptions& opts) {
  Require(count >= 1, "record count must be >= 1");
  space::ValidateConfig(cfg);
  std::vector<predictor::AccuracyRecord> records;
  std::map<std::string, std::pair<double, double>> cache;
  space::SamplerState state{seed, 0};
  for (int i = 0; i < count; ++i) {
    const space::SubnetSpec spec = space::Sample(cfg, &state);
    const std::string key = spec.ToString();
    auto it = cache.find(key);
    if (it == cache.end()) {
      const EvalOutput out = EvaluateTrials(st, spec, ds, opts);
      it = cache.emplace(key, std::make_pair(out.eer, out.min_dcf)).first;
    }
    predictor::AccuracyRecord rec;
    rec.spec = spec;
    rec.eer = it->second.first;
    rec.min_dcf = it->second.second;
    rec.recalibrated = opts.recal_utts > 0;
    records.push_back(std::move(rec));
  }
  return records;
}

searcher::CostFn MakeCostFn(const supernet::SupernetConfig& cfg,
                            const std::string& budget_metric, int64_t frames,
                            const costmodel::LatencyTable* table) {
  if (budget_metric == "macs") {
    return [cfg, frames](const space::SubnetSpec& s) {
      return static_cast<double>(costmodel::CountMacs(s, cfg, frames));
    };
  }
  if (budget_metric == "params") {
    return [cfg](const space::SubnetSpec& s) {
      return static_cast<double>(costmodel::CountParams(s, cfg));
    };
  }
  if (budget_metric == "latency_ms") {
    Require(table != nullptr, "latency budget needs a latency table", ErrorKind::kBadConfig);
    const costmodel::LatencyTable copy = *table;
    return [cfg, copy](const space::SubnetSpec& s) {
      return costmodel::EstimateLatencyMs(s, cfg, copy);
    };
  }
  Fail(ErrorKind::kBadConfig,
       "unknown budget metric \"" + budget_metric + "\" (expected macs, params or latency_ms)");
}

}  // namespace pipeline
}  // namespace tdnas
