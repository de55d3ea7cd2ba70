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

#include "tdnas/tdnas.h"

#include <cstdlib>
#include <cstring>
#include <exception>
#include <optional>
#include <set>
#include <string>

#include "common.h"
#include "costmodel.h"
#include "dataset.h"
#include "json_io.h"
#include "pipeline.h"
#include "predictor.h"
#include "searcher.h"
#include "space.h"
#include "supernet.h"
#include "trainer.h"

struct tdnas_ctx {
  tdnas::pipeline::ProjectConfig project;
  std::optional<tdnas::dataset::Dataset> dataset;
  std::optional<tdnas::trainer::TrainerState> trainer;
  std::optional<tdnas::predictor::PredictorModel> predictor;
  std::optional<tdnas::costmodel::LatencyTable> latency;
  std::string last_error;
};

namespace {

using nlohmann::json;
namespace td = tdnas;

template <typename Fn>
tdnas_status Guard(tdnas_ctx* ctx, Fn&& fn) {
  if (ctx == nullptr) return TDNAS_ERR_INVALID_ARGUMENT;
  try {
    fn();
    ctx->last_error.clear();
    return TDNAS_OK;
  } catch (const td::Error& e) {
    ctx->last_error = e.what();
    return static_cast<tdnas_status>(static_cast<int>(e.kind()));
  } catch (const std::exception& e) {
    ctx->last_error = e.what();
    return TDNAS_ERR_INTERNAL;
  }
}

void SetOut(char** out_json, const json& j) {
  if (out_json == nullptr) return;
  const std::string s = j.dump();
  char* buf = static_cast<char*>(std::malloc(s.size() + 1));
  td::Require(buf != nullptr, "allocation failed", td::ErrorKind::kInternal);
  std::memcpy(buf, s.data(), s.size() + 1);
  *out_json = buf;
}

std::string CStr(const char* s, const char* what) {
  td::Require(s != nullptr, std::string(what) + " must not be NULL");
  return std::string(s);
}

td::space::SpaceConfig ResolveSpace(const tdnas_ctx& ctx, const char* space) {
  const std::string name = CStr(space, "space name");
  if (name == "fine") return td::space::FineConfig(ctx.project.supernet.shape);
  if (name == "grid") return td::space::GridConfig(ctx.project.supernet.shape);
  return td::space::StageConfig(ctx.project.supernet.shape, td::space::StageFromName(name));
}

td::space::SubnetSpec ParseSpec(const char* spec_json) {
  return td::jsonio::SubnetSpecFromJson(
      td::jsonio::ParseJsonText(CStr(spec_json, "spec JSON"), "spec JSON"));
}

td::pipeline::EvalOptions ResolveEvalOptions(const tdnas_ctx& ctx, const char* eval_json) {
  td::pipeline::EvalOptions opts;
  opts.segment_frames = ctx.project.supernet.default_frames;
  if (eval_json == nullptr) return opts;
  return td::pipeline::EvalOptionsFromJson(
      td::jsonio::ParseJsonText(eval_json, "eval options"), opts);
}

const td::dataset::Dataset& NeedDataset(const tdnas_ctx& ctx) {
  td::Require(ctx.dataset.has_value(),
              "no dataset in this context; generate or load one first",
              td::ErrorKind::kState);
  return *ctx.dataset;
}

td::trainer::TrainerState& NeedTrainer(tdnas_ctx& ctx) {
  td::Require(ctx.trainer.has_value(),
              "no trainer state in this context; train or load a checkpoint first",
              td::ErrorKind::kState);
  return *ctx.trainer;
}

}  // namespace

extern "C" {

const char* tdnas_version(void) { return "1.0.0"; }

tdnas_ctx* tdnas_ctx_new(void) {
  try {
    return new tdnas_ctx();
  } catch (...) {
    return nullptr;
  }
}

void tdnas_ctx_free(tdnas_ctx* ctx) { delete ctx; }

const char* tdnas_last_error(const tdnas_ctx* ctx) {
  return ctx == nullptr ? "null context" : ctx->last_error.c_str();
}

void tdnas_string_free(char* s) { std::free(s); }

tdnas_status tdnas_configure(tdnas_ctx* ctx, const char* project_json) {
  return Guard(ctx, [&] {
    td::pipeline::ProjectConfig next;
    if (project_json != nullptr && project_json[0] != '\0') {
      next = td::pipeline::ProjectFromJson(
          td::jsonio::ParseJsonText(project_json, "project config"));
    }
    td::supernet::ValidateSupernetConfig(next.supernet);
    td::dataset::ValidateDatasetConfig(next.dataset);
    td::trainer::ValidateTrainConfig(next.train);
    td::searcher::ValidateEvolutionConfig(next.evolution);
    ctx->project = next;
    // Previously loaded artifacts may not match the new configuration.
    ctx->dataset.reset();
    ctx->trainer.reset();
    ctx->predictor.reset();
    ctx->latency.reset();
  });
}

tdnas_status tdnas_project_json(tdnas_ctx* ctx, char** out_json) {
  return Guard(ctx, [&] { SetOut(out_json, td::pipeline::ToJson(ctx->project)); });
}

tdnas_status tdnas_space_describe(tdnas_ctx* ctx, const char* space, char** out_json) {
  return Guard(ctx, [&] {
    const td::space::SpaceConfig cfg = ResolveSpace(*ctx, space);
    SetOut(out_json, json{{"size", td::space::SpaceSize(cfg)},
                          {"degrees_of_freedom", td::space::DegreesOfFreedom(cfg)},
                          {"encoding_length", td::space::EncodingLength(cfg)},
                          {"config", td::jsonio::ToJson(cfg)}});
  });
}

tdnas_status tdnas_space_sample(tdnas_ctx* ctx, const char* space, uint64_t seed,
                                int count, char** out_json) {
  return Guard(ctx, [&] {
    td::Require(count >= 1, "sample count must be >= 1");
    const td::space::SpaceConfig cfg = ResolveSpace(*ctx, space);
    td::space::SamplerState state{seed, 0};
    json specs = json::array();
    for (int i = 0; i < count; ++i)
      specs.push_back(td::jsonio::ToJson(td::space::Sample(cfg, &state)));
    SetOut(out_json, json{{"specs", std::move(specs)},
                          {"seed", state.seed},
                          {"draws", state.draw_count}});
  });
}

tdnas_status tdnas_space_grid(tdnas_ctx* ctx, char** out_json) {
  return Guard(ctx, [&] {
    const td::space::SpaceConfig cfg = td::space::GridConfig(ctx->project.supernet.shape);
    json specs = json::array();
    for (const auto& s : td::space::EnumerateGrid(cfg))
      specs.push_back(td::jsonio::ToJson(s));
    SetOut(out_json, json{{"specs", std::move(specs)}});
  });
}

tdnas_status tdnas_space_validate(tdnas_ctx* ctx, const char* space,
                                  const char* spec_json, char** out_json) {
  return Guard(ctx, [&] {
    const td::space::SpaceConfig cfg = ResolveSpace(*ctx, space);
    const td::space::Validation v = td::space::Validate(ParseSpec(spec_json), cfg);
    json j{{"ok", v.ok}};
    if (!v.ok) j["reason"] = v.reason;
    SetOut(out_json, j);
  });
}

tdnas_status tdnas_space_encode(tdnas_ctx* ctx, const char* space,
                                const char* spec_json, char** out_json) {
  return Guard(ctx, [&] {
    const td::space::SpaceConfig cfg = ResolveSpace(*ctx, space);
    const std::vector<double> enc = td::space::EncodeOneHot(ParseSpec(spec_json), cfg);
    SetOut(out_json, json{{"length", enc.size()}, {"encoding", enc}});
  });
}

tdnas_status tdnas_cost_report(tdnas_ctx* ctx, const char* spec_json,
                               int64_t frames, char** out_json) {
  return Guard(ctx, [&] {
    const td::space::SubnetSpec spec = ParseSpec(spec_json);
    const int64_t f = frames > 0 ? frames : ctx->project.supernet.default_frames;
    const td::costmodel::LatencyTable* table =
        ctx->latency.has_value() ? &*ctx->latency : nullptr;
    SetOut(out_json, td::jsonio::ToJson(
                         td::costmodel::MakeReport(spec, ctx->project.supernet, f, table)));
  });
}

tdnas_status tdnas_latency_table_build(tdnas_ctx* ctx, const char* space,
                                       int64_t frames, int synthetic,
                                       const char* out_path, char** out_json) {
  return Guard(ctx, [&] {
    const td::space::SpaceConfig cfg =
        space == nullptr ? td::space::FineConfig(ctx->project.supernet.shape)
                         : ResolveSpace(*ctx, space);
    const int64_t f = frames > 0 ? frames : ctx->project.supernet.default_frames;
    td::costmodel::LatencyRunnerOptions opts;
    opts.synthetic = synthetic != 0;
    const td::costmodel::LatencyTable table =
        td::costmodel::BuildLatencyTable(cfg, ctx->project.supernet, f, opts);
    ctx->latency = table;
    json j{{"device", table.device},
           {"frames", table.frames},
           {"entries", table.ms.size()}};
    if (out_path != nullptr) {
      td::pipeline::SaveJsonFile(td::jsonio::ToJson(table), out_path);
      j["path"] = out_path;
    }
    SetOut(out_json, j);
  });
}

tdnas_status tdnas_latency_table_load(tdnas_ctx* ctx, const char* path) {
  return Guard(ctx, [&] {
    ctx->latency = td::jsonio::LatencyTableFromJson(td::pipeline::LoadJsonFile(
        CStr(path, "latency table path"), "latency table"));
  });
}

tdnas_status tdnas_dataset_generate(tdnas_ctx* ctx, const char* out_path,
                                    char** out_json) {
  return Guard(ctx, [&] {
    ctx->dataset = td::dataset::Generate(ctx->project.dataset);
    json j{{"speakers", ctx->dataset->cfg.n_speakers},
           {"train_utts", ctx->dataset->train.size()},
           {"eval_utts", ctx->dataset->eval.size()},
           {"trials", ctx->dataset->trials.size()}};
    if (out_path != nullptr) {
      td::pipeline::SaveDataset(*ctx->dataset, out_path);
      j["path"] = out_path;
    }
    SetOut(out_json, j);
  });
}

tdnas_status tdnas_dataset_load(tdnas_ctx* ctx, const char* path) {
  return Guard(ctx, [&] {
    ctx->dataset = td::pipeline::LoadDataset(CStr(path, "dataset path"));
  });
}

tdnas_status tdnas_train_progressive(tdnas_ctx* ctx, const char* out_dir,
                                     char** out_json) {
  return Guard(ctx, [&] {
    const td::dataset::Dataset& ds = NeedDataset(*ctx);
    if (!ctx->trainer.has_value()) {
      ctx->trainer = td::trainer::InitTrainer(ctx->project.supernet,
                                              ds.cfg.n_speakers,
                                              ctx->project.train.seed);
    }
    SetOut(out_json,
           td::pipeline::TrainProgressive(ctx->project, ds, &*ctx->trainer,
                                          CStr(out_dir, "output directory")));
  });
}

tdnas_status tdnas_trainer_load(tdnas_ctx* ctx, const char* ckpt_path) {
  return Guard(ctx, [&] {
    ctx->trainer = td::pipeline::LoadTrainerState(CStr(ckpt_path, "checkpoint path"));
  });
}

tdnas_status tdnas_export_subnet(tdnas_ctx* ctx, const char* spec_json,
                                 const char* out_path, char** out_json) {
  return Guard(ctx, [&] {
    const td::trainer::TrainerState& st = NeedTrainer(*ctx);
    const td::space::SubnetSpec spec = ParseSpec(spec_json);
    const td::supernet::ExportedSubnet sub = td::supernet::ExportSubnet(st.net, spec);
    const std::string path = CStr(out_path, "output path");
    td::pipeline::SaveExportedSubnet(sub, path);
    SetOut(out_json,
           json{{"path", path},
                {"params", td::supernet::NumParams(sub)},
                {"macs", td::costmodel::CountMacs(spec, st.net.cfg,
                                                  st.net.cfg.default_frames)}});
  });
}

tdnas_status tdnas_eval_trials(tdnas_ctx* ctx, const char* spec_json,
                               const char* eval_json, char** out_json) {
  return Guard(ctx, [&] {
    const td::dataset::Dataset& ds = NeedDataset(*ctx);
    td::trainer::TrainerState& st = NeedTrainer(*ctx);
    const td::pipeline::EvalOutput out = td::pipeline::EvaluateTrials(
        &st, ParseSpec(spec_json), ds, ResolveEvalOptions(*ctx, eval_json));
    SetOut(out_json, json{{"eer", out.eer},
                          {"min_dcf", out.min_dcf},
                          {"n_target", out.n_target},
                          {"n_nontarget", out.n_nontarget}});
  });
}

tdnas_status tdnas_collect_records(tdnas_ctx* ctx, const char* space, int count,
                                   uint64_t seed, const char* eval_json,
                                   char** out_json) {
  return Guard(ctx, [&] {
    const td::dataset::Dataset& ds = NeedDataset(*ctx);
    td::trainer::TrainerState& st = NeedTrainer(*ctx);
    const auto records = td::pipeline::CollectRecords(
        &st, ResolveSpace(*ctx, space), ds, count, seed,
        ResolveEvalOptions(*ctx, eval_json));
    json arr = json::array();
    for (const auto& r : records) arr.push_back(td::jsonio::ToJson(r));
    SetOut(out_json, arr);
  });
}

tdnas_status tdnas_predictor_train(tdnas_ctx* ctx, const char* records_json,
                                   const char* space, const char* out_path,
                                   char** out_json) {
  return Guard(ctx, [&] {
    const json arr = td::jsonio::ParseJsonText(CStr(records_json, "records JSON"),
                                               "records JSON");
    td::Require(arr.is_array(), "records JSON must be an array",
                td::ErrorKind::kBadConfig);
    std::vector<td::predictor::AccuracyRecord> records;
    for (const auto& r : arr) records.push_back(td::jsonio::AccuracyRecordFromJson(r));
    td::predictor::PredictorTrainReport report;
    ctx->predictor = td::predictor::TrainPredictor(records, ResolveSpace(*ctx, space),
                                                   ctx->project.predictor, &report);
    json j{{"n_train", report.n_train},
           {"n_val", report.n_val},
           {"train_mae", report.train_mae},
           {"val_mae", report.val_mae},
           {"baseline_val_mae", report.baseline_val_mae},
           {"target_metric", ctx->predictor->target_metric}};
    if (out_path != nullptr) {
      td::pipeline::SavePredictor(*ctx->predictor, out_path);
      j["path"] = out_path;
    }
    SetOut(out_json, j);
  });
}

tdnas_status tdnas_predictor_load(tdnas_ctx* ctx, const char* path) {
  return Guard(ctx, [&] {
    ctx->predictor = td::pipeline::LoadPredictor(CStr(path, "predictor path"));
  });
}

tdnas_status tdnas_predictor_predict(tdnas_ctx* ctx, const char* spec_json,
                                     char** out_json) {
  return Guard(ctx, [&] {
    td::Require(ctx->predictor.has_value(),
                "no predictor in this context; train or load one first",
                td::ErrorKind::kState);
    const double value = td::predictor::Predict(*ctx->predictor, ParseSpec(spec_json));
    SetOut(out_json,
           json{{"metric", ctx->predictor->target_metric}, {"value", value}});
  });
}

tdnas_status tdnas_search(tdnas_ctx* ctx, const char* search_json,
                          char** out_json) {
  return Guard(ctx, [&] {
    const json sj = td::jsonio::ParseJsonText(CStr(search_json, "search JSON"),
                                              "search request");
    td::Require(sj.is_object(), "search request must be a JSON object",
                td::ErrorKind::kBadConfig);
    static const std::set<std::string> allowed = {
        "algorithm", "budget_metric", "budget", "metric", "frames",
        "space",     "samples",       "seed",   "evolution", "eval"};
    for (const auto& [key, value] : sj.items()) {
      (void)value;
      td::Require(allowed.count(key) != 0,
                  "unknown key \"" + key + "\" in search request",
                  td::ErrorKind::kBadConfig);
    }
    td::Require(sj.contains("algorithm") && sj.at("algorithm").is_string(),
                "search request needs a string \"algorithm\"", td::ErrorKind::kBadConfig);
    td::Require(sj.contains("budget_metric") && sj.at("budget_metric").is_string(),
                "search request needs a string \"budget_metric\"", td::ErrorKind::kBadConfig);
    td::Require(sj.contains("budget") && sj.at("budget").is_number(),
                "search request needs a numeric \"budget\"", td::ErrorKind::kBadConfig);
    const std::string algorithm = sj.at("algorithm").get<std::string>();
    td::Require(algorithm == "grid" || algorithm == "random" || algorithm == "evolution",
                "unknown search algorithm \"" + algorithm +
                    "\" (expected grid, random or evolution)",
                td::ErrorKind::kBadConfig);
    const std::string budget_metric = sj.at("budget_metric").get<std::string>();
    const double budget = sj.at("budget").get<double>();
    const std::string metric = sj.value("metric", "predictor");
    const int64_t frames = sj.value("frames", ctx->project.supernet.default_frames);
    const std::string space_name =
        sj.value("space", algorithm == "grid" ? std::string("grid") : std::string("fine"));
    const td::space::SpaceConfig cfg = ResolveSpace(*ctx, space_name.c_str());

    const td::searcher::CostFn cost = td::pipeline::MakeCostFn(
        ctx->project.supernet, budget_metric, frames,
        ctx->latency.has_value() ? &*ctx->latency : nullptr);

    td::searcher::MetricFn metric_fn;
    if (metric == "predictor") {
      td::Require(ctx->predictor.has_value(),
                  "search metric \"predictor\" needs a trained or loaded predictor",
                  td::ErrorKind::kState);
      const td::predictor::PredictorModel* model = &*ctx->predictor;
      metric_fn = [model](const td::space::SubnetSpec& s) {
        return td::predictor::Predict(*model, s);
      };
    } else if (metric == "supernet") {
      NeedDataset(*ctx);
      NeedTrainer(*ctx);
      const td::pipeline::EvalOptions opts = ResolveEvalOptions(
          *ctx, sj.contains("eval") ? sj.at("eval").dump().c_str() : nullptr);
      metric_fn = [ctx, opts](const td::space::SubnetSpec& s) {
        return td::pipeline::EvaluateTrials(&*ctx->trainer, s, *ctx->dataset, opts).eer;
      };
    } else {
      td::Fail(td::ErrorKind::kBadConfig,
               "unknown search metric \"" + metric + "\" (expected predictor or supernet)");
    }

    td::searcher::SearchResult result;
    if (algorithm == "grid") {
      result = td::searcher::GridSearch(cfg, metric_fn, cost, budget);
    } else if (algorithm == "random") {
      const int samples = sj.value("samples", 500);
      const uint64_t seed = sj.value("seed", 1);
      result = td::searcher::RandomSearch(cfg, samples, seed, metric_fn, cost, budget);
    } else {
      td::searcher::EvolutionConfig ec = ctx->project.evolution;
      if (sj.contains("evolution")) ec = td::jsonio::EvolutionConfigFromJson(sj.at("evolution"));
      if (sj.contains("seed")) ec.seed = sj.at("seed").get<uint64_t>();
      result = td::searcher::Evolve(cfg, ec, metric_fn, cost, budget);
    }
    SetOut(out_json, td::jsonio::ToJson(result));
  });
}

}  // extern "C"
