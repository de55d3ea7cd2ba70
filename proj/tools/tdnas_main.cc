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

// Command-line front end.  All model logic lives behind the C API; this file
// only parses flags, assembles request JSON and prints responses.

#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "tdnas/tdnas.h"

namespace {

using nlohmann::json;

std::string ReadTextFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in.good()) throw CLI::ValidationError("cannot read file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Context plus the flags shared by every command.
struct Session {
  std::string config_path;
  std::string preset;
  bool pretty = false;
  tdnas_ctx* ctx = nullptr;

  ~Session() { tdnas_ctx_free(ctx); }

  int Fail(tdnas_status status) const {
    const json err{{"ok", false},
                   {"status", static_cast<int>(status)},
                   {"error", tdnas_last_error(ctx)}};
    std::fprintf(stderr, "%s\n", err.dump().c_str());
    return static_cast<int>(status);
  }

  // Creates the context and applies --config / --preset.
  int Open() {
    ctx = tdnas_ctx_new();
    if (ctx == nullptr) {
      std::fprintf(stderr, "{\"ok\":false,\"error\":\"out of memory\"}\n");
      return 8;
    }
    std::string project = "{}";
    if (!config_path.empty()) {
      project = ReadTextFile(config_path);
    } else if (!preset.empty()) {
      project = json{{"preset", preset}}.dump();
    }
    const tdnas_status status = tdnas_configure(ctx, project.c_str());
    return status == TDNAS_OK ? 0 : Fail(status);
  }

  int Print(char* owned_json) const {
    std::string text = owned_json == nullptr ? "{}" : owned_json;
    tdnas_string_free(owned_json);
    if (pretty) text = json::parse(text).dump(2);
    std::printf("%s\n", text.c_str());
    return 0;
  }

  // Runs one API call that yields a JSON result.
  int Call(const std::function<tdnas_status(char**)>& fn) {
    const int rc = Open();
    if (rc != 0) return rc;
    char* out = nullptr;
    const tdnas_status status = fn(&out);
    if (status != TDNAS_OK) {
      tdnas_string_free(out);
      return Fail(status);
    }
    return Print(out);
  }
};

// Inline JSON beats a file when both are given; exactly one is required.
struct SpecArg {
  std::string inline_json;
  std::string file;

  void Attach(CLI::App* cmd) {
    auto* a = cmd->add_option("--spec", inline_json, "architecture spec as inline JSON");
    auto* b = cmd->add_option("--spec-file", file, "file holding the architecture spec");
    a->excludes(b);
  }

  std::string Get() const {
    if (!inline_json.empty()) return inline_json;
    if (!file.empty()) return ReadTextFile(file);
    throw CLI::ValidationError("--spec or --spec-file is required");
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"architecture search for dynamic time-delay speaker embedding networks"};
  app.set_version_flag("--version", tdnas_version());
  app.require_subcommand(1);

  Session s;
  app.add_option("--config", s.config_path, "project configuration JSON file");
  app.add_option("--preset", s.preset, "built-in project preset: toy or full")
      ->check(CLI::IsMember({"toy", "full"}));
  app.add_flag("--pretty", s.pretty, "indent JSON output");

  int rc = 0;
  auto run = [&](const std::function<tdnas_status(char**)>& fn) { rc = s.Call(fn); };

  // ---- project ----
  app.add_subcommand("project", "print the effective project configuration")
      ->callback([&] { run([&](char** out) { return tdnas_project_json(s.ctx, out); }); });

  // ---- space ----
  auto* space = app.add_subcommand("space", "architecture space queries");
  space->require_subcommand(1);
  static std::string space_name = "fine";

  auto* sp_desc = space->add_subcommand("describe", "size, degrees of freedom, encoding length");
  sp_desc->add_option("--space", space_name, "space name: stage, fine or grid");
  sp_desc->callback([&] {
    run([&](char** out) { return tdnas_space_describe(s.ctx, space_name.c_str(), out); });
  });

  auto* sp_sample = space->add_subcommand("sample", "draw architectures uniformly");
  static uint64_t sample_seed = 1;
  static int sample_count = 1;
  sp_sample->add_option("--space", space_name, "space name: stage, fine or grid");
  sp_sample->add_option("--seed", sample_seed, "sampler seed");
  sp_sample->add_option("--count", sample_count, "number of draws");
  sp_sample->callback([&] {
    run([&](char** out) {
      return tdnas_space_sample(s.ctx, space_name.c_str(), sample_seed, sample_count, out);
    });
  });

  space->add_subcommand("grid", "enumerate the coupled grid space")->callback([&] {
    run([&](char** out) { return tdnas_space_grid(s.ctx, out); });
  });

  static SpecArg sp_spec;
  auto* sp_validate = space->add_subcommand("validate", "check a spec against a space");
  sp_validate->add_option("--space", space_name, "space name: stage, fine or grid");
  sp_spec.Attach(sp_validate);
  sp_validate->callback([&] {
    run([&](char** out) {
      return tdnas_space_validate(s.ctx, space_name.c_str(), sp_spec.Get().c_str(), out);
    });
  });

  static SpecArg enc_spec;
  auto* sp_encode = space->add_subcommand("encode", "one-hot encode a spec");
  sp_encode->add_option("--space", space_name, "space name: stage, fine or grid");
  enc_spec.Attach(sp_encode);
  sp_encode->callback([&] {
    run([&](char** out) {
      return tdnas_space_encode(s.ctx, space_name.c_str(), enc_spec.Get().c_str(), out);
    });
  });

  // ---- cost ----
  auto* cost = app.add_subcommand("cost", "cost model");
  cost->require_subcommand(1);

  static SpecArg cost_spec;
  static int64_t cost_frames = 0;
  static std::string table_path;
  auto* cost_report = cost->add_subcommand("report", "operations, parameters, latency");
  cost_spec.Attach(cost_report);
  cost_report->add_option("--frames", cost_frames, "frame count (0 = configured default)");
  cost_report->add_option("--latency-table", table_path, "latency table JSON to load");
  cost_report->callback([&] {
    run([&](char** out) {
      if (!table_path.empty()) {
        const tdnas_status st = tdnas_latency_table_load(s.ctx, table_path.c_str());
        if (st != TDNAS_OK) return st;
      }
      return tdnas_cost_report(s.ctx, cost_spec.Get().c_str(), cost_frames, out);
    });
  });

  static std::string lat_out;
  static bool lat_synthetic = false;
  static std::string lat_space = "fine";
  auto* cost_lat = cost->add_subcommand("latency-table", "benchmark per-cell latencies");
  cost_lat->add_option("--out", lat_out, "output JSON path")->required();
  cost_lat->add_option("--frames", cost_frames, "frame count (0 = configured default)");
  cost_lat->add_option("--space", lat_space, "space whose cells to cover");
  cost_lat->add_flag("--synthetic", lat_synthetic,
                     "price cells from operation counts instead of timing");
  cost_lat->callback([&] {
    run([&](char** out) {
      return tdnas_latency_table_build(s.ctx, lat_space.c_str(), cost_frames,
                                       lat_synthetic ? 1 : 0, lat_out.c_str(), out);
    });
  });

  // ---- dataset ----
  auto* data = app.add_subcommand("dataset", "synthetic corpus");
  data->require_subcommand(1);
  static std::string data_out;
  auto* data_gen = data->add_subcommand("generate", "synthesize and save the corpus");
  data_gen->add_option("--out", data_out, "output container path")->required();
  data_gen->callback([&] {
    run([&](char** out) { return tdnas_dataset_generate(s.ctx, data_out.c_str(), out); });
  });

  // ---- train ----
  static std::string train_data, train_out, train_resume;
  auto* train = app.add_subcommand("train", "progressive supernet training");
  train->add_option("--data", train_data, "dataset container")->required();
  train->add_option("--out", train_out, "checkpoint directory")->required();
  train->add_option("--resume", train_resume, "resume from this checkpoint");
  train->callback([&] {
    run([&](char** out) {
      tdnas_status st = tdnas_dataset_load(s.ctx, train_data.c_str());
      if (st != TDNAS_OK) return st;
      if (!train_resume.empty()) {
        st = tdnas_trainer_load(s.ctx, train_resume.c_str());
        if (st != TDNAS_OK) return st;
      }
      return tdnas_train_progressive(s.ctx, train_out.c_str(), out);
    });
  });

  // ---- export ----
  static std::string exp_ckpt, exp_out;
  static SpecArg exp_spec;
  auto* exp = app.add_subcommand("export", "cut one subnet out of trained weights");
  exp->add_option("--ckpt", exp_ckpt, "trainer checkpoint")->required();
  exp->add_option("--out", exp_out, "output container path")->required();
  exp_spec.Attach(exp);
  exp->callback([&] {
    run([&](char** out) {
      const tdnas_status st = tdnas_trainer_load(s.ctx, exp_ckpt.c_str());
      if (st != TDNAS_OK) return st;
      return tdnas_export_subnet(s.ctx, exp_spec.Get().c_str(), exp_out.c_str(), out);
    });
  });

  // ---- eval ----
  static std::string eval_ckpt, eval_data, eval_opts;
  static SpecArg eval_spec;
  auto* eval = app.add_subcommand("eval", "score the trial list with one subnet");
  eval->add_option("--ckpt", eval_ckpt, "trainer checkpoint")->required();
  eval->add_option("--data", eval_data, "dataset container")->required();
  eval->add_option("--eval", eval_opts, "scoring options as inline JSON");
  eval_spec.Attach(eval);
  eval->callback([&] {
    run([&](char** out) {
      tdnas_status st = tdnas_trainer_load(s.ctx, eval_ckpt.c_str());
      if (st != TDNAS_OK) return st;
      st = tdnas_dataset_load(s.ctx, eval_data.c_str());
      if (st != TDNAS_OK) return st;
      return tdnas_eval_trials(s.ctx, eval_spec.Get().c_str(),
                               eval_opts.empty() ? nullptr : eval_opts.c_str(), out);
    });
  });

  // ---- records ----
  static std::string rec_ckpt, rec_data, rec_opts, rec_out, rec_space = "width2";
  static int rec_count = 50;
  static uint64_t rec_seed = 11;
  auto* rec = app.add_subcommand("records", "measure sampled subnets on the trial list");
  rec->add_option("--ckpt", rec_ckpt, "trainer checkpoint")->required();
  rec->add_option("--data", rec_data, "dataset container")->required();
  rec->add_option("--space", rec_space, "space to sample from");
  rec->add_option("--count", rec_count, "number of records");
  rec->add_option("--seed", rec_seed, "sampler seed");
  rec->add_option("--eval", rec_opts, "scoring options as inline JSON");
  rec->add_option("--out", rec_out, "also write the record array to this file");
  rec->callback([&] {
    run([&](char** out) {
      tdnas_status st = tdnas_trainer_load(s.ctx, rec_ckpt.c_str());
      if (st != TDNAS_OK) return st;
      st = tdnas_dataset_load(s.ctx, rec_data.c_str());
      if (st != TDNAS_OK) return st;
      st = tdnas_collect_records(s.ctx, rec_space.c_str(), rec_count, rec_seed,
                                 rec_opts.empty() ? nullptr : rec_opts.c_str(), out);
      if (st == TDNAS_OK && !rec_out.empty()) {
        std::ofstream f(rec_out, std::ios::binary | std::ios::trunc);
        f << *out << "\n";
        if (!f.good()) throw CLI::ValidationError("cannot write file: " + rec_out);
      }
      return st;
    });
  });

  // ---- predictor ----
  auto* pred = app.add_subcommand("predictor", "accuracy predictor");
  pred->require_subcommand(1);

  static std::string pt_records, pt_out, pt_space = "width2";
  auto* pred_train = pred->add_subcommand("train", "fit the predictor on records");
  pred_train->add_option("--records", pt_records, "record array JSON file")->required();
  pred_train->add_option("--space", pt_space, "space the records were sampled from");
  pred_train->add_option("--out", pt_out, "output model path");
  pred_train->callback([&] {
    run([&](char** out) {
      const std::string records = ReadTextFile(pt_records);
      return tdnas_predictor_train(s.ctx, records.c_str(), pt_space.c_str(),
                                   pt_out.empty() ? nullptr : pt_out.c_str(), out);
    });
  });

  static std::string pp_model;
  static SpecArg pp_spec;
  auto* pred_predict = pred->add_subcommand("predict", "score one architecture");
  pred_predict->add_option("--model", pp_model, "predictor model path")->required();
  pp_spec.Attach(pred_predict);
  pred_predict->callback([&] {
    run([&](char** out) {
      const tdnas_status st = tdnas_predictor_load(s.ctx, pp_model.c_str());
      if (st != TDNAS_OK) return st;
      return tdnas_predictor_predict(s.ctx, pp_spec.Get().c_str(), out);
    });
  });

  // ---- search ----
  static std::string se_algorithm = "evolution", se_budget_metric = "macs";
  static std::string se_space, se_model, se_ckpt, se_data, se_eval, se_table;
  static double se_budget = 0;
  static int64_t se_frames = 0;
  static int se_samples = 500;
  static uint64_t se_seed = 1;
  auto* search = app.add_subcommand("search", "find the best architecture under a budget");
  search->add_option("--algorithm", se_algorithm, "grid, random or evolution")
      ->check(CLI::IsMember({"grid", "random", "evolution"}));
  search->add_option("--budget-metric", se_budget_metric, "macs, params or latency_ms")
      ->check(CLI::IsMember({"macs", "params", "latency_ms"}));
  search->add_option("--budget", se_budget, "budget in metric units")->required();
  search->add_option("--space", se_space, "space to search (default grid/fine)");
  search->add_option("--frames", se_frames, "frame count for the cost model");
  search->add_option("--samples", se_samples, "random search draws");
  search->add_option("--seed", se_seed, "search seed");
  search->add_option("--model", se_model, "predictor model (metric = predictor)");
  search->add_option("--ckpt", se_ckpt, "trainer checkpoint (metric = supernet)");
  search->add_option("--data", se_data, "dataset container (metric = supernet)");
  search->add_option("--eval", se_eval, "scoring options for the supernet metric");
  search->add_option("--latency-table", se_table, "latency table JSON");
  search->callback([&] {
    run([&](char** out) {
      tdnas_status st;
      if (!se_table.empty()) {
        st = tdnas_latency_table_load(s.ctx, se_table.c_str());
        if (st != TDNAS_OK) return st;
      }
      json req{{"algorithm", se_algorithm},
               {"budget_metric", se_budget_metric},
               {"budget", se_budget},
               {"samples", se_samples},
               {"seed", se_seed}};
      if (!se_space.empty()) req["space"] = se_space;
      if (se_frames > 0) req["frames"] = se_frames;
      if (!se_eval.empty()) req["eval"] = json::parse(se_eval);
      if (!se_model.empty()) {
        st = tdnas_predictor_load(s.ctx, se_model.c_str());
        if (st != TDNAS_OK) return st;
        req["metric"] = "predictor";
      } else if (!se_ckpt.empty() && !se_data.empty()) {
        st = tdnas_trainer_load(s.ctx, se_ckpt.c_str());
        if (st != TDNAS_OK) return st;
        st = tdnas_dataset_load(s.ctx, se_data.c_str());
        if (st != TDNAS_OK) return st;
        req["metric"] = "supernet";
      } else {
        throw CLI::ValidationError("search needs --model, or --ckpt with --data");
      }
      return tdnas_search(s.ctx, req.dump().c_str(), out);
    });
  });

  CLI11_PARSE(app, argc, argv);
  return rc;
}
