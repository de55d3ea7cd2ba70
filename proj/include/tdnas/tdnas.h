/* Copyright 2026 The tdnas Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/* C interface to the architecture-search library.
 *
 * Usage pattern: create a context, configure it with a project JSON (or rely
 * on a preset), then call operations.  Every operation returns a status code;
 * on failure the context stores a human-readable message retrievable with
 * tdnas_last_error().  Results are returned as heap-allocated JSON strings
 * that the caller releases with tdnas_string_free().
 *
 * A context carries the project configuration plus the artifacts loaded or
 * produced so far: a dataset, a trainer state, a latency table and an
 * accuracy predictor.  Operations state which artifacts they need.
 */

#ifndef TDNAS_TDNAS_H_
#define TDNAS_TDNAS_H_

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum tdnas_status {
  TDNAS_OK = 0,
  TDNAS_ERR_INVALID_ARGUMENT = 1,
  TDNAS_ERR_BAD_CONFIG = 2,
  TDNAS_ERR_VALIDATION = 3,
  TDNAS_ERR_IO = 4,
  TDNAS_ERR_CORRUPT = 5,
  TDNAS_ERR_STATE = 6,
  TDNAS_ERR_NUMERIC = 7,
  TDNAS_ERR_INTERNAL = 8
} tdnas_status;

typedef struct tdnas_ctx tdnas_ctx;

/* Library version as "major.minor.patch". */
const char* tdnas_version(void);

/* Never fails except on allocation failure (returns NULL). */
tdnas_ctx* tdnas_ctx_new(void);
void tdnas_ctx_free(tdnas_ctx* ctx);

/* Message of the most recent failed call on this context; empty string if the
 * last call succeeded.  The pointer stays valid until the next call. */
const char* tdnas_last_error(const tdnas_ctx* ctx);

/* Releases strings returned through out_json parameters. */
void tdnas_string_free(char* s);

/* Applies a project configuration.  The JSON may name a preset ("toy" or
 * "full") and/or override sections:
 *   {"preset": "toy", "train": {"batch_size": 8}, ...}
 * Sections: supernet, dataset, train, predictor, evolution.  Passing NULL or
 * "{}" keeps the built-in defaults (the full-size network). */
tdnas_status tdnas_configure(tdnas_ctx* ctx, const char* project_json);

/* Current effective project configuration. */
tdnas_status tdnas_project_json(tdnas_ctx* ctx, char** out_json);

/* -------------------------------------------------------------------------
 * Architecture space.  `space` selects the sampling space derived from the
 * configured network shape: a stage name ("largest", "kernel", "depth",
 * "width1", "width2"), "fine" (width menu extended to every multiple of the
 * granularity) or "grid" (one kernel and one width shared by all cells).
 * ------------------------------------------------------------------------- */

/* {"size": ..., "degrees_of_freedom": ..., "encoding_length": ..., "config": {...}} */
tdnas_status tdnas_space_describe(tdnas_ctx* ctx, const char* space, char** out_json);

/* Draws `count` architectures.  {"specs": [...], "seed": ..., "draws": ...} */
tdnas_status tdnas_space_sample(tdnas_ctx* ctx, const char* space, uint64_t seed,
                                int count, char** out_json);

/* Every architecture of the grid space, in enumeration order. */
tdnas_status tdnas_space_grid(tdnas_ctx* ctx, char** out_json);

/* {"ok": true} or {"ok": false, "reason": "..."} */
tdnas_status tdnas_space_validate(tdnas_ctx* ctx, const char* space,
                                  const char* spec_json, char** out_json);

/* One-hot encoding. {"length": ..., "encoding": [...]} */
tdnas_status tdnas_space_encode(tdnas_ctx* ctx, const char* space,
                                const char* spec_json, char** out_json);

/* -------------------------------------------------------------------------
 * Cost model.
 * ------------------------------------------------------------------------- */

/* Closed-form multiply-accumulate and parameter counts of one architecture,
 * plus a latency estimate when a table is loaded.  frames <= 0 uses the
 * configured default. */
tdnas_status tdnas_cost_report(tdnas_ctx* ctx, const char* spec_json,
                               int64_t frames, char** out_json);

/* Benchmarks every cell the space can request and writes the table to
 * `out_path` (also keeping it in the context).  `synthetic` != 0 prices cells
 * deterministically from their operation counts instead of timing them. */
tdnas_status tdnas_latency_table_build(tdnas_ctx* ctx, const char* space,
                                       int64_t frames, int synthetic,
                                       const char* out_path, char** out_json);

tdnas_status tdnas_latency_table_load(tdnas_ctx* ctx, const char* path);

/* -------------------------------------------------------------------------
 * Dataset.
 * ------------------------------------------------------------------------- */

/* Synthesizes the corpus described by the project config, stores it in the
 * context and, when out_path is non-NULL, writes it to one file. */
tdnas_status tdnas_dataset_generate(tdnas_ctx* ctx, const char* out_path,
                                    char** out_json);

tdnas_status tdnas_dataset_load(tdnas_ctx* ctx, const char* path);

/* -------------------------------------------------------------------------
 * Training.
 * ------------------------------------------------------------------------- */

/* Runs the progressive schedule on the context's dataset, checkpointing into
 * out_dir after each stage.  A fresh trainer is created unless one was loaded
 * with tdnas_trainer_load, in which case training resumes after the stages
 * that state has finished. */
tdnas_status tdnas_train_progressive(tdnas_ctx* ctx, const char* out_dir,
                                     char** out_json);

tdnas_status tdnas_trainer_load(tdnas_ctx* ctx, const char* ckpt_path);

/* Cuts one subnet out of the trained weights and writes it to out_path.
 * {"path": ..., "params": ..., "macs": ...} */
tdnas_status tdnas_export_subnet(tdnas_ctx* ctx, const char* spec_json,
                                 const char* out_path, char** out_json);

/* -------------------------------------------------------------------------
 * Measurement, predictor, evaluation, search.
 *
 * eval_json tunes trial scoring; NULL keeps defaults derived from the
 * project: {"segment_frames","segments_per_utt","recal_utts","recal_batch",
 * "snorm_k","snorm_cohort"}.
 * ------------------------------------------------------------------------- */

/* Scores the trial list with one architecture.  {"eer", "min_dcf",
 * "n_target", "n_nontarget"} */
tdnas_status tdnas_eval_trials(tdnas_ctx* ctx, const char* spec_json,
                               const char* eval_json, char** out_json);

/* Samples `count` architectures from `space` and measures each on the trial
 * list.  Returns the record array used to fit the predictor. */
tdnas_status tdnas_collect_records(tdnas_ctx* ctx, const char* space, int count,
                                   uint64_t seed, const char* eval_json,
                                   char** out_json);

/* Fits the accuracy predictor on a record array (as produced by
 * tdnas_collect_records), keeps it in the context and optionally writes it to
 * out_path.  Returns the fit report. */
tdnas_status tdnas_predictor_train(tdnas_ctx* ctx, const char* records_json,
                                   const char* space, const char* out_path,
                                   char** out_json);

tdnas_status tdnas_predictor_load(tdnas_ctx* ctx, const char* path);

/* {"metric": ..., "value": ...} for one architecture. */
tdnas_status tdnas_predictor_predict(tdnas_ctx* ctx, const char* spec_json,
                                     char** out_json);

/* Runs a constrained search.  search_json:
 *   {"algorithm": "grid" | "random" | "evolution",   (required)
 *    "budget_metric": "macs" | "params" | "latency_ms",  (required)
 *    "budget": <number>,                             (required)
 *    "space": <space name>,        default: "grid" for grid, else "fine"
 *    "frames": <int>,              default: configured default_frames
 *    "metric": "predictor" | "supernet",  default "predictor"
 *    "samples": <int>,             random search, default 500
 *    "seed": <int>,                random search, default 1
 *    "evolution": {...},           overrides the configured evolution section
 *    "eval": {...}}                supernet metric scoring options
 * Returns the search result; "found" is false when nothing fits the budget. */
tdnas_status tdnas_search(tdnas_ctx* ctx, const char* search_json,
                          char** out_json);

#ifdef __cplusplus
}
#endif

#endif /* TDNAS_TDNAS_H_ */
