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

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "checkpoint.h"
#include "dataset.h"
#include "doctest.h"
#include "json.hpp"
#include "json_io.h"
#include "pipeline.h"
#include "test_util.h"
#include "trainer.h"

namespace tdnas {
namespace {

using nlohmann::json;

dataset::DatasetConfig MicroData() {
  dataset::DatasetConfig dc;
  dc.n_speakers = 4;
  dc.train_utts_per_speaker = 2;
  dc.eval_utts_per_speaker = 2;
  dc.frames = 40;
  dc.n_trials = 12;
  return dc;
}

ErrorKind KindOf(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::kInternal;
}

TEST_CASE("generated corpora have the advertised structure") {
  const dataset::DatasetConfig dc = MicroData();
  const dataset::Dataset ds = dataset::Generate(dc);
  CHECK(ds.train.size() == 8);
  CHECK(ds.eval.size() == 8);
  for (const auto& [id, utt] : ds.train) {
    CHECK(utt.Dim(0) == dc.feature_dim);
    CHECK(utt.Dim(1) == dc.frames);
    CHECK(ds.speaker_of.count(id) == 1);
  }
  CHECK(ds.speaker_of.at(dataset::UttId(2, 1, false)) == 2);
  CHECK(ds.speaker_of.at(dataset::UttId(3, 0, true)) == 3);

  REQUIRE(ds.trials.size() == 12);
  int targets = 0;
  for (const auto& tr : ds.trials) {
    REQUIRE(ds.eval.count(tr.id_a) == 1);
    REQUIRE(ds.eval.count(tr.id_b) == 1);
    CHECK(tr.id_a != tr.id_b);
    const bool same = ds.speaker_of.at(tr.id_a) == ds.speaker_of.at(tr.id_b);
    CHECK(tr.label == (same ? 1 : 0));
    targets += tr.label;
  }
  CHECK(targets > 0);
  CHECK(targets < 12);
}

TEST_CASE("corpus generation is seed-determined") {
  const dataset::DatasetConfig dc = MicroData();
  const dataset::Dataset a = dataset::Generate(dc);
  const dataset::Dataset b = dataset::Generate(dc);
  for (const auto& [id, utt] : a.train)
    CHECK(testutil::BitEqual(utt, b.train.at(id)));
  dataset::DatasetConfig dc2 = dc;
  dc2.seed = dc.seed + 1;
  const dataset::Dataset c = dataset::Generate(dc2);
  CHECK_FALSE(testutil::BitEqual(a.train.begin()->second, c.train.begin()->second));

  dataset::DatasetConfig bad = dc;
  bad.n_speakers = 1;
  CHECK_THROWS_AS(dataset::Generate(bad), Error);
  bad = dc;
  bad.eval_utts_per_speaker = 1;
  CHECK_THROWS_AS(dataset::Generate(bad), Error);
  bad = dc;
  bad.smoothing = bad.frames;
  CHECK_THROWS_AS(dataset::Generate(bad), Error);
}

TEST_CASE("array containers round trip and serialize canonically") {
  checkpoint::Container c;
  c.meta = {{"kind", "test"}, {"step", 12}};
  c.arrays["b.second"] = testutil::RandomBatch(2, 3, 4, 1);
  c.arrays["a.first"] = Tensor::Zeros({5});
  c.arrays["a.first"].data = {1.0, -2.5, 0.0, 1e-300, 3.14};
  c.arrays["empty"] = Tensor::Zeros({0});

  const std::string path = testutil::TempPath("container");
  checkpoint::Save(c, path);
  const checkpoint::Container back = checkpoint::Load(path);
  CHECK(back.meta == c.meta);
  REQUIRE(back.arrays.size() == 3);
  for (const auto& [name, t] : c.arrays) {
    REQUIRE(back.arrays.count(name) == 1);
    CHECK(back.arrays.at(name).shape == t.shape);
    CHECK(testutil::BitEqual(back.arrays.at(name), t));
  }

  const std::string path2 = testutil::TempPath("container");
  checkpoint::Save(back, path2);
  CHECK(checkpoint::ReadFileBytes(path) == checkpoint::ReadFileBytes(path2));
}

TEST_CASE("damaged containers are refused with the corruption kind") {
  checkpoint::Container c;
  c.meta = json::object();
  c.arrays["x"] = testutil::RandomBatch(1, 2, 3, 9);
  const std::string path = testutil::TempPath("damage");
  checkpoint::Save(c, path);
  const std::string bytes = checkpoint::ReadFileBytes(path);

  CHECK(KindOf([] { checkpoint::Load("/nonexistent/no.ckpt"); }) == ErrorKind::kIo);

  checkpoint::WriteFileBytes(path, bytes.substr(0, 10));
  CHECK(KindOf([&] { checkpoint::Load(path); }) == ErrorKind::kCorrupt);

  std::string flipped = bytes;
  flipped[0] = 'X';
  checkpoint::WriteFileBytes(path, flipped);
  CHECK(KindOf([&] { checkpoint::Load(path); }) == ErrorKind::kCorrupt);

  checkpoint::WriteFileBytes(path, bytes.substr(0, bytes.size() - 4));
  CHECK(KindOf([&] { checkpoint::Load(path); }) == ErrorKind::kCorrupt);

  checkpoint::Container bad_meta;
  bad_meta.meta = json::array();
  CHECK_THROWS_AS(checkpoint::Save(bad_meta, testutil::TempPath("badmeta")), Error);
}

TEST_CASE("config json round trips preserve every field") {
  space::SubnetSpec spec = testutil::NamedSpec("mobile");
  const json js = jsonio::ToJson(spec);
  const space::SubnetSpec spec2 = jsonio::SubnetSpecFromJson(js);
  CHECK(spec2.ToString() == spec.ToString());

  const space::SpaceConfig sc = space::FineConfig(testutil::ToyShape());
  const space::SpaceConfig sc2 = jsonio::SpaceConfigFromJson(jsonio::ToJson(sc));
  CHECK(sc2.depth_options == sc.depth_options);
  CHECK(sc2.kernel_options == sc.kernel_options);
  CHECK(sc2.width_front_options == sc.width_front_options);
  CHECK(sc2.width_back_options == sc.width_back_options);
  CHECK(sc2.granularity == sc.granularity);
  CHECK(sc2.coupling == sc.coupling);

  trainer::TrainConfig tc;
  tc.stage_epochs = {{"largest", 9}, {"kernel", 2}};
  tc.augment.freq_mask = false;
  tc.augment.noise_std = 0.125;
  tc.lr_max = 5e-4;
  const trainer::TrainConfig tc2 = jsonio::TrainConfigFromJson(jsonio::ToJson(tc));
  CHECK(tc2.stage_epochs == tc.stage_epochs);
  CHECK(tc2.augment.freq_mask == false);
  CHECK(tc2.augment.noise_std == 0.125);
  CHECK(tc2.lr_max == 5e-4);
  CHECK(tc2.batch_size == tc.batch_size);

  dataset::DatasetConfig dc = MicroData();
  dc.seed = 123;
  const dataset::DatasetConfig dc2 = jsonio::DatasetConfigFromJson(jsonio::ToJson(dc));
  CHECK(dc2.n_speakers == dc.n_speakers);
  CHECK(dc2.frames == dc.frames);
  CHECK(dc2.seed == 123u);

  searcher::EvolutionConfig ec;
  ec.population = 17;
  ec.mutation_rate = 0.25;
  const searcher::EvolutionConfig ec2 =
      jsonio::EvolutionConfigFromJson(jsonio::ToJson(ec));
  CHECK(ec2.population == 17);
  CHECK(ec2.mutation_rate == 0.25);

  predictor::AccuracyRecord rec;
  rec.spec = testutil::NamedSpec("small");
  rec.eer = 0.0625;
  rec.min_dcf = 0.5;
  rec.recalibrated = true;
  const predictor::AccuracyRecord rec2 =
      jsonio::AccuracyRecordFromJson(jsonio::ToJson(rec));
  CHECK(rec2.spec.ToString() == rec.spec.ToString());
  CHECK(rec2.eer == rec.eer);
  CHECK(rec2.min_dcf == rec.min_dcf);
  CHECK(rec2.recalibrated);

  costmodel::LatencyTable lt;
  lt.frames = 96;
  lt.device = "cpu-test";
  lt.repeats = 3;
  lt.warmup = 1;
  lt.ms[costmodel::CellKey("block", 3, 128, 256, 96)] = 1.25;
  lt.ms[costmodel::CellKey("stem", 5, 20, 64, 96)] = 0.5;
  const costmodel::LatencyTable lt2 = jsonio::LatencyTableFromJson(jsonio::ToJson(lt));
  CHECK(lt2.frames == 96);
  CHECK(lt2.device == "cpu-test");
  CHECK(lt2.repeats == 3);
  CHECK(lt2.warmup == 1);
  CHECK(lt2.ms == lt.ms);
}

TEST_CASE("json readers keep defaults and name bad keys") {
  const dataset::DatasetConfig dc =
      jsonio::DatasetConfigFromJson(json{{"n_speakers", 5}});
  CHECK(dc.n_speakers == 5);
  CHECK(dc.frames == dataset::DatasetConfig{}.frames);

  try {
    jsonio::DatasetConfigFromJson(json{{"n_speekers", 5}});
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("n_speekers") != std::string::npos);
  }
  try {
    jsonio::DatasetConfigFromJson(json{{"n_speakers", "five"}});
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("n_speakers") != std::string::npos);
  }
  CHECK_THROWS_AS(jsonio::TrainConfigFromJson(json::array()), Error);

  CHECK_THROWS_AS(jsonio::ParseJsonText("{not json", "test blob"), Error);
  CHECK(jsonio::ParseJsonText("{\"a\": 1}", "x").at("a") == 1);
}

TEST_CASE("project presets and overrides") {
  const pipeline::ProjectConfig toy = pipeline::ProjectPreset("toy");
  CHECK(toy.supernet.shape.max_width_front == 64);
  const pipeline::ProjectConfig full = pipeline::ProjectPreset("full");
  CHECK(full.supernet.shape.max_width_front == 512);
  CHECK_THROWS_AS(pipeline::ProjectPreset("tiny"), Error);

  const pipeline::ProjectConfig p = pipeline::ProjectFromJson(
      json{{"preset", "toy"}, {"dataset", {{"n_speakers", 6}}}});
  CHECK(p.dataset.n_speakers == 6);
  CHECK(p.supernet.shape.max_width_front == 64);
  CHECK(p.dataset.frames == pipeline::ToyProject().dataset.frames);
  CHECK_THROWS_AS(pipeline::ProjectFromJson(json{{"presett", "toy"}}), Error);

  const json round = pipeline::ToJson(pipeline::ToyProject());
  const pipeline::ProjectConfig p2 = pipeline::ProjectFromJson(round);
  CHECK(p2.dataset.n_speakers == pipeline::ToyProject().dataset.n_speakers);
  CHECK(p2.train.stage_epochs == pipeline::ToyProject().train.stage_epochs);
}

TEST_CASE("eval options parse with defaults and pairing rules") {
  pipeline::EvalOptions defaults;
  defaults.segment_frames = 48;
  const pipeline::EvalOptions o =
      pipeline::EvalOptionsFromJson(json{{"snorm_k", 3}, {"snorm_cohort", 8}}, defaults);
  CHECK(o.segment_frames == 48);
  CHECK(o.snorm_k == 3);
  CHECK(o.snorm_cohort == 8);
  CHECK_THROWS_AS(pipeline::EvalOptionsFromJson(json{{"snorm_q", 3}}, defaults), Error);
}

TEST_CASE("dataset and model files survive a save-load cycle") {
  const dataset::Dataset ds = dataset::Generate(MicroData());
  const std::string dpath = testutil::TempPath("dataset");
  pipeline::SaveDataset(ds, dpath);
  const dataset::Dataset ds2 = pipeline::LoadDataset(dpath);
  CHECK(ds2.cfg.n_speakers == ds.cfg.n_speakers);
  CHECK(ds2.cfg.seed == ds.cfg.seed);
  REQUIRE(ds2.train.size() == ds.train.size());
  for (const auto& [id, utt] : ds.train) CHECK(testutil::BitEqual(utt, ds2.train.at(id)));
  for (const auto& [id, utt] : ds.eval) CHECK(testutil::BitEqual(utt, ds2.eval.at(id)));
  CHECK(ds2.speaker_of == ds.speaker_of);
  REQUIRE(ds2.trials.size() == ds.trials.size());
  for (size_t i = 0; i < ds.trials.size(); ++i) {
    CHECK(ds2.trials[i].id_a == ds.trials[i].id_a);
    CHECK(ds2.trials[i].id_b == ds.trials[i].id_b);
    CHECK(ds2.trials[i].label == ds.trials[i].label);
  }

  trainer::TrainerState st = trainer::InitTrainer(testutil::ToySupernetConfig(), 4, 3);
  st.stages_done = 2;
  st.opt.step = 7;
  const std::string tpath = testutil::TempPath("trainer");
  pipeline::SaveTrainerState(st, tpath);
  const trainer::TrainerState st2 = pipeline::LoadTrainerState(tpath);
  CHECK(st2.n_classes == 4);
  CHECK(st2.stages_done == 2);
  // Checkpoints are stage-boundary snapshots; the optimizer restarts per stage
  // and its state is not persisted.
  CHECK(st2.opt.step == 0);
  REQUIRE(st2.net.params.size() == st.net.params.size());
  for (const auto& [name, t] : st.net.params)
    CHECK(testutil::BitEqual(t, st2.net.params.at(name)));
  for (const auto& [name, t] : st.net.buffers)
    CHECK(testutil::BitEqual(t, st2.net.buffers.at(name)));

  // Re-saving the loaded state reproduces the file byte for byte.
  const std::string tpath2 = testutil::TempPath("trainer");
  pipeline::SaveTrainerState(st2, tpath2);
  CHECK(checkpoint::ReadFileBytes(tpath) == checkpoint::ReadFileBytes(tpath2));

  const space::SubnetSpec spec = testutil::SampleSpecs(
      space::FineConfig(testutil::ToyShape()), 1, 77)[0];
  const supernet::ExportedSubnet sub = supernet::ExportSubnet(st.net, spec);
  const std::string spath = testutil::TempPath("subnet");
  pipeline::SaveExportedSubnet(sub, spath);
  const supernet::ExportedSubnet sub2 = pipeline::LoadExportedSubnet(spath);
  CHECK(sub2.spec.ToString() == sub.spec.ToString());
  const Tensor batch = testutil::RandomBatch(2, 20, 32, 5);
  CHECK(testutil::BitEqual(supernet::ForwardExported(sub, batch),
                           supernet::ForwardExported(sub2, batch)));
}

TEST_CASE("predictor files preserve predictions") {
  const space::SpaceConfig cfg = space::FineConfig(testutil::ToyShape());
  std::vector<predictor::AccuracyRecord> recs;
  uint64_t i = 0;
  for (const auto& spec : testutil::SampleSpecs(cfg, 24, 15)) {
    predictor::AccuracyRecord r;
    r.spec = spec;
    r.eer = 0.1 + 0.01 * static_cast<double>(i++ % 7);
    recs.push_back(r);
  }
  predictor::PredictorTrainOptions opts;
  opts.hidden = 16;
  opts.epochs = 10;
  const predictor::PredictorModel model = predictor::TrainPredictor(recs, cfg, opts);
  const std::string path = testutil::TempPath("predictor");
  pipeline::SavePredictor(model, path);
  const predictor::PredictorModel back = pipeline::LoadPredictor(path);
  CHECK(back.target_metric == model.target_metric);
  CHECK(back.norm_lo == model.norm_lo);
  CHECK(back.norm_hi == model.norm_hi);
  for (const auto& spec : testutil::SampleSpecs(cfg, 10, 99))
    CHECK(predictor::Predict(back, spec) == predictor::Predict(model, spec));
}

TEST_CASE("budget metric factory") {
  const supernet::SupernetConfig cfg = testutil::ToySupernetConfig();
  const space::SubnetSpec spec = testutil::SampleSpecs(
      space::FineConfig(testutil::ToyShape()), 1, 41)[0];
  const auto macs = pipeline::MakeCostFn(cfg, "macs", 64, nullptr);
  CHECK(macs(spec) == static_cast<double>(costmodel::CountMacs(spec, cfg, 64)));
  const auto params = pipeline::MakeCostFn(cfg, "params", 64, nullptr);
  CHECK(params(spec) == static_cast<double>(costmodel::CountParams(spec, cfg)));
  CHECK_THROWS_AS(pipeline::MakeCostFn(cfg, "latency_ms", 64, nullptr), Error);
  CHECK_THROWS_AS(pipeline::MakeCostFn(cfg, "flops", 64, nullptr), Error);

  costmodel::LatencyRunnerOptions lro;
  lro.synthetic = true;
  const costmodel::LatencyTable table = costmodel::BuildLatencyTable(
      space::FineConfig(testutil::ToyShape()), cfg, 32, lro);
  const auto lat = pipeline::MakeCostFn(cfg, "latency_ms", 32, &table);
  CHECK(lat(spec) == costmodel::EstimateLatencyMs(spec, cfg, table));
  CHECK(lat(spec) > 0);
}

}  // namespace
}  // namespace tdnas
