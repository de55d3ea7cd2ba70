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

#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include "active_masks.h"
#include "autodiff.h"
#include "doctest.h"
#include "space.h"
#include "supernet.h"
#include "test_oracles.h"
#include "test_util.h"

namespace tdnas {
namespace {

using space::SubnetSpec;
using supernet::Supernet;
using supernet::SupernetConfig;
using testutil::BuildActiveMasks;
using Masks = testutil::Masks;

SubnetSpec ToySpec(int depth, int k, int front, const std::vector<int>& mids,
                   int back) {
  SubnetSpec s;
  s.depth = depth;
  s.kernels.assign(static_cast<size_t>(depth) + 1, k);
  s.widths.push_back(front);
  for (int i = 0; i < depth; ++i)
    s.widths.push_back(mids[static_cast<size_t>(i)]);
  s.width_back = back;
  return s;
}

TEST_CASE("build is deterministic and fully inventoried") {
  const SupernetConfig cfg = testutil::ToySupernetConfig();
  const Supernet a = supernet::Build(cfg, 17);
  const Supernet b = supernet::Build(cfg, 17);
  REQUIRE(a.params.size() == b.params.size());
  for (const auto& [name, t] : a.params)
    CHECK(testutil::BitEqual(t, b.params.at(name)));
  const Supernet c = supernet::Build(cfg, 18);
  CHECK_FALSE(testutil::BitEqual(a.params.at("stem.conv.w"),
                                 c.params.at("stem.conv.w")));
  CHECK(supernet::NumParams(a) > 0);
}

TEST_CASE("structural limits are enforced") {
  const SupernetConfig cfg = testutil::ToySupernetConfig();
  CHECK_THROWS_AS(
      supernet::CheckStructural(ToySpec(5, 3, 64, {64, 64, 64, 64, 64}, 192), cfg),
      Error);
  CHECK_THROWS_AS(
      supernet::CheckStructural(ToySpec(2, 7, 64, {64, 64}, 192), cfg), Error);
  CHECK_THROWS_AS(
      supernet::CheckStructural(ToySpec(2, 3, 128, {64, 64}, 192), cfg), Error);
  CHECK_THROWS_AS(
      supernet::CheckStructural(ToySpec(2, 3, 64, {64, 64}, 400), cfg), Error);
  supernet::CheckStructural(ToySpec(2, 3, 64, {64, 64}, 192), cfg);
}

TEST_CASE("plan geometry follows the spec") {
  const SupernetConfig cfg = testutil::ToySupernetConfig();
  const SubnetSpec spec = ToySpec(3, 3, 32, {16, 32, 48}, 96);
  const supernet::ActivePlan plan = supernet::MakePlan(spec, cfg);
  CHECK(plan.depth == 3);
  CHECK(plan.c1 == 32);
  CHECK(plan.c2 == std::vector<int>{16, 32, 48});
  CHECK(plan.c3 == 96);
  CHECK(plan.se_hidden == 8);  // 32 / 4, under the cap
  CHECK(plan.split == std::vector<int>{4, 8, 12});
  CHECK(plan.agg_cols.size() == 3u * 32u);
  CHECK(plan.pool_cols.size() == 2u * 96u);
  CHECK(plan.agg_cols[32] == 64);  // second block starts at max stride
  CHECK(plan.pool_cols[96] == 192);
}

TEST_CASE("embedding has the configured shape and is deterministic") {
  const SupernetConfig cfg = testutil::ToySupernetConfig();
  Supernet net = supernet::Build(cfg, 3);
  const Tensor batch = testutil::RandomBatch(3, cfg.in_channels, 32, 5);
  const SubnetSpec spec = ToySpec(2, 3, 48, {32, 48}, 144);
  const Tensor e1 = supernet::Embed(&net, spec, batch);
  REQUIRE(e1.Rank() == 2);
  CHECK(e1.Dim(0) == 3);
  CHECK(e1.Dim(1) == cfg.embedding_dim);
  const Tensor e2 = supernet::Embed(&net, spec, batch);
  CHECK(testutil::BitEqual(e1, e2));
  CHECK_THROWS_AS(
      supernet::Embed(&net, spec, testutil::RandomBatch(3, 7, 32, 5)), Error);
}

TEST_CASE("perturbing inactive coordinates never changes the output") {
  const SupernetConfig cfg = testutil::ToySupernetConfig();
  const Supernet net = supernet::Build(cfg, 23);
  const Tensor batch = testutil::RandomBatch(2, cfg.in_channels, 24, 7);

  std::vector<SubnetSpec> specs = {
      ToySpec(2, 1, 16, {16, 16}, 48),
      ToySpec(2, 3, 32, {16, 48}, 96),
      ToySpec(3, 5, 48, {32, 16, 48}, 144),
  };
  for (const auto& s : testutil::SampleSpecs(
           space::FineConfig(cfg.shape), 4, 29))
    specs.push_back(s);
  // Mixed kernels exercise per-cell transform activity.
  specs.push_back([] {
    SubnetSpec s = ToySpec(3, 5, 32, {16, 32, 16}, 96);
    s.kernels = {5, 1, 3, 5};
    return s;
  }());

  for (const SubnetSpec& spec : specs) {
    CAPTURE(spec.ToString());
    Supernet work = net;
    const Tensor before = supernet::Embed(&work, spec, batch);
    const Masks masks = BuildActiveMasks(net, spec);
    int64_t flipped = 0;
    auto perturb = [&](std::map<std::string, Tensor>* store) {
      for (auto& [name, t] : *store) {
        const auto& m = masks.at(name);
        for (size_t i = 0; i < t.data.size(); ++i) {
          if (m[i]) continue;
          t.data[i] += 0.75 + 0.25 * static_cast<double>(i % 3);
          ++flipped;
        }
      }
    };
    perturb(&work.params);
    perturb(&work.buffers);
    REQUIRE(flipped > 0);
    const Tensor after = supernet::Embed(&work, spec, batch);
    CHECK_MESSAGE(testutil::BitEqual(before, after),
                  "output moved after touching ", flipped,
                  " inactive coordinates");
  }
}

TEST_CASE("exported subnets reproduce the supernet's active path") {
  const SupernetConfig cfg = testutil::ToySupernetConfig();
  Supernet net = supernet::Build(cfg, 37);
  const Tensor batch = testutil::RandomBatch(3, cfg.in_channels, 40, 11);
  for (const SubnetSpec& spec :
       testutil::SampleSpecs(space::FineConfig(cfg.shape), 20, 41)) {
    CAPTURE(spec.ToString());
    const Tensor from_super = supernet::Embed(&net, spec, batch);
    const supernet::ExportedSubnet sub = supernet::ExportSubnet(net, spec);
    const Tensor from_export = supernet::ForwardExported(sub, batch);
    CHECK(testutil::MaxRelDiff(from_super, from_export) <= 1e-6);
  }
}

TEST_CASE("export materializes transformed kernels and drops transforms") {
  const SupernetConfig cfg = testutil::ToySupernetConfig();
  Supernet net = supernet::Build(cfg, 43);
  const SubnetSpec spec = ToySpec(2, 3, 32, {16, 32}, 96);
  const supernet::ExportedSubnet sub = supernet::ExportSubnet(net, spec);
  CHECK(sub.params.count("stem.conv.kt1") == 0);
  CHECK(sub.params.at("stem.conv.w").Dim(2) == 3);
  CHECK(sub.params.at("stem.conv.w").Dim(0) == 32);
  CHECK(sub.params.at("block1.conv1.w").Dim(1) == 32);
  CHECK(sub.params.count("block3.conv1.w") == 0);
  CHECK(supernet::NumParams(sub) < supernet::NumParams(net));
}

TEST_CASE("fresh identity transforms make small kernels center slices") {
  // On a freshly built network the transform matrices are identities, so a
  // K=3 export must equal the stored center taps bit for bit.
  const SupernetConfig cfg = testutil::ToySupernetConfig();
  Supernet net = supernet::Build(cfg, 47);
  const SubnetSpec spec = ToySpec(2, 3, 64, {64, 64}, 192);
  const supernet::ExportedSubnet sub = supernet::ExportSubnet(net, spec);
  const Tensor& stored = net.params.at("stem.conv.w");
  const Tensor& cut = sub.params.at("stem.conv.w");
  for (int64_t o = 0; o < cut.Dim(0); ++o)
    for (int64_t i = 0; i < cut.Dim(1); ++i)
      for (int64_t r = 0; r < 3; ++r)
        CHECK(cut.At(o, i, r) == stored.At(o, i, r + 1));
}

TEST_CASE("bn recalibration is finite, idempotent and slice-local") {
  const SupernetConfig cfg = testutil::ToySupernetConfig();
  Supernet net = supernet::Build(cfg, 53);
  const SubnetSpec spec = ToySpec(2, 3, 32, {16, 32}, 96);
  std::vector<Tensor> stream;
  for (int i = 0; i < 3; ++i)
    stream.push_back(testutil::RandomBatch(4, cfg.in_channels, 20, 60 + static_cast<uint64_t>(i)));
  std::vector<const Tensor*> ptrs;
  for (const Tensor& t : stream) ptrs.push_back(&t);

  const std::map<std::string, Tensor> before = net.buffers;
  supernet::RecalibrateBn(&net, spec, ptrs);
  for (const auto& [name, t] : net.buffers)
    for (double v : t.data) REQUIRE(std::isfinite(v));

  // Inactive statistics are untouched.
  const Masks masks = BuildActiveMasks(net, spec);
  for (const auto& [name, t] : net.buffers) {
    const auto& m = masks.at(name);
    for (size_t i = 0; i < t.data.size(); ++i)
      if (!m[i]) CHECK(t.data[i] == before.at(name).data[i]);
  }

  const std::map<std::string, Tensor> first = net.buffers;
  supernet::RecalibrateBn(&net, spec, ptrs);
  for (const auto& [name, t] : net.buffers)
    CHECK(testutil::MaxAbsDiff(t, first.at(name)) <= 1e-6);
}

TEST_CASE("end-to-end gradients of a small path check out") {
  const SupernetConfig cfg = testutil::ToySupernetConfig();
  Supernet net = supernet::Build(cfg, 71);
  SubnetSpec spec = ToySpec(2, 3, 16, {16, 16}, 48);
  spec.kernels = {5, 3, 1};
  const Tensor batch = testutil::RandomBatch(2, cfg.in_channels, 10, 73);

  auto loss_value = [&]() {
    ad::Tape tape;
    const ad::ValueId emb = supernet::Forward(&tape, &net, spec, batch, true);
    return tape.Value(tape.MeanAll(tape.Abs(emb))).data[0];
  };

  ad::Tape tape;
  const ad::ValueId emb = supernet::Forward(&tape, &net, spec, batch, true);
  const ad::ValueId loss = tape.MeanAll(tape.Abs(emb));
  tape.Backward(loss);

  int checked = 0;
  for (const auto& [name, vid] : tape.named_leaves()) {
    if (!tape.HasGrad(vid)) continue;
    const Tensor& g = tape.Grad(vid);
    Tensor& stored = net.params.at(name);
    REQUIRE(g.SameShape(stored));
    // A handful of spread-out coordinates per tensor keeps this fast.
    const size_t stride = std::max<size_t>(1, stored.data.size() / 3);
    for (size_t i = 0; i < stored.data.size(); i += stride) {
      const double numeric = oracles::CentralDiff(loss_value, &stored.data[i]);
      const double rel = oracles::GradRelErr(g.data[i], numeric);
      CHECK_MESSAGE(rel <= 1e-4, name, "[", i, "]: analytic ", g.data[i],
                    " numeric ", numeric);
      ++checked;
    }
  }
  CHECK(checked > 30);
}

TEST_CASE("only active-path parameters receive gradients") {
  const SupernetConfig cfg = testutil::ToySupernetConfig();
  Supernet net = supernet::Build(cfg, 79);
  const SubnetSpec spec = ToySpec(2, 5, 32, {16, 16}, 48);
  const Tensor batch = testutil::RandomBatch(2, cfg.in_channels, 12, 81);
  ad::Tape tape;
  const ad::ValueId emb = supernet::Forward(&tape, &net, spec, batch, true);
  tape.Backward(tape.MeanAll(tape.Abs(emb)));
  CHECK(tape.GradByName("block3.conv1.w") == nullptr);
  CHECK(tape.GradByName("block4.conv1.w") == nullptr);
  CHECK(tape.GradByName("stem.conv.kt1") == nullptr);  // K=5 skips transforms
  CHECK(tape.GradByName("stem.conv.w") != nullptr);
  CHECK(tape.GradByName("block1.res2.1.w") != nullptr);
}

}  // namespace
}  // namespace tdnas
