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

#include "supernet.h"

#include <algorithm>
#include <cmath>

namespace tdnas {
namespace supernet {

namespace {

std::vector<int64_t> Iota(int64_t n, int64_t start = 0) {
  std::vector<int64_t> v(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i) v[static_cast<size_t>(i)] = start + i;
  return v;
}

std::string BlockName(int i) { return "block" + std::to_string(i); }

}  // namespace

void ValidateSupernetConfig(const SupernetConfig& cfg) {
  const auto& sh = cfg.shape;
  Require(sh.min_depth >= 1 && sh.min_depth <= sh.max_depth,
          "SupernetConfig: bad depth range", ErrorKind::kBadConfig);
  Require(cfg.in_channels >= 1, "SupernetConfig: in_channels must be positive",
          ErrorKind::kBadConfig);
  Require(cfg.res2net_scale >= 2, "SupernetConfig: res2net scale must be >= 2",
          ErrorKind::kBadConfig);
  Require(sh.max_width_front % cfg.res2net_scale == 0,
          "SupernetConfig: max front width must divide by the res2net scale",
          ErrorKind::kBadConfig);
  Require(sh.granularity % cfg.res2net_scale == 0,
          "SupernetConfig: width granularity must divide by the res2net scale",
          ErrorKind::kBadConfig);
  Require(static_cast<int>(cfg.dilations.size()) >= sh.max_depth,
          "SupernetConfig: need one dilation per block position",
          ErrorKind::kBadConfig);
  for (int d : cfg.dilations)
    Require(d >= 1, "SupernetConfig: dilations must be positive",
            ErrorKind::kBadConfig);
  for (int k : sh.kernel_options)
    Require(k == 1 || k == 3 || k == 5,
            "SupernetConfig: kernel options must be in {1,3,5}",
            ErrorKind::kBadConfig);
  Require(cfg.se_reduction >= 1 && cfg.se_bottleneck_cap >= 1,
          "SupernetConfig: bad squeeze-excitation settings",
          ErrorKind::kBadConfig);
  Require(cfg.att_bottleneck >= 1 && cfg.embedding_dim >= 1 &&
              cfg.default_frames >= 1,
          "SupernetConfig: head sizes must be positive", ErrorKind::kBadConfig);
}

void CheckStructural(const space::SubnetSpec& spec, const SupernetConfig& cfg) {
  const auto& sh = cfg.shape;
  Require(spec.depth >= 1 && spec.depth <= sh.max_depth,
          "spec: depth outside structural range", ErrorKind::kValidation);
  const size_t cells = static_cast<size_t>(spec.depth) + 1;
  Require(spec.kernels.size() == cells && spec.widths.size() == cells,
          "spec: kernel/width lists must have depth+1 entries",
          ErrorKind::kValidation);
  for (int k : spec.kernels)
    Require(k == 1 || k == 3 || k == 5, "spec: kernel size must be 1, 3 or 5",
            ErrorKind::kValidation);
  for (int w : spec.widths) {
    Require(w >= 1 && w <= sh.max_width_front,
            "spec: width outside structural range", ErrorKind::kValidation);
    Require(w % cfg.res2net_scale == 0,
            "spec: width must divide by the res2net scale",
            ErrorKind::kValidation);
  }
  Require(spec.width_back >= 1 && spec.width_back <= sh.max_width_back,
          "spec: back width outside structural range", ErrorKind::kValidation);
}

ActivePlan MakePlan(const space::SubnetSpec& spec, const SupernetConfig& cfg) {
  CheckStructural(spec, cfg);
  ActivePlan p;
  p.depth = spec.depth;
  p.c1 = spec.widths[0];
  p.c3 = spec.width_back;
  for (int i = 1; i <= spec.depth; ++i) {
    const int c2 = spec.widths[static_cast<size_t>(i)];
    p.c2.push_back(c2);
    p.split.push_back(c2 / cfg.res2net_scale);
  }
  p.se_hidden = std::max(1, std::min(p.c1 / cfg.se_reduction,
                                     cfg.se_bottleneck_cap));
  const int c1_max = cfg.shape.max_width_front;
  for (int j = 0; j < spec.depth; ++j)
    for (int64_t c = 0; c < p.c1; ++c)
      p.agg_cols.push_back(static_cast<int64_t>(j) * c1_max + c);
  const int c3_max = cfg.shape.max_width_back;
  for (int64_t c = 0; c < p.c3; ++c) p.pool_cols.push_back(c);
  for (int64_t c = 0; c < p.c3; ++c) p.pool_cols.push_back(c3_max + c);
  return p;
}

namespace {

struct Builder {
  Supernet* net;
  Rng* rng;

  void Conv(const std::string& name, int64_t cout, int64_t cin, int64_t k,
            bool with_kt) {
    Tensor w({cout, cin, k});
    const double stddev = std::sqrt(2.0 / static_cast<double>(cin * k));
    for (double& v : w.data) v = stddev * rng->Normal();
    net->params[name + ".w"] = std::move(w);
    net->params[name + ".b"] = Tensor({cout});
    if (with_kt) {
      Tensor kt1({3, 3});
      kt1.At(0, 0) = kt1.At(1, 1) = kt1.At(2, 2) = 1.0;
      net->params[name + ".kt1"] = std::move(kt1);
      net->params[name + ".kt2"] = Tensor({1, 1}, {1.0});
    }
  }

  void LinearLayer(const std::string& name, int64_t fout, int64_t fin) {
    Tensor w({fout, fin});
    const double stddev = std::sqrt(2.0 / static_cast<double>(fin));
    for (double& v : w.data) v = stddev * rng->Normal();
    net->params[name + ".w"] = std::move(w);
    net->params[name + ".b"] = Tensor({fout});
  }

  void Bn(const std::string& name, int64_t c) {
    net->params[name + ".g"] = Tensor::Full({c}, 1.0);
    net->params[name + ".b"] = Tensor({c});
    net->buffers[name + ".mean"] = Tensor({c});
    net->buffers[name + ".var"] = Tensor::Full({c}, 1.0);
  }
};

}  // namespace

Supernet Build(const SupernetConfig& cfg, uint64_t seed) {
  ValidateSupernetConfig(cfg);
  Supernet net;
  net.cfg = cfg;
  Rng rng(seed);
  Builder b{&net, &rng};

  const int64_t c1 = cfg.shape.max_width_front;
  const int64_t c3 = cfg.shape.max_width_back;
  const int64_t split = c1 / cfg.res2net_scale;
  const int64_t se_h =
      std::max(1, std::min(static_cast<int>(c1) / cfg.se_reduction,
                           cfg.se_bottleneck_cap));

  b.Conv("stem.conv", c1, cfg.in_channels, 5, /*with_kt=*/true);
  b.Bn("stem.bn", c1);
  for (int i = 1; i <= cfg.shape.max_depth; ++i) {
    const std::string p = BlockName(i);
    b.Conv(p + ".conv1", c1, c1, 1, false);
    b.Bn(p + ".bn1", c1);
    for (int j = 1; j < cfg.res2net_scale; ++j)
      b.Conv(p + ".res2." + std::to_string(j), split, split, 5, true);
    b.Bn(p + ".bn2", c1);
    b.Conv(p + ".conv3", c1, c1, 1, false);
    b.Bn(p + ".bn3", c1);
    b.LinearLayer(p + ".se.fc1", se_h, c1);
    b.LinearLayer(p + ".se.fc2", c1, se_h);
  }
  b.Conv("agg.conv", c3, static_cast<int64_t>(cfg.shape.max_depth) * c1, 1,
         false);
  b.Conv("pool.att1", cfg.att_bottleneck, c3, 1, false);
  b.Conv("pool.att2", c3, cfg.att_bottleneck, 1, false);
  b.Bn("pool.bn", 2 * c3);
  b.LinearLayer("fc", cfg.embedding_dim, 2 * c3);
  b.Bn("fc.bn", cfg.embedding_dim);
  return net;
}

int64_t NumParams(const Supernet& net) {
  int64_t n = 0;
  for (const auto& [name, t] : net.params) n += t.Numel();
  return n;
}

namespace {

// Per-forward context bundling the tape, the weight store and the hooks.
struct Ctx {
  ad::Tape* tape;
  Supernet* net;
  const ForwardHooks* hooks;
  bool training;

  ad::ValueId Param(const std::string& name) {
    auto it = net->params.find(name);
    Check(it != net->params.end(), "Forward: missing parameter " + name);
    return tape->Leaf(it->second, name);
  }

  ad::ValueId SliceRows(ad::ValueId t, int64_t n) {
    if (tape->Value(t).Dim(0) == n) return t;
    return tape->IndexSelect(t, 0, Iota(n));
  }

  ad::ValueId SliceAxis(ad::ValueId t, int axis, int64_t n) {
    if (tape->Value(t).Dim(axis) == n) return t;
    return tape->IndexSelect(t, axis, Iota(n));
  }

  // Stored 5-tap kernel -> active [cout, cin, k] weight.
  ad::ValueId ConvW(const std::string& name, int64_t cout, int64_t cin,
                    int64_t k) {
    ad::ValueId w = Param(name + ".w");
    w = SliceRows(w, cout);
    w = SliceAxis(w, 1, cin);
    if (tape->Value(w).Dim(2) == k) return w;
    ad::ValueId kt1 = Param(name + ".kt1");
    ad::ValueId kt2 = Param(name + ".kt2");
    return tape->TransformKernel(w, kt1, kt2, k);
  }

  // Dynamic BN over the channel subset `idx` of the stored layer `prefix`.
  ad::ValueId Bn(ad::ValueId x, const std::string& prefix,
                 const std::vector<int64_t>& idx) {
    Tensor& stored_g = net->params.at(prefix + ".g");
    const bool full = static_cast<int64_t>(idx.size()) == stored_g.Dim(0);
    ad::ValueId g = Param(prefix + ".g");
    ad::ValueId be = Param(prefix + ".b");
    if (!full) {
      g = tape->IndexSelect(g, 0, idx);
      be = tape->IndexSelect(be, 0, idx);
    }
    if (training) {
      ad::BnBatchStats stats;
      ad::ValueId y = tape->BnTrain(x, g, be, nn::kBnEps, &stats);
      if (hooks->update_running) {
        Tensor& rm = net->buffers.at(prefix + ".mean");
        Tensor& rv = net->buffers.at(prefix + ".var");
        const double m = hooks->bn_momentum;
        for (size_t i = 0; i < idx.size(); ++i) {
          const int64_t c = idx[i];
          rm.At(c) = (1.0 - m) * rm.At(c) + m * stats.mean.At(static_cast<int64_t>(i));
          rv.At(c) =
              (1.0 - m) * rv.At(c) + m * stats.var_unbiased.At(static_cast<int64_t>(i));
        }
      }
      if (hooks->recal) {
        auto& e = hooks->recal->entries[prefix];
        if (e.count == 0 && e.idx.empty()) {
          e.idx = idx;
          e.sum_mean.assign(idx.size(), 0.0);
          e.sum_var.assign(idx.size(), 0.0);
        }
        Check(e.idx == idx, "RecalibrateBn: active slice changed mid-stream");
        for (size_t i = 0; i < idx.size(); ++i) {
          e.sum_mean[i] += stats.mean.At(static_cast<int64_t>(i));
          e.sum_var[i] += stats.var_unbiased.At(static_cast<int64_t>(i));
        }
        e.count += 1;
      }
      return y;
    }
    const Tensor& rm = net->buffers.at(prefix + ".mean");
    const Tensor& rv = net->buffers.at(prefix + ".var");
    Tensor mean, var;
    if (full) {
      mean = rm;
      var = rv;
    } else {
      mean = nn::IndexSelect(rm, 0, idx);
      var = nn::IndexSelect(rv, 0, idx);
    }
    return tape->BnEval(x, g, be, mean, var, nn::kBnEps);
  }
};

}  // namespace

ad::ValueId Forward(ad::Tape* tape, Supernet* net,
                    const space::SubnetSpec& spec, const Tensor& batch,
                    bool training, const ForwardHooks& hooks) {
  ValidateSupernetConfig(net->cfg);
  const SupernetConfig& cfg = net->cfg;
  const ActivePlan plan = MakePlan(spec, cfg);
  CheckRank(batch, 3, "Forward batch");
  Require(batch.Dim(1) == cfg.in_channels,
          "Forward: batch channel count does not match in_channels");

  Ctx c{tape, net, &hooks, training};
  nn::CostMeter* meter = hooks.meter;
  const auto idx_c1 = Iota(plan.c1);

  // Frame-level stem: 5-tap dynamic kernel, stride 1, no dilation.
  ad::ValueId x = tape->Constant(batch);
  ad::ValueId h = tape->Conv1d(
      x, c.ConvW("stem.conv", plan.c1, cfg.in_channels, spec.kernels[0]),
      c.SliceRows(c.Param("stem.conv.b"), plan.c1), 1, 1, meter);
  h = tape->Relu(h);
  h = c.Bn(h, "stem.bn", idx_c1);

  std::vector<ad::ValueId> block_outs;
  for (int i = 1; i <= plan.depth; ++i) {
    const std::string p = BlockName(i);
    const int c2 = plan.c2[static_cast<size_t>(i - 1)];
    const int ws = plan.split[static_cast<size_t>(i - 1)];
    const int k = spec.kernels[static_cast<size_t>(i)];
    const int dil = cfg.dilations[static_cast<size_t>(i - 1)];
    const auto idx_c2 = Iota(c2);

    ad::ValueId a = tape->Conv1d(h, c.ConvW(p + ".conv1", c2, plan.c1, 1),
                                 c.SliceRows(c.Param(p + ".conv1.b"), c2), 1, 1,
                                 meter);
    a = tape->Relu(a);
    a = c.Bn(a, p + ".bn1", idx_c2);

    // Res2 ladder: first split passes through, each later split is convolved
    // after adding the previous split's output.
    std::vector<ad::ValueId> outs;
    for (int j = 0; j < cfg.res2net_scale; ++j) {
      ad::ValueId yj = tape->IndexSelect(a, 1, Iota(ws, static_cast<int64_t>(j) * ws));
      if (j == 0) {
        outs.push_back(yj);
        continue;
      }
      ad::ValueId inp = j == 1 ? yj : tape->Add(yj, outs.back());
      const std::string rname = p + ".res2." + std::to_string(j);
      outs.push_back(tape->Conv1d(inp, c.ConvW(rname, ws, ws, k),
                                  c.SliceRows(c.Param(rname + ".b"), ws), dil,
                                  1, meter));
    }
    ad::ValueId r = tape->ConcatChannels(outs);
    r = tape->Relu(r);
    r = c.Bn(r, p + ".bn2", idx_c2);

    ad::ValueId cc = tape->Conv1d(r, c.ConvW(p + ".conv3", plan.c1, c2, 1),
                                  c.SliceRows(c.Param(p + ".conv3.b"), plan.c1),
                                  1, 1, meter);
    cc = tape->Relu(cc);
    cc = c.Bn(cc, p + ".bn3", idx_c1);

    ad::ValueId m = tape->MeanTime(cc);
    ad::ValueId w1 = c.SliceAxis(c.SliceRows(c.Param(p + ".se.fc1.w"),
                                             plan.se_hidden), 1, plan.c1);
    ad::ValueId u = tape->Linear(m, w1,
                                 c.SliceRows(c.Param(p + ".se.fc1.b"),
                                             plan.se_hidden), meter);
    u = tape->Relu(u);
    ad::ValueId w2 = c.SliceAxis(c.SliceRows(c.Param(p + ".se.fc2.w"), plan.c1),
                                 1, plan.se_hidden);
    ad::ValueId g = tape->Linear(u, w2, c.SliceRows(c.Param(p + ".se.fc2.b"),
                                                    plan.c1), meter);
    g = tape->Sigmoid(g);
    ad::ValueId gated = tape->BroadcastMulTime(cc, g, meter);
    h = tape->Add(gated, h);
    block_outs.push_back(h);
  }

  // Aggregation over all active block outputs, 1x1 conv + ReLU, no BN.
  ad::ValueId cat =
      block_outs.size() == 1 ? block_outs[0] : tape->ConcatChannels(block_outs);
  ad::ValueId agg_w = c.Param("agg.conv.w");
  agg_w = c.SliceRows(agg_w, plan.c3);
  agg_w = tape->IndexSelect(agg_w, 1, plan.agg_cols);
  ad::ValueId x9 = tape->Conv1d(cat, agg_w,
                                c.SliceRows(c.Param("agg.conv.b"), plan.c3), 1,
                                1, meter);
  x9 = tape->Relu(x9);

  // Channel-wise attentive statistics pooling.
  ad::ValueId a1 = c.SliceAxis(c.Param("pool.att1.w"), 1, plan.c3);
  ad::ValueId e = tape->Conv1d(x9, a1, c.Param("pool.att1.b"), 1, 1, meter);
  e = tape->Tanh(e);
  ad::ValueId a2 = c.SliceRows(c.Param("pool.att2.w"), plan.c3);
  ad::ValueId sc = tape->Conv1d(e, a2, c.SliceRows(c.Param("pool.att2.b"),
                                                   plan.c3), 1, 1, meter);
  ad::ValueId alpha = tape->SoftmaxTime(sc);
  ad::ValueId pooled = tape->WeightedStats(x9, alpha, nn::kPoolEps, meter);
  ad::ValueId pb = c.Bn(pooled, "pool.bn", plan.pool_cols);

  ad::ValueId fw = tape->IndexSelect(c.Param("fc.w"), 1, plan.pool_cols);
  ad::ValueId emb = tape->Linear(pb, fw, c.Param("fc.b"), meter);
  return c.Bn(emb, "fc.bn", Iota(cfg.embedding_dim));
}

Tensor Embed(Supernet* net, const space::SubnetSpec& spec,
             const Tensor& batch) {
  ad::Tape tape;
  ad::ValueId emb = Forward(&tape, net, spec, batch, /*training=*/false);
  return tape.Value(emb);
}

void RecalibrateBn(Supernet* net, const space::SubnetSpec& spec,
                   const std::vector<const Tensor*>& batches) {
  Require(!batches.empty(), "RecalibrateBn: empty stream");
  BnRecalAccum accum;
  ForwardHooks hooks;
  hooks.recal = &accum;
  for (const Tensor* batch : batches) {
    ad::Tape tape;
    Forward(&tape, net, spec, *batch, /*training=*/true, hooks);
  }
  for (const auto& [prefix, e] : accum.entries) {
    Tensor& rm = net->buffers.at(prefix + ".mean");
    Tensor& rv = net->buffers.at(prefix + ".var");
    const double inv = 1.0 / static_cast<double>(e.count);
    for (size_t i = 0; i < e.idx.size(); ++i) {
      rm.At(e.idx[i]) = e.sum_mean[i] * inv;
      rv.At(e.idx[i]) = e.sum_var[i] * inv;
    }
  }
}

namespace {

Tensor CopyRows(const Tensor& t, int64_t n) {
  if (t.Dim(0) == n) return t;
  return nn::IndexSelect(t, 0, Iota(n));
}

Tensor CopyAxis(const Tensor& t, int axis, int64_t n) {
  if (t.Dim(axis) == n) return t;
  return nn::IndexSelect(t, axis, Iota(n));
}

}  // namespace

ExportedSubnet ExportSubnet(const Supernet& net, const space::SubnetSpec& spec) {
  ValidateSupernetConfig(net.cfg);
  const SupernetConfig& cfg = net.cfg;
  const ActivePlan plan = MakePlan(spec, cfg);
  ExportedSubnet sub;
  sub.spec = spec;
  sub.cfg = cfg;
  const auto& P = net.params;
  const auto& B = net.buffers;
  auto put = [&sub](const std::string& name, Tensor t) {
    sub.params[name] = std::move(t);
  };
  auto put_bn = [&](const std::string& prefix, const std::vector<int64_t>& idx) {
    sub.params[prefix + ".g"] = nn::IndexSelect(P.at(prefix + ".g"), 0, idx);
    sub.params[prefix + ".b"] = nn::IndexSelect(P.at(prefix + ".b"), 0, idx);
    sub.buffers[prefix + ".mean"] =
        nn::IndexSelect(B.at(prefix + ".mean"), 0, idx);
    sub.buffers[prefix + ".var"] =
        nn::IndexSelect(B.at(prefix + ".var"), 0, idx);
  };

  // Stem kernel is materialized at its target size; the transformation
  // matrices do not travel with the subnet.
  Tensor stem_w = CopyRows(P.at("stem.conv.w"), plan.c1);
  stem_w = nn::TransformKernel(stem_w, P.at("stem.conv.kt1"),
                               P.at("stem.conv.kt2"), spec.kernels[0]);
  put("stem.conv.w", std::move(stem_w));
  put("stem.conv.b", CopyRows(P.at("stem.conv.b"), plan.c1));
  put_bn("stem.bn", Iota(plan.c1));

  for (int i = 1; i <= plan.depth; ++i) {
    const std::string p = BlockName(i);
    const int c2 = plan.c2[static_cast<size_t>(i - 1)];
    const int ws = plan.split[static_cast<size_t>(i - 1)];
    const int k = spec.kernels[static_cast<size_t>(i)];
    put(p + ".conv1.w", CopyAxis(CopyRows(P.at(p + ".conv1.w"), c2), 1, plan.c1));
    put(p + ".conv1.b", CopyRows(P.at(p + ".conv1.b"), c2));
    put_bn(p + ".bn1", Iota(c2));
    for (int j = 1; j < cfg.res2net_scale; ++j) {
      const std::string rname = p + ".res2." + std::to_string(j);
      Tensor w = CopyAxis(CopyRows(P.at(rname + ".w"), ws), 1, ws);
      w = nn::TransformKernel(w, P.at(rname + ".kt1"), P.at(rname + ".kt2"), k);
      put(rname + ".w", std::move(w));
      put(rname + ".b", CopyRows(P.at(rname + ".b"), ws));
    }
    put_bn(p + ".bn2", Iota(c2));
    put(p + ".conv3.w", CopyAxis(CopyRows(P.at(p + ".conv3.w"), plan.c1), 1, c2));
    put(p + ".conv3.b", CopyRows(P.at(p + ".conv3.b"), plan.c1));
    put_bn(p + ".bn3", Iota(plan.c1));
    put(p + ".se.fc1.w",
        CopyAxis(CopyRows(P.at(p + ".se.fc1.w"), plan.se_hidden), 1, plan.c1));
    put(p + ".se.fc1.b", CopyRows(P.at(p + ".se.fc1.b"), plan.se_hidden));
    put(p + ".se.fc2.w",
        CopyAxis(CopyRows(P.at(p + ".se.fc2.w"), plan.c1), 1, plan.se_hidden));
    put(p + ".se.fc2.b", CopyRows(P.at(p + ".se.fc2.b"), plan.c1));
  }

  put("agg.conv.w",
      nn::IndexSelect(CopyRows(P.at("agg.conv.w"), plan.c3), 1, plan.agg_cols));
  put("agg.conv.b", CopyRows(P.at("agg.conv.b"), plan.c3));
  put("pool.att1.w", CopyAxis(P.at("pool.att1.w"), 1, plan.c3));
  put("pool.att1.b", P.at("pool.att1.b"));
  put("pool.att2.w", CopyRows(P.at("pool.att2.w"), plan.c3));
  put("pool.att2.b", CopyRows(P.at("pool.att2.b"), plan.c3));
  put_bn("pool.bn", plan.pool_cols);
  put("fc.w", nn::IndexSelect(P.at("fc.w"), 1, plan.pool_cols));
  put("fc.b", P.at("fc.b"));
  put_bn("fc.bn", Iota(cfg.embedding_dim));
  return sub;
}

int64_t NumParams(const ExportedSubnet& sub) {
  int64_t n = 0;
  for (const auto& [name, t] : sub.params) n += t.Numel();
  return n;
}

Tensor ForwardExported(const ExportedSubnet& sub, const Tensor& batch,
                       nn::CostMeter* meter) {
  const SupernetConfig& cfg = sub.cfg;
  const space::SubnetSpec& spec = sub.spec;
  CheckRank(batch, 3, "ForwardExported batch");
  Require(batch.Dim(1) == cfg.in_channels,
          "ForwardExported: batch channel count mismatch");
  const auto& P = sub.params;
  const auto& B = sub.buffers;
  auto bn = [&](const Tensor& x, const std::string& prefix) {
    return nn::BnApply(x, P.at(prefix + ".g"), P.at(prefix + ".b"),
                       B.at(prefix + ".mean"), B.at(prefix + ".var"),
                       nn::kBnEps);
  };

  Tensor h = nn::Conv1dSame(batch, P.at("stem.conv.w"), P.at("stem.conv.b"), 1,
                            1, meter);
  h = bn(nn::Relu(h), "stem.bn");

  std::vector<Tensor> block_outs;
  for (int i = 1; i <= spec.depth; ++i) {
    const std::string p = BlockName(i);
    const int dil = cfg.dilations[static_cast<size_t>(i - 1)];
    Tensor a = nn::Conv1dSame(h, P.at(p + ".conv1.w"), P.at(p + ".conv1.b"), 1,
                              1, meter);
    a = bn(nn::Relu(a), p + ".bn1");
    const int64_t ws = P.at(p + ".res2.1.w").Dim(0);
    std::vector<Tensor> outs;
    for (int j = 0; j < cfg.res2net_scale; ++j) {
      Tensor yj = nn::IndexSelect(a, 1, Iota(ws, static_cast<int64_t>(j) * ws));
      if (j == 0) {
        outs.push_back(std::move(yj));
        continue;
      }
      Tensor inp;
      if (j == 1) {
        inp = std::move(yj);
      } else {
        inp = Tensor(yj.shape);
        const Tensor& prev = outs.back();
        for (size_t n = 0; n < inp.data.size(); ++n)
          inp.data[n] = yj.data[n] + prev.data[n];
      }
      const std::string rname = p + ".res2." + std::to_string(j);
      outs.push_back(nn::Conv1dSame(inp, P.at(rname + ".w"),
                                    P.at(rname + ".b"), dil, 1, meter));
    }
    std::vector<const Tensor*> outp;
    for (const Tensor& t : outs) outp.push_back(&t);
    Tensor r = nn::ConcatChannels(outp);
    r = bn(nn::Relu(r), p + ".bn2");
    Tensor cc = nn::Conv1dSame(r, P.at(p + ".conv3.w"), P.at(p + ".conv3.b"), 1,
                               1, meter);
    cc = bn(nn::Relu(cc), p + ".bn3");
    Tensor m = nn::MeanTime(cc);
    Tensor u = nn::Relu(nn::Linear(m, P.at(p + ".se.fc1.w"),
                                   P.at(p + ".se.fc1.b"), meter));
    Tensor g = nn::SigmoidT(nn::Linear(u, P.at(p + ".se.fc2.w"),
                                       P.at(p + ".se.fc2.b"), meter));
    Tensor gated = nn::BroadcastMulTime(cc, g, meter);
    Tensor next(h.shape);
    for (size_t n = 0; n < next.data.size(); ++n)
      next.data[n] = gated.data[n] + h.data[n];
    h = std::move(next);
    block_outs.push_back(h);
  }

  std::vector<const Tensor*> cat_in;
  for (const Tensor& t : block_outs) cat_in.push_back(&t);
  Tensor cat = block_outs.size() == 1 ? block_outs[0] : nn::ConcatChannels(cat_in);
  Tensor x9 = nn::Relu(nn::Conv1dSame(cat, P.at("agg.conv.w"),
                                      P.at("agg.conv.b"), 1, 1, meter));

  Tensor e = nn::TanhT(nn::Conv1dSame(x9, P.at("pool.att1.w"),
                                      P.at("pool.att1.b"), 1, 1, meter));
  Tensor sc = nn::Conv1dSame(e, P.at("pool.att2.w"), P.at("pool.att2.b"), 1, 1,
                             meter);
  Tensor alpha = nn::SoftmaxTime(sc);
  Tensor pooled = nn::WeightedStats(x9, alpha, nn::kPoolEps, meter);
  Tensor pb = bn(pooled, "pool.bn");
  Tensor emb = nn::Linear(pb, P.at("fc.w"), P.at("fc.b"), meter);
  return bn(emb, "fc.bn");
}

}  // namespace supernet
}  // namespace tdnas
