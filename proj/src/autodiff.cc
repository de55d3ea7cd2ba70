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

#include "autodiff.h"

#include <cmath>

namespace tdnas {
namespace ad {

ValueId Tape::Push(Tensor value, bool requires_grad,
                   std::function<void(Tape*)> backprop) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  if (requires_grad) n.backprop = std::move(backprop);
  nodes_.push_back(std::move(n));
  return static_cast<ValueId>(nodes_.size() - 1);
}

bool Tape::Requires(ValueId id) const {
  return id != kNone && N(id).requires_grad;
}

void Tape::Accum(ValueId id, const Tensor& g) {
  if (id == kNone) return;
  Node& n = N(id);
  if (!n.requires_grad) return;
  if (!n.has_grad) {
    n.grad = Tensor(n.value.shape);
    n.has_grad = true;
  }
  Check(n.grad.data.size() == g.data.size(), "Accum: gradient shape mismatch");
  for (size_t i = 0; i < g.data.size(); ++i) n.grad.data[i] += g.data[i];
}

ValueId Tape::Constant(Tensor v) { return Push(std::move(v), false, nullptr); }

ValueId Tape::Leaf(Tensor v, const std::string& name) {
  ValueId id = Push(std::move(v), true, nullptr);
  if (!name.empty()) {
    Require(named_leaves_.find(name) == named_leaves_.end(),
            "Tape: duplicate leaf name " + name);
    named_leaves_[name] = id;
  }
  return id;
}

const Tensor& Tape::Value(ValueId id) const { return N(id).value; }
bool Tape::HasGrad(ValueId id) const { return N(id).has_grad; }
const Tensor& Tape::Grad(ValueId id) const {
  Require(N(id).has_grad, "Tape: node has no gradient", ErrorKind::kState);
  return N(id).grad;
}

const Tensor* Tape::GradByName(const std::string& name) const {
  auto it = named_leaves_.find(name);
  if (it == named_leaves_.end()) return nullptr;
  const Node& n = N(it->second);
  return n.has_grad ? &n.grad : nullptr;
}

ValueId Tape::IndexSelect(ValueId x, int axis, std::vector<int64_t> idx) {
  Tensor y = nn::IndexSelect(Value(x), axis, idx);
  const bool rg = Requires(x);
  auto shape = Value(x).shape;
  ValueId out = Push(std::move(y), rg, nullptr);
  if (rg) {
    N(out).backprop = [x, out, axis, idx = std::move(idx), shape](Tape* t) {
      const Tensor& dy = t->Grad(out);
      Tensor dx(shape);
      int64_t outer = 1, inner = 1;
      for (int a = 0; a < axis; ++a) outer *= shape[static_cast<size_t>(a)];
      for (size_t a = static_cast<size_t>(axis) + 1; a < shape.size(); ++a)
        inner *= shape[a];
      const int64_t dim = shape[static_cast<size_t>(axis)];
      const int64_t n_sel = static_cast<int64_t>(idx.size());
      for (int64_t o = 0; o < outer; ++o) {
        for (int64_t s = 0; s < n_sel; ++s) {
          const double* src =
              &dy.data[static_cast<size_t>((o * n_sel + s) * inner)];
          double* dst = &dx.data[static_cast<size_t>(
              (o * dim + idx[static_cast<size_t>(s)]) * inner)];
          for (int64_t i = 0; i < inner; ++i) dst[i] += src[i];
        }
      }
      t->Accum(x, dx);
    };
  }
  return out;
}

ValueId Tape::Conv1d(ValueId x, ValueId w, ValueId b, int64_t dilation,
                     int64_t groups, nn::CostMeter* meter) {
  static const Tensor kEmpty;
  const Tensor& bias = b == kNone ? kEmpty : Value(b);
  Tensor y = nn::Conv1dSame(Value(x), Value(w), bias, dilation, groups, meter);
  const bool rg = Requires(x) || Requires(w) || Requires(b);
  ValueId out = Push(std::move(y), rg, nullptr);
  if (rg) {
    N(out).backprop = [x, w, b, out, dilation, groups](Tape* t) {
      const Tensor& dy = t->Grad(out);
      const Tensor& xv = t->Value(x);
      const Tensor& wv = t->Value(w);
      if (t->Requires(x)) {
        t->Accum(x, nn::Conv1dSameGradInput(dy, wv, xv.shape, dilation, groups));
      }
      if (t->Requires(w) || t->Requires(b)) {
        Tensor dw, db;
        nn::Conv1dSameGradParams(dy, xv, wv, dilation, groups, &dw,
                                 b == kNone ? nullptr : &db);
        if (t->Requires(w)) t->Accum(w, dw);
        if (b != kNone && t->Requires(b)) t->Accum(b, db);
      }
    };
  }
  return out;
}

ValueId Tape::Linear(ValueId x, ValueId w, ValueId b, nn::CostMeter* meter) {
  static const Tensor kEmpty;
  const Tensor& bias = b == kNone ? kEmpty : Value(b);
  Tensor y = nn::Linear(Value(x), Value(w), bias, meter);
  const bool rg = Requires(x) || Requires(w) || Requires(b);
  ValueId out = Push(std::move(y), rg, nullptr);
  if (rg) {
    N(out).backprop = [x, w, b, out](Tape* t) {
      const Tensor& dy = t->Grad(out);
      const Tensor& xv = t->Value(x);
      const Tensor& wv = t->Value(w);
      const int64_t bsz = xv.Dim(0), fin = xv.Dim(1), fout = wv.Dim(0);
      if (t->Requires(x)) {
        Tensor dx(xv.shape);
        for (int64_t bi = 0; bi < bsz; ++bi)
          for (int64_t o = 0; o < fout; ++o) {
            const double g = dy.At(bi, o);
            for (int64_t i = 0; i < fin; ++i) dx.At(bi, i) += g * wv.At(o, i);
          }
        t->Accum(x, dx);
      }
      if (t->Requires(w)) {
        Tensor dw(wv.shape);
        for (int64_t bi = 0; bi < bsz; ++bi)
          for (int64_t o = 0; o < fout; ++o) {
            const double g = dy.At(bi, o);
            for (int64_t i = 0; i < fin; ++i) dw.At(o, i) += g * xv.At(bi, i);
          }
        t->Accum(w, dw);
      }
      if (b != kNone && t->Requires(b)) {
        Tensor db({fout});
        for (int64_t bi = 0; bi < bsz; ++bi)
          for (int64_t o = 0; o < fout; ++o) db.At(o) += dy.At(bi, o);
        t->Accum(b, db);
      }
    };
  }
  return out;
}

ValueId Tape::BnTrain(ValueId x, ValueId gamma, ValueId beta, double eps,
                      BnBatchStats* stats_out) {
  const Tensor& xv = Value(x);
  BnBatchStats stats;
  nn::BatchMoments(xv, &stats.mean, &stats.var, &stats.var_unbiased);
  Tensor y = nn::BnApply(xv, Value(gamma), Value(beta), stats.mean, stats.var,
                         eps);
  if (stats_out) *stats_out = stats;
  const bool rg = Requires(x) || Requires(gamma) || Requires(beta);
  ValueId out = Push(std::move(y), rg, nullptr);
  if (rg) {
    Tensor mean = stats.mean, var = stats.var;
    N(out).backprop = [x, gamma, beta, out, eps, mean, var](Tape* t) {
      const Tensor& dy = t->Grad(out);
      const Tensor& xv = t->Value(x);
      const Tensor& gv = t->Value(gamma);
      const int64_t bsz = xv.Dim(0), c = xv.Dim(1);
      const int64_t tt = xv.Rank() == 3 ? xv.Dim(2) : 1;
      const double n = static_cast<double>(bsz * tt);
      Tensor dgamma({c}), dbeta({c});
      Tensor dx(xv.shape);
      for (int64_t ci = 0; ci < c; ++ci) {
        const double inv = 1.0 / std::sqrt(var.At(ci) + eps);
        const double m = mean.At(ci);
        double sum_dy = 0.0, sum_dy_xh = 0.0;
        for (int64_t bi = 0; bi < bsz; ++bi) {
          const double* xp = &xv.data[static_cast<size_t>((bi * c + ci) * tt)];
          const double* dp = &dy.data[static_cast<size_t>((bi * c + ci) * tt)];
          for (int64_t i = 0; i < tt; ++i) {
            sum_dy += dp[i];
            sum_dy_xh += dp[i] * (xp[i] - m) * inv;
          }
        }
        dbeta.At(ci) = sum_dy;
        dgamma.At(ci) = sum_dy_xh;
        const double g_inv = gv.At(ci) * inv;
        const double mean_dy = sum_dy / n;
        const double mean_dy_xh = sum_dy_xh / n;
        for (int64_t bi = 0; bi < bsz; ++bi) {
          const double* xp = &xv.data[static_cast<size_t>((bi * c + ci) * tt)];
          const double* dp = &dy.data[static_cast<size_t>((bi * c + ci) * tt)];
          double* dxp = &dx.data[static_cast<size_t>((bi * c + ci) * tt)];
          for (int64_t i = 0; i < tt; ++i) {
            const double xh = (xp[i] - m) * inv;
            dxp[i] = g_inv * (dp[i] - mean_dy - xh * mean_dy_xh);
          }
        }
      }
      if (t->Requires(x)) t->Accum(x, dx);
      if (t->Requires(gamma)) t->Accum(gamma, dgamma);
      if (t->Requires(beta)) t->Accum(beta, dbeta);
    };
  }
  return out;
}

ValueId Tape::BnEval(ValueId x, ValueId gamma, ValueId beta,
                     const Tensor& mean, const Tensor& var, double eps) {
  Tensor y = nn::BnApply(Value(x), Value(gamma), Value(beta), mean, var, eps);
  const bool rg = Requires(x) || Requires(gamma) || Requires(beta);
  ValueId out = Push(std::move(y), rg, nullptr);
  if (rg) {
    Tensor m = mean, v = var;
    N(out).backprop = [x, gamma, beta, out, eps, m, v](Tape* t) {
      const Tensor& dy = t->Grad(out);
      const Tensor& xv = t->Value(x);
      const Tensor& gv = t->Value(gamma);
      const int64_t bsz = xv.Dim(0), c = xv.Dim(1);
      const int64_t tt = xv.Rank() == 3 ? xv.Dim(2) : 1;
      Tensor dx(xv.shape), dgamma({c}), dbeta({c});
      for (int64_t ci = 0; ci < c; ++ci) {
        const double inv = 1.0 / std::sqrt(v.At(ci) + eps);
        const double g_inv = gv.At(ci) * inv;
        double s_dy = 0.0, s_dy_xh = 0.0;
        for (int64_t bi = 0; bi < bsz; ++bi) {
          const double* xp = &xv.data[static_cast<size_t>((bi * c + ci) * tt)];
          const double* dp = &dy.data[static_cast<size_t>((bi * c + ci) * tt)];
          double* dxp = &dx.data[static_cast<size_t>((bi * c + ci) * tt)];
          for (int64_t i = 0; i < tt; ++i) {
            dxp[i] = dp[i] * g_inv;
            s_dy += dp[i];
            s_dy_xh += dp[i] * (xp[i] - m.At(ci)) * inv;
          }
        }
        dbeta.At(ci) = s_dy;
        dgamma.At(ci) = s_dy_xh;
      }
      if (t->Requires(x)) t->Accum(x, dx);
      if (t->Requires(gamma)) t->Accum(gamma, dgamma);
      if (t->Requires(beta)) t->Accum(beta, dbeta);
    };
  }
  return out;
}

ValueId Tape::Relu(ValueId x) {
  Tensor y = nn::Relu(Value(x));
  const bool rg = Requires(x);
  ValueId out = Push(std::move(y), rg, nullptr);
  if (rg) {
    N(out).backprop = [x, out](Tape* t) {
      const Tensor& dy = t->Grad(out);
      const Tensor& xv = t->Value(x);
      Tensor dx(xv.shape);
      for (size_t i = 0; i < dx.data.size(); ++i)
        dx.data[i] = xv.data[i] > 0.0 ? dy.data[i] : 0.0;
      t->Accum(x, dx);
    };
  }
  return out;
}

ValueId Tape::Tanh(ValueId x) {
  Tensor y = nn::TanhT(Value(x));
  const bool rg = Requires(x);
  ValueId out = Push(std::move(y), rg, nullptr);
  if (rg) {
    N(out).backprop = [x, out](Tape* t) {
      const Tensor& dy = t->Grad(out);
      const Tensor& yv = t->Value(out);
      Tensor dx(yv.shape);
      for (size_t i = 0; i < dx.data.size(); ++i)
        dx.data[i] = dy.data[i] * (1.0 - yv.data[i] * yv.data[i]);
      t->Accum(x, dx);
    };
  }
  return out;
}

ValueId Tape::Sigmoid(ValueId x) {
  Tensor y = nn::SigmoidT(Value(x));
  const bool rg = Requires(x);
  ValueId out = Push(std::move(y), rg, nullptr);
  if (rg) {
    N(out).backprop = [x, out](Tape* t) {
      const Tensor& dy = t->Grad(out);
      const Tensor& yv = t->Value(out);
      Tensor dx(yv.shape);
      for (size_t i = 0; i < dx.data.size(); ++i)
        dx.data[i] = dy.data[i] * yv.data[i] * (1.0 - yv.data[i]);
      t->Accum(x, dx);
    };
  }
  return out;
}

ValueId Tape::Add(ValueId a, ValueId b) {
  const Tensor& av = Value(a);
  const Tensor& bv = Value(b);
  Require(av.SameShape(bv), "Add: shape mismatch");
  Tensor y(av.shape);
  for (size_t i = 0; i < y.data.size(); ++i) y.data[i] = av.data[i] + bv.data[i];
  const bool rg = Requires(a) || Requires(b);
  ValueId out = Push(std::move(y), rg, nullptr);
  if (rg) {
    N(out).backprop = [a, b, out](Tape* t) {
      t->Accum(a, t->Grad(out));
      t->Accum(b, t->Grad(out));
    };
  }
  return out;
}

ValueId Tape::Sub(ValueId a, ValueId b) {
  const Tensor& av = Value(a);
  const Tensor& bv = Value(b);
  Require(av.SameShape(bv), "Sub: shape mismatch");
  Tensor y(av.shape);
  for (size_t i = 0; i < y.data.size(); ++i) y.data[i] = av.data[i] - bv.data[i];
  const bool rg = Requires(a) || Requires(b);
  ValueId out = Push(std::move(y), rg, nullptr);
  if (rg) {
    N(out).backprop = [a, b, out](Tape* t) {
      const Tensor& dy = t->Grad(out);
      t->Accum(a, dy);
      if (t->Requires(b)) {
        Tensor neg(dy.shape);
        for (size_t i = 0; i < neg.data.size(); ++i) neg.data[i] = -dy.data[i];
        t->Accum(b, neg);
      }
    };
  }
  return out;
}

ValueId Tape::Mul(ValueId a, ValueId b) {
  const Tensor& av = Value(a);
  const Tensor& bv = Value(b);
  Require(av.SameShape(bv), "Mul: shape mismatch");
  Tensor y(av.shape);
  for (size_t i = 0; i < y.data.size(); ++i) y.data[i] = av.data[i] * bv.data[i];
  const bool rg = Requires(a) || Requires(b);
  ValueId out = Push(std::move(y), rg, nullptr);
  if (rg) {
    N(out).backprop = [a, b, out](Tape* t) {
      const Tensor& dy = t->Grad(out);
      if (t->Requires(a)) {
        const Tensor& bv = t->Value(b);
        Tensor da(dy.shape);
        for (size_t i = 0; i < da.data.size(); ++i)
          da.data[i] = dy.data[i] * bv.data[i];
        t->Accum(a, da);
      }
      if (t->Requires(b)) {
        const Tensor& av = t->Value(a);
        Tensor db(dy.shape);
        for (size_t i = 0; i < db.data.size(); ++i)
          db.data[i] = dy.data[i] * av.data[i];
        t->Accum(b, db);
      }
    };
  }
  return out;
}

ValueId Tape::Scale(ValueId x, double c) {
  const Tensor& xv = Value(x);
  Tensor y(xv.shape);
  for (size_t i = 0; i < y.data.size(); ++i) y.data[i] = xv.data[i] * c;
  const bool rg = Requires(x);
  ValueId out = Push(std::move(y), rg, nullptr);
  if (rg) {
    N(out).backprop = [x, out, c](Tape* t) {
      const Tensor& dy = t->Grad(out);
      Tensor dx(dy.shape);
      for (size_t i = 0; i < dx.data.size(); ++i) dx.data[i] = dy.data[i] * c;
      t->Accum(x, dx);
    };
  }
  return out;
}

ValueId Tape::Abs(ValueId x) {
  const Tensor& xv = Value(x);
  Tensor y(xv.shape);
  for (size_t i = 0; i < y.data.size(); ++i) y.data[i] = std::fabs(xv.data[i]);
  const bool rg = Requires(x);
  ValueId out = Push(std::move(y), rg, nullptr);
  if (rg) {
    N(out).backprop = [x, out](Tape* t) {
      const Tensor& dy = t->Grad(out);
      const Tensor& xv = t->Value(x);
      Tensor dx(dy.shape);
      for (size_t i = 0; i < dx.data.size(); ++i) {
        const double s = xv.data[i] > 0.0 ? 1.0 : (xv.data[i] < 0.0 ? -1.0 : 0.0);
        dx.data[i] = dy.data[i] * s;
      }
      t->Accum(x, dx);
    };
  }
  return out;
}

ValueId Tape::ConcatChannels(const std::vector<ValueId>& xs) {
  std::vector<const Tensor*> vs;
  bool rg = false;
  for (ValueId id : xs) {
    vs.push_back(&Value(id));
    rg = rg || Requires(id);
  }
  Tensor y = nn::ConcatChannels(vs);
  ValueId out = Push(std::move(y), rg, nullptr);
  if (rg) {
    std::vector<ValueId> ids = xs;
    N(out).backprop = [ids, out](Tape* t) {
      const Tensor& dy = t->Grad(out);
      const int64_t bsz = dy.Dim(0), c_total = dy.Dim(1), tt = dy.Dim(2);
      int64_t off = 0;
      for (ValueId id : ids) {
        const int64_t c = t->Value(id).Dim(1);
        if (t->Requires(id)) {
          Tensor dx({bsz, c, tt});
          for (int64_t bi = 0; bi < bsz; ++bi) {
            const double* src =
                &dy.data[static_cast<size_t>((bi * c_total + off) * tt)];
            double* dst = &dx.data[static_cast<size_t>(bi * c * tt)];
            for (int64_t i = 0; i < c * tt; ++i) dst[i] = src[i];
          }
          t->Accum(id, dx);
        }
        off += c;
      }
    };
  }
  return out;
}

ValueId Tape::ConcatCols(const std::vector<ValueId>& xs) {
  std::vector<const Tensor*> vs;
  bool rg = false;
  for (ValueId id : xs) {
    vs.push_back(&Value(id));
    rg = rg || Requires(id);
  }
  Tensor y = nn::ConcatCols(vs);
  ValueId out = Push(std::move(y), rg, nullptr);
  if (rg) {
    std::vector<ValueId> ids = xs;
    N(out).backprop = [ids, out](Tape* t) {
      const Tensor& dy = t->Grad(out);
      const int64_t bsz = dy.Dim(0);
      int64_t off = 0;
      for (ValueId id : ids) {
        const int64_t f = t->Value(id).Dim(1);
        if (t->Requires(id)) {
          Tensor dx({bsz, f});
          for (int64_t bi = 0; bi < bsz; ++bi)
            for (int64_t i = 0; i < f; ++i) dx.At(bi, i) = dy.At(bi, off + i);
          t->Accum(id, dx);
        }
        off += f;
      }
    };
  }
  return out;
}

ValueId Tape::MeanTime(ValueId x) {
  Tensor y = nn::MeanTime(Value(x));
  const bool rg = Requires(x);
  ValueId out = Push(std::move(y), rg, nullptr);
  if (rg) {
    N(out).backprop = [x, out](Tape* t) {
      const Tensor& dy = t->Grad(out);
      const Tensor& xv = t->Value(x);
      const int64_t bsz = xv.Dim(0), c = xv.Dim(1), tt = xv.Dim(2);
      Tensor dx(xv.shape);
      const double inv = 1.0 / static_cast<double>(tt);
      for (int64_t bi = 0; bi < bsz; ++bi)
        for (int64_t ci = 0; ci < c; ++ci) {
          const double g = dy.At(bi, ci) * inv;
          double* dxp = &dx.data[static_cast<size_t>((bi * c + ci) * tt)];
          for (int64_t i = 0; i < tt; ++i) dxp[i] = g;
        }
      t->Accum(x, dx);
    };
  }
  return out;
}

ValueId Tape::BroadcastMulTime(ValueId x, ValueId s, nn::CostMeter* meter) {
  Tensor y = nn::BroadcastMulTime(Value(x), Value(s), meter);
  const bool rg = Requires(x) || Requires(s);
  ValueId out = Push(std::move(y), rg, nullptr);
  if (rg) {
    N(out).backprop = [x, s, out](Tape* t) {
      const Tensor& dy = t->Grad(out);
      const Tensor& xv = t->Value(x);
      const Tensor& sv = t->Value(s);
      const int64_t bsz = xv.Dim(0), c = xv.Dim(1), tt = xv.Dim(2);
      if (t->Requires(x)) {
        Tensor dx(xv.shape);
        for (int64_t bi = 0; bi < bsz; ++bi)
          for (int64_t ci = 0; ci < c; ++ci) {
            const double g = sv.At(bi, ci);
            const double* dp = &dy.data[static_cast<size_t>((bi * c + ci) * tt)];
            double* dxp = &dx.data[static_cast<size_t>((bi * c + ci) * tt)];
            for (int64_t i = 0; i < tt; ++i) dxp[i] = g * dp[i];
          }
        t->Accum(x, dx);
      }
      if (t->Requires(s)) {
        Tensor ds(sv.shape);
        for (int64_t bi = 0; bi < bsz; ++bi)
          for (int64_t ci = 0; ci < c; ++ci) {
            const double* dp = &dy.data[static_cast<size_t>((bi * c + ci) * tt)];
            const double* xp = &xv.data[static_cast<size_t>((bi * c + ci) * tt)];
            double acc = 0.0;
            for (int64_t i = 0; i < tt; ++i) acc += dp[i] * xp[i];
            ds.At(bi, ci) = acc;
          }
        t->Accum(s, ds);
      }
    };
  }
  return out;
}

ValueId Tape::SoftmaxTime(ValueId x) {
  Tensor y = nn::SoftmaxTime(Value(x));
  const bool rg = Requires(x);
  ValueId out = Push(std::move(y), rg, nullptr);
  if (rg) {
    N(out).backprop = [x, out](Tape* t) {
      const Tensor& dy = t->Grad(out);
      const Tensor& yv = t->Value(out);
      const int64_t bsz = yv.Dim(0), c = yv.Dim(1), tt = yv.Dim(2);
      Tensor dx(yv.shape);
      for (int64_t bi = 0; bi < bsz; ++bi)
        for (int64_t ci = 0; ci < c; ++ci) {
          const double* dp = &dy.data[static_cast<size_t>((bi * c + ci) * tt)];
          const double* ap = &yv.data[static_cast<size_t>((bi * c + ci) * tt)];
          double dot = 0.0;
          for (int64_t i = 0; i < tt; ++i) dot += dp[i] * ap[i];
          double* dxp = &dx.data[static_cast<size_t>((bi * c + ci) * tt)];
          for (int64_t i = 0; i < tt; ++i) dxp[i] = ap[i] * (dp[i] - dot);
        }
      t->Accum(x, dx);
    };
  }
  return out;
}

ValueId Tape::WeightedStats(ValueId x, ValueId alpha, double eps,
                            nn::CostMeter* meter) {
  Tensor y = nn::WeightedStats(Value(x), Value(alpha), eps, meter);
  const bool rg = Requires(x) || Requires(alpha);
  ValueId out = Push(std::move(y), rg, nullptr);
  if (rg) {
    N(out).backprop = [x, alpha, out, eps](Tape* t) {
      const Tensor& dy = t->Grad(out);
      const Tensor& xv = t->Value(x);
      const Tensor& av = t->Value(alpha);
      const Tensor& yv = t->Value(out);
      const int64_t bsz = xv.Dim(0), c = xv.Dim(1), tt = xv.Dim(2);
      Tensor dx(xv.shape), da(av.shape);
      for (int64_t bi = 0; bi < bsz; ++bi)
        for (int64_t ci = 0; ci < c; ++ci) {
          const double* xp = &xv.data[static_cast<size_t>((bi * c + ci) * tt)];
          const double* ap = &av.data[static_cast<size_t>((bi * c + ci) * tt)];
          const double mu = yv.At(bi, ci);
          const double sigma = yv.At(bi, c + ci);
          // Recover the clamp state: sigma == sqrt(eps) iff variance <= 0.
          double m2 = 0.0;
          for (int64_t i = 0; i < tt; ++i) m2 += ap[i] * xp[i] * xp[i];
          const double v = m2 - mu * mu;
          const double dsig_dv = v > 0.0 ? 0.5 / sigma : 0.0;
          const double gmu = dy.At(bi, ci);
          const double gsig = dy.At(bi, c + ci);
          double* dxp = &dx.data[static_cast<size_t>((bi * c + ci) * tt)];
          double* dap = &da.data[static_cast<size_t>((bi * c + ci) * tt)];
          for (int64_t i = 0; i < tt; ++i) {
            const double dv_dx = 2.0 * ap[i] * xp[i] - 2.0 * mu * ap[i];
            const double dv_da = xp[i] * xp[i] - 2.0 * mu * xp[i];
            dxp[i] = gmu * ap[i] + gsig * dsig_dv * dv_dx;
            dap[i] = gmu * xp[i] + gsig * dsig_dv * dv_da;
          }
        }
      if (t->Requires(x)) t->Accum(x, dx);
      if (t->Requires(alpha)) t->Accum(alpha, da);
      (void)eps;
    };
  }
  return out;
}

ValueId Tape::TransformKernel(ValueId w5, ValueId kt1, ValueId kt2, int64_t k) {
  Tensor y = nn::TransformKernel(Value(w5), Value(kt1), Value(kt2), k);
  const bool rg = Requires(w5) || Requires(kt1) || Requires(kt2);
  ValueId out = Push(std::move(y), rg, nullptr);
  if (rg) {
    N(out).backprop = [w5, kt1, kt2, out, k](Tape* t) {
      const Tensor& dy = t->Grad(out);
      const Tensor& w5v = t->Value(w5);
      const Tensor& kt1v = t->Value(kt1);
      const Tensor& kt2v = t->Value(kt2);
      const int64_t cout = w5v.Dim(0), cin = w5v.Dim(1);
      if (k == 5) {
        t->Accum(w5, dy);
        return;
      }
      Tensor dw5(w5v.shape), dkt1(kt1v.shape), dkt2(kt2v.shape);
      if (k == 3) {
        for (int64_t o = 0; o < cout; ++o)
          for (int64_t i = 0; i < cin; ++i)
            for (int64_t r = 0; r < 3; ++r) {
              const double g = dy.At(o, i, r);
              for (int64_t s = 0; s < 3; ++s) {
                dw5.At(o, i, 1 + s) += g * kt1v.At(r, s);
                dkt1.At(r, s) += g * w5v.At(o, i, 1 + s);
              }
            }
      } else {  // k == 1: out = kt2 * (kt1 row 1 applied to centered taps)
        for (int64_t o = 0; o < cout; ++o)
          for (int64_t i = 0; i < cin; ++i) {
            const double g = dy.At(o, i, 0);
            double mid = 0.0;
            for (int64_t s = 0; s < 3; ++s)
              mid += kt1v.At(1, s) * w5v.At(o, i, 1 + s);
            dkt2.At(0, 0) += g * mid;
            const double gk = g * kt2v.At(0, 0);
            for (int64_t s = 0; s < 3; ++s) {
              dw5.At(o, i, 1 + s) += gk * kt1v.At(1, s);
              dkt1.At(1, s) += gk * w5v.At(o, i, 1 + s);
            }
          }
      }
      if (t->Requires(w5)) t->Accum(w5, dw5);
      if (t->Requires(kt1)) t->Accum(kt1, dkt1);
      if (t->Requires(kt2)) t->Accum(kt2, dkt2);
    };
  }
  return out;
}

ValueId Tape::L2NormalizeRows(ValueId x) {
  const Tensor& xv = Value(x);
  Tensor y = nn::L2NormalizeRows(xv);
  const bool rg = Requires(x);
  ValueId out = Push(std::move(y), rg, nullptr);
  if (rg) {
    N(out).backprop = [x, out](Tape* t) {
      const Tensor& dy = t->Grad(out);
      const Tensor& xv = t->Value(x);
      const Tensor& yv = t->Value(out);
      const int64_t bsz = xv.Dim(0), f = xv.Dim(1);
      Tensor dx(xv.shape);
      for (int64_t bi = 0; bi < bsz; ++bi) {
        double sq = 0.0;
        for (int64_t i = 0; i < f; ++i) sq += xv.At(bi, i) * xv.At(bi, i);
        const double norm = std::max(std::sqrt(sq), 1e-12);
        double dot = 0.0;
        for (int64_t i = 0; i < f; ++i) dot += dy.At(bi, i) * yv.At(bi, i);
        for (int64_t i = 0; i < f; ++i)
          dx.At(bi, i) = (dy.At(bi, i) - yv.At(bi, i) * dot) / norm;
      }
      t->Accum(x, dx);
    };
  }
  return out;
}

ValueId Tape::AamMargin(ValueId cosines, const std::vector<int64_t>& labels,
                        double margin) {
  const Tensor& cv = Value(cosines);
  CheckRank(cv, 2, "AamMargin");
  const int64_t bsz = cv.Dim(0);
  Require(static_cast<int64_t>(labels.size()) == bsz,
          "AamMargin: one label per row required");
  const double cos_m = std::cos(margin), sin_m = std::sin(margin);
  const double clamp = 1.0 - 1e-7;
  Tensor y = cv;
  for (int64_t bi = 0; bi < bsz; ++bi) {
    const int64_t lab = labels[static_cast<size_t>(bi)];
    Require(lab >= 0 && lab < cv.Dim(1), "AamMargin: label out of range");
    double c = cv.At(bi, lab);
    if (c > clamp) c = clamp;
    if (c < -clamp) c = -clamp;
    const double s = std::sqrt(1.0 - c * c);
    y.At(bi, lab) = c * cos_m - s * sin_m;
  }
  const bool rg = Requires(cosines);
  ValueId out = Push(std::move(y), rg, nullptr);
  if (rg) {
    std::vector<int64_t> labs = labels;
    N(out).backprop = [cosines, out, labs, cos_m, sin_m, clamp](Tape* t) {
      const Tensor& dy = t->Grad(out);
      const Tensor& cv = t->Value(cosines);
      Tensor dx = dy;
      const int64_t bsz = cv.Dim(0);
      for (int64_t bi = 0; bi < bsz; ++bi) {
        const int64_t lab = labs[static_cast<size_t>(bi)];
        double c = cv.At(bi, lab);
        if (c > clamp) c = clamp;
        if (c < -clamp) c = -clamp;
        const double s = std::sqrt(1.0 - c * c);
        dx.At(bi, lab) = dy.At(bi, lab) * (cos_m + c * sin_m / s);
      }
      t->Accum(cosines, dx);
    };
  }
  return out;
}

ValueId Tape::CrossEntropy(ValueId logits, const std::vector<int64_t>& labels) {
  const Tensor& zv = Value(logits);
  CheckRank(zv, 2, "CrossEntropy");
  const int64_t bsz = zv.Dim(0), n = zv.Dim(1);
  Require(static_cast<int64_t>(labels.size()) == bsz,
          "CrossEntropy: one label per row required");
  double loss = 0.0;
  for (int64_t bi = 0; bi < bsz; ++bi) {
    const int64_t lab = labels[static_cast<size_t>(bi)];
    Require(lab >= 0 && lab < n, "CrossEntropy: label out of range");
    double mx = zv.At(bi, 0);
    for (int64_t j = 1; j < n; ++j) mx = std::max(mx, zv.At(bi, j));
    double z = 0.0;
    for (int64_t j = 0; j < n; ++j) z += std::exp(zv.At(bi, j) - mx);
    loss += mx + std::log(z) - zv.At(bi, lab);
  }
  loss /= static_cast<double>(bsz);
  const bool rg = Requires(logits);
  ValueId out = Push(Tensor::Scalar(loss), rg, nullptr);
  if (rg) {
    std::vector<int64_t> labs = labels;
    N(out).backprop = [logits, out, labs](Tape* t) {
      const double g = t->Grad(out).At(0);
      const Tensor& zv = t->Value(logits);
      const int64_t bsz = zv.Dim(0), n = zv.Dim(1);
      Tensor dz(zv.shape);
      const double scale = g / static_cast<double>(bsz);
      for (int64_t bi = 0; bi < bsz; ++bi) {
        double mx = zv.At(bi, 0);
        for (int64_t j = 1; j < n; ++j) mx = std::max(mx, zv.At(bi, j));
        double z = 0.0;
        for (int64_t j = 0; j < n; ++j) z += std::exp(zv.At(bi, j) - mx);
        for (int64_t j = 0; j < n; ++j) {
          double p = std::exp(zv.At(bi, j) - mx) / z;
          if (j == labs[static_cast<size_t>(bi)]) p -= 1.0;
          dz.At(bi, j) = scale * p;
        }
      }
      t->Accum(logits, dz);
    };
  }
  return out;
}

ValueId Tape::SumAll(ValueId x) {
  const Tensor& xv = Value(x);
  double s = 0.0;
  for (double v : xv.data) s += v;
  const bool rg = Requires(x);
  ValueId out = Push(Tensor::Scalar(s), rg, nullptr);
  if (rg) {
    N(out).backprop = [x, out](Tape* t) {
      const double g = t->Grad(out).At(0);
      Tensor dx(t->Value(x).shape);
      for (double& v : dx.data) v = g;
      t->Accum(x, dx);
    };
  }
  return out;
}

ValueId Tape::MeanAll(ValueId x) {
  const Tensor& xv = Value(x);
  double s = 0.0;
  for (double v : xv.data) s += v;
  const double n = static_cast<double>(xv.Numel());
  const bool rg = Requires(x);
  ValueId out = Push(Tensor::Scalar(s / n), rg, nullptr);
  if (rg) {
    N(out).backprop = [x, out, n](Tape* t) {
      const double g = t->Grad(out).At(0) / n;
      Tensor dx(t->Value(x).shape);
      for (double& v : dx.data) v = g;
      t->Accum(x, dx);
    };
  }
  return out;
}

void Tape::Backward(ValueId root) {
  Require(N(root).value.Numel() == 1, "Backward: root must be scalar");
  Require(N(root).requires_grad,
          "Backward: root does not depend on any differentiable leaf",
          ErrorKind::kState);
  Accum(root, Tensor::Scalar(1.0));
  for (int64_t i = root; i >= 0; --i) {
    Node& n = nodes_[static_cast<size_t>(i)];
    if (n.requires_grad && n.has_grad && n.backprop) n.backprop(this);
  }
}

void AdamStep(std::map<std::string, Tensor>* params,
              const std::map<std::string, Tensor>& grads,
              OptimizerState* state, double lr) {
  state->step += 1;
  const double t = static_cast<double>(state->step);
  const double bc1 = 1.0 - std::pow(state->beta1, t);
  const double bc2 = 1.0 - std::pow(state->beta2, t);
  for (const auto& [name, g] : grads) {
    auto pit = params->find(name);
    Require(pit != params->end(), "AdamStep: unknown parameter " + name);
    Tensor& p = pit->second;
    Require(p.data.size() == g.data.size(),
            "AdamStep: gradient shape mismatch for " + name);
    Tensor& m = state->m.try_emplace(name, Tensor(p.shape)).first->second;
    Tensor& v = state->v.try_emplace(name, Tensor(p.shape)).first->second;
    for (size_t i = 0; i < p.data.size(); ++i) {
      m.data[i] = state->beta1 * m.data[i] + (1.0 - state->beta1) * g.data[i];
      v.data[i] =
          state->beta2 * v.data[i] + (1.0 - state->beta2) * g.data[i] * g.data[i];
      const double mh = m.data[i] / bc1;
      const double vh = v.data[i] / bc2;
      p.data[i] -= lr * mh / (std::sqrt(vh) + state->eps);
    }
  }
}

}  // namespace ad
}  // namespace tdnas
