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

#include "nn_kernels.h"

#include <cmath>

namespace tdnas {
namespace nn {

namespace {

// Copies one channel row into a zero-padded buffer so the convolution inner
// loop is branch free and performs exactly K multiplies per output frame.
void PadRow(const double* src, int64_t t, int64_t pad, std::vector<double>* out) {
  out->assign(static_cast<size_t>(t + 2 * pad), 0.0);
  for (int64_t i = 0; i < t; ++i) (*out)[static_cast<size_t>(pad + i)] = src[i];
}

}  // namespace

Tensor Conv1dSame(const Tensor& x, const Tensor& w, const Tensor& b,
                  int64_t dilation, int64_t groups, CostMeter* meter) {
  CheckRank(x, 3, "Conv1dSame input");
  CheckRank(w, 3, "Conv1dSame weight");
  const int64_t bsz = x.Dim(0), cin = x.Dim(1), t = x.Dim(2);
  const int64_t cout = w.Dim(0), cin_g = w.Dim(1), k = w.Dim(2);
  Require(k % 2 == 1, "Conv1dSame: kernel size must be odd");
  Require(groups >= 1 && cin % groups == 0 && cout % groups == 0,
          "Conv1dSame: channel counts not divisible by groups");
  Require(cin_g == cin / groups, "Conv1dSame: weight shape mismatch");
  Require(b.data.empty() || (b.Rank() == 1 && b.Dim(0) == cout),
          "Conv1dSame: bias shape mismatch");
  Require(dilation >= 1, "Conv1dSame: dilation must be >= 1");

  const int64_t pad = dilation * (k - 1) / 2;
  Tensor y({bsz, cout, t});
  std::vector<double> row;
  std::vector<double> acc(static_cast<size_t>(t));
  const int64_t cout_g = cout / groups;
  for (int64_t bi = 0; bi < bsz; ++bi) {
    for (int64_t oc = 0; oc < cout; ++oc) {
      const int64_t g = oc / cout_g;
      const double bias = b.data.empty() ? 0.0 : b.At(oc);
      for (int64_t i = 0; i < t; ++i) acc[static_cast<size_t>(i)] = bias;
      for (int64_t ic = 0; ic < cin_g; ++ic) {
        const int64_t src_c = g * cin_g + ic;
        PadRow(&x.data[static_cast<size_t>((bi * cin + src_c) * t)], t, pad,
               &row);
        for (int64_t kk = 0; kk < k; ++kk) {
          const double wv = w.At(oc, ic, kk);
          const double* xp = row.data() + kk * dilation;
          for (int64_t i = 0; i < t; ++i) acc[static_cast<size_t>(i)] += wv * xp[i];
        }
      }
      double* yp = &y.data[static_cast<size_t>((bi * cout + oc) * t)];
      for (int64_t i = 0; i < t; ++i) yp[i] = acc[static_cast<size_t>(i)];
    }
  }
  if (meter) meter->macs += bsz * cout * cin_g * k * t;
  return y;
}

Tensor Conv1dSameGradInput(const Tensor& dy, const Tensor& w,
                           const std::vector<int64_t>& x_shape,
                           int64_t dilation, int64_t groups) {
  const int64_t bsz = x_shape[0], cin = x_shape[1], t = x_shape[2];
  const int64_t cout = dy.Dim(1), cin_g = w.Dim(1), k = w.Dim(2);
  const int64_t pad = dilation * (k - 1) / 2;
  const int64_t cout_g = cout / groups;
  Tensor dx(x_shape);
  std::vector<double> padded(static_cast<size_t>(t + 2 * pad));
  for (int64_t bi = 0; bi < bsz; ++bi) {
    for (int64_t ic = 0; ic < cin; ++ic) {
      const int64_t g = ic / cin_g;
      const int64_t ic_local = ic % cin_g;
      std::fill(padded.begin(), padded.end(), 0.0);
      for (int64_t oc = g * cout_g; oc < (g + 1) * cout_g; ++oc) {
        const double* dyp = &dy.data[static_cast<size_t>((bi * cout + oc) * t)];
        for (int64_t kk = 0; kk < k; ++kk) {
          const double wv = w.At(oc, ic_local, kk);
          double* pp = padded.data() + kk * dilation;
          for (int64_t i = 0; i < t; ++i) pp[i] += wv * dyp[i];
        }
      }
      double* dxp = &dx.data[static_cast<size_t>((bi * cin + ic) * t)];
      for (int64_t i = 0; i < t; ++i) dxp[i] = padded[static_cast<size_t>(pad + i)];
    }
  }
  return dx;
}

void Conv1dSameGradParams(const Tensor& dy, const Tensor& x, const Tensor& w,
                          int64_t dilation, int64_t groups, Tensor* dw,
                          Tensor* db) {
  const int64_t bsz = x.Dim(0), cin = x.Dim(1), t = x.Dim(2);
  const int64_t cout = dy.Dim(1), cin_g = w.Dim(1), k = w.Dim(2);
  const int64_t pad = dilation * (k - 1) / 2;
  const int64_t cout_g = cout / groups;
  *dw = Tensor(w.shape);
  if (db) *db = Tensor({cout});
  std::vector<double> row;
  for (int64_t bi = 0; bi < bsz; ++bi) {
    for (int64_t oc = 0; oc < cout; ++oc) {
      const int64_t g = oc / cout_g;
      const double* dyp = &dy.data[static_cast<size_t>((bi * cout + oc) * t)];
      if (db) {
        double s = 0.0;
        for (int64_t i = 0; i < t; ++i) s += dyp[i];
        db->At(oc) += s;
      }
      for (int64_t ic = 0; ic < cin_g; ++ic) {
        const int64_t src_c = g * cin_g + ic;
        PadRow(&x.data[static_cast<size_t>((bi * cin + src_c) * t)], t, pad,
               &row);
        for (int64_t kk = 0; kk < k; ++kk) {
          const double* xp = row.data() + kk * dilation;
          double s = 0.0;
          for (int64_t i = 0; i < t; ++i) s += dyp[i] * xp[i];
          dw->At(oc, ic, kk) += s;
        }
      }
    }
  }
}

Tensor Linear(const Tensor& x, const Tensor& w, const Tensor& b,
              CostMeter* meter) {
  CheckRank(x, 2, "Linear input");
  CheckRank(w, 2, "Linear weight");
  const int64_t bsz = x.Dim(0), fin = x.Dim(1), fout = w.Dim(0);
  Require(w.Dim(1) == fin, "Linear: weight shape mismatch");
  Require(b.data.empty() || (b.Rank() == 1 && b.Dim(0) == fout),
          "Linear: bias shape mismatch");
  Tensor y({bsz, fout});
  for (int64_t bi = 0; bi < bsz; ++bi) {
    for (int64_t o = 0; o < fout; ++o) {
      double acc = b.data.empty() ? 0.0 : b.At(o);
      const double* xp = &x.data[static_cast<size_t>(bi * fin)];
      const double* wp = &w.data[static_cast<size_t>(o * fin)];
      for (int64_t i = 0; i < fin; ++i) acc += wp[i] * xp[i];
      y.At(bi, o) = acc;
    }
  }
  if (meter) meter->macs += bsz * fout * fin;
  return y;
}

void BatchMoments(const Tensor& x, Tensor* mean, Tensor* var,
                  Tensor* var_unbiased) {
  Require(x.Rank() == 2 || x.Rank() == 3, "BatchMoments: rank must be 2 or 3");
  const int64_t bsz = x.Dim(0), c = x.Dim(1);
  const int64_t t = x.Rank() == 3 ? x.Dim(2) : 1;
  const int64_t n = bsz * t;
  Require(n >= 1, "BatchMoments: empty reduction");
  *mean = Tensor({c});
  *var = Tensor({c});
  if (var_unbiased) *var_unbiased = Tensor({c});
  for (int64_t ci = 0; ci < c; ++ci) {
    double s = 0.0;
    for (int64_t bi = 0; bi < bsz; ++bi) {
      const double* xp = &x.data[static_cast<size_t>((bi * c + ci) * t)];
      for (int64_t i = 0; i < t; ++i) s += xp[i];
    }
    const double m = s / static_cast<double>(n);
    double sq = 0.0;
    for (int64_t bi = 0; bi < bsz; ++bi) {
      const double* xp = &x.data[static_cast<size_t>((bi * c + ci) * t)];
      for (int64_t i = 0; i < t; ++i) {
        const double d = xp[i] - m;
        sq += d * d;
      }
    }
    mean->At(ci) = m;
    var->At(ci) = sq / static_cast<double>(n);
    if (var_unbiased) {
      var_unbiased->At(ci) =
          n > 1 ? sq / static_cast<double>(n - 1) : sq / static_cast<double>(n);
    }
  }
}

Tensor BnApply(const Tensor& x, const Tensor& gamma, const Tensor& beta,
               const Tensor& mean, const Tensor& var, double eps) {
  Require(x.Rank() == 2 || x.Rank() == 3, "BnApply: rank must be 2 or 3");
  const int64_t bsz = x.Dim(0), c = x.Dim(1);
  const int64_t t = x.Rank() == 3 ? x.Dim(2) : 1;
  Require(gamma.Numel() == c && beta.Numel() == c && mean.Numel() == c &&
              var.Numel() == c,
          "BnApply: parameter length mismatch");
  Tensor y(x.shape);
  for (int64_t ci = 0; ci < c; ++ci) {
    const double inv = 1.0 / std::sqrt(var.At(ci) + eps);
    const double g = gamma.At(ci), m = mean.At(ci), be = beta.At(ci);
    for (int64_t bi = 0; bi < bsz; ++bi) {
      const double* xp = &x.data[static_cast<size_t>((bi * c + ci) * t)];
      double* yp = &y.data[static_cast<size_t>((bi * c + ci) * t)];
      for (int64_t i = 0; i < t; ++i) yp[i] = g * (xp[i] - m) * inv + be;
    }
  }
  return y;
}

Tensor Relu(const Tensor& x) {
  Tensor y(x.shape);
  for (size_t i = 0; i < x.data.size(); ++i)
    y.data[i] = x.data[i] > 0.0 ? x.data[i] : 0.0;
  return y;
}

Tensor TanhT(const Tensor& x) {
  Tensor y(x.shape);
  for (size_t i = 0; i < x.data.size(); ++i) y.data[i] = std::tanh(x.data[i]);
  return y;
}

Tensor SigmoidT(const Tensor& x) {
  Tensor y(x.shape);
  for (size_t i = 0; i < x.data.size(); ++i)
    y.data[i] = 1.0 / (1.0 + std::exp(-x.data[i]));
  return y;
}

Tensor MeanTime(const Tensor& x) {
  CheckRank(x, 3, "MeanTime");
  const int64_t bsz = x.Dim(0), c = x.Dim(1), t = x.Dim(2);
  Tensor y({bsz, c});
  for (int64_t bi = 0; bi < bsz; ++bi) {
    for (int64_t ci = 0; ci < c; ++ci) {
      const double* xp = &x.data[static_cast<size_t>((bi * c + ci) * t)];
      double s = 0.0;
      for (int64_t i = 0; i < t; ++i) s += xp[i];
      y.At(bi, ci) = s / static_cast<double>(t);
    }
  }
  return y;
}

Tensor BroadcastMulTime(const Tensor& x, const Tensor& s, CostMeter* meter) {
  CheckRank(x, 3, "BroadcastMulTime input");
  CheckRank(s, 2, "BroadcastMulTime gate");
  const int64_t bsz = x.Dim(0), c = x.Dim(1), t = x.Dim(2);
  Require(s.Dim(0) == bsz && s.Dim(1) == c, "BroadcastMulTime: shape mismatch");
  Tensor y(x.shape);
  for (int64_t bi = 0; bi < bsz; ++bi) {
    for (int64_t ci = 0; ci < c; ++ci) {
      const double g = s.At(bi, ci);
      const double* xp = &x.data[static_cast<size_t>((bi * c + ci) * t)];
      double* yp = &y.data[static_cast<size_t>((bi * c + ci) * t)];
      for (int64_t i = 0; i < t; ++i) yp[i] = g * xp[i];
    }
  }
  if (meter) meter->macs += bsz * c * t;
  return y;
}

Tensor SoftmaxTime(const Tensor& x) {
  CheckRank(x, 3, "SoftmaxTime");
  const int64_t bsz = x.Dim(0), c = x.Dim(1), t = x.Dim(2);
  Tensor y(x.shape);
  for (int64_t bi = 0; bi < bsz; ++bi) {
    for (int64_t ci = 0; ci < c; ++ci) {
      const double* xp = &x.data[static_cast<size_t>((bi * c + ci) * t)];
      double* yp = &y.data[static_cast<size_t>((bi * c + ci) * t)];
      double mx = xp[0];
      for (int64_t i = 1; i < t; ++i) mx = std::max(mx, xp[i]);
      double z = 0.0;
      for (int64_t i = 0; i < t; ++i) {
        yp[i] = std::exp(xp[i] - mx);
        z += yp[i];
      }
      for (int64_t i = 0; i < t; ++i) yp[i] /= z;
    }
  }
  return y;
}

Tensor WeightedStats(const Tensor& x, const Tensor& alpha, double eps,
                     CostMeter* meter) {
  CheckRank(x, 3, "WeightedStats input");
  Require(x.SameShape(alpha), "WeightedStats: alpha shape mismatch");
  const int64_t bsz = x.Dim(0), c = x.Dim(1), t = x.Dim(2);
  Tensor y({bsz, 2 * c});
  for (int64_t bi = 0; bi < bsz; ++bi) {
    for (int64_t ci = 0; ci < c; ++ci) {
      const double* xp = &x.data[static_cast<size_t>((bi * c + ci) * t)];
      const double* ap = &alpha.data[static_cast<size_t>((bi * c + ci) * t)];
      double mu = 0.0, m2 = 0.0;
      for (int64_t i = 0; i < t; ++i) {
        mu += ap[i] * xp[i];
        const double sq = xp[i] * xp[i];
        m2 += ap[i] * sq;
      }
      double v = m2 - mu * mu;
      if (v < 0.0) v = 0.0;
      y.At(bi, ci) = mu;
      y.At(bi, c + ci) = std::sqrt(v + eps);
    }
  }
  if (meter) meter->macs += bsz * (3 * c * t + c);
  return y;
}

Tensor TransformKernel(const Tensor& w5, const Tensor& kt1, const Tensor& kt2,
                       int64_t k) {
  CheckRank(w5, 3, "TransformKernel weight");
  Require(w5.Dim(2) == 5, "TransformKernel: stored kernel must have 5 taps");
  Require(k == 1 || k == 3 || k == 5, "TransformKernel: k must be 1, 3 or 5");
  const int64_t cout = w5.Dim(0), cin = w5.Dim(1);
  if (k == 5) return w5;
  Require(kt1.Rank() == 2 && kt1.Dim(0) == 3 && kt1.Dim(1) == 3,
          "TransformKernel: kt1 must be 3x3");
  Tensor w3({cout, cin, 3});
  for (int64_t o = 0; o < cout; ++o) {
    for (int64_t i = 0; i < cin; ++i) {
      for (int64_t r = 0; r < 3; ++r) {
        double acc = 0.0;
        for (int64_t s = 0; s < 3; ++s) acc += kt1.At(r, s) * w5.At(o, i, 1 + s);
        w3.At(o, i, r) = acc;
      }
    }
  }
  if (k == 3) return w3;
  Require(kt2.Rank() == 2 && kt2.Dim(0) == 1 && kt2.Dim(1) == 1,
          "TransformKernel: kt2 must be 1x1");
  Tensor w1({cout, cin, 1});
  for (int64_t o = 0; o < cout; ++o)
    for (int64_t i = 0; i < cin; ++i)
      w1.At(o, i, 0) = kt2.At(0, 0) * w3.At(o, i, 1);
  return w1;
}

Tensor IndexSelect(const Tensor& x, int axis, const std::vector<int64_t>& idx) {
  Require(axis >= 0 && axis < x.Rank(), "IndexSelect: axis out of range");
  for (int64_t i : idx)
    Require(i >= 0 && i < x.Dim(axis), "IndexSelect: index out of range");
  std::vector<int64_t> shape = x.shape;
  shape[static_cast<size_t>(axis)] = static_cast<int64_t>(idx.size());
  Tensor y(shape);
  int64_t outer = 1, inner = 1;
  for (int a = 0; a < axis; ++a) outer *= x.Dim(a);
  for (int a = axis + 1; a < x.Rank(); ++a) inner *= x.Dim(a);
  const int64_t n_sel = static_cast<int64_t>(idx.size());
  for (int64_t o = 0; o < outer; ++o) {
    for (int64_t s = 0; s < n_sel; ++s) {
      const double* src =
          &x.data[static_cast<size_t>((o * x.Dim(axis) + idx[static_cast<size_t>(s)]) * inner)];
      double* dst = &y.data[static_cast<size_t>((o * n_sel + s) * inner)];
      for (int64_t i = 0; i < inner; ++i) dst[i] = src[i];
    }
  }
  return y;
}

Tensor ConcatChannels(const std::vector<const Tensor*>& xs) {
  Require(!xs.empty(), "ConcatChannels: empty input list");
  const int64_t bsz = xs[0]->Dim(0), t = xs[0]->Dim(2);
  int64_t c_total = 0;
  for (const Tensor* x : xs) {
    CheckRank(*x, 3, "ConcatChannels input");
    Require(x->Dim(0) == bsz && x->Dim(2) == t,
            "ConcatChannels: mismatched batch or frame count");
    c_total += x->Dim(1);
  }
  Tensor y({bsz, c_total, t});
  for (int64_t bi = 0; bi < bsz; ++bi) {
    int64_t c_off = 0;
    for (const Tensor* x : xs) {
      const int64_t c = x->Dim(1);
      const double* src = &x->data[static_cast<size_t>(bi * c * t)];
      double* dst = &y.data[static_cast<size_t>((bi * c_total + c_off) * t)];
      for (int64_t i = 0; i < c * t; ++i) dst[i] = src[i];
      c_off += c;
    }
  }
  return y;
}

Tensor ConcatCols(const std::vector<const Tensor*>& xs) {
  Require(!xs.empty(), "ConcatCols: empty input list");
  const int64_t bsz = xs[0]->Dim(0);
  int64_t f_total = 0;
  for (const Tensor* x : xs) {
    CheckRank(*x, 2, "ConcatCols input");
    Require(x->Dim(0) == bsz, "ConcatCols: mismatched batch");
    f_total += x->Dim(1);
  }
  Tensor y({bsz, f_total});
  for (int64_t bi = 0; bi < bsz; ++bi) {
    int64_t off = 0;
    for (const Tensor* x : xs) {
      const int64_t f = x->Dim(1);
      for (int64_t i = 0; i < f; ++i) y.At(bi, off + i) = x->At(bi, i);
      off += f;
    }
  }
  return y;
}

Tensor L2NormalizeRows(const Tensor& x, double tiny) {
  CheckRank(x, 2, "L2NormalizeRows");
  const int64_t bsz = x.Dim(0), f = x.Dim(1);
  Tensor y(x.shape);
  for (int64_t bi = 0; bi < bsz; ++bi) {
    double sq = 0.0;
    for (int64_t i = 0; i < f; ++i) sq += x.At(bi, i) * x.At(bi, i);
    const double inv = 1.0 / std::max(std::sqrt(sq), tiny);
    for (int64_t i = 0; i < f; ++i) y.At(bi, i) = x.At(bi, i) * inv;
  }
  return y;
}

}  // namespace nn
}  // namespace tdnas
