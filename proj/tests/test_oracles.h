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

// Reference implementations the tests compare the library against.  These are
// deliberately written from scratch in the plainest possible style (quadratic
// loops, rescans per threshold, bisection instead of closed forms) so that a
// shared mistake with the library is unlikely.

#ifndef TDNAS_TESTS_TEST_ORACLES_H_
#define TDNAS_TESTS_TEST_ORACLES_H_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <set>
#include <vector>

#include "tensor.h"

namespace tdnas {
namespace oracles {

// Same-padding 1-D convolution, direct definition: for every output element,
// walk the taps and skip those that fall off the input.
inline Tensor NaiveConv1dSame(const Tensor& x, const Tensor& w,
                              const Tensor& b, int64_t dilation,
                              int64_t groups) {
  const int64_t B = x.Dim(0), T = x.Dim(2);
  const int64_t Cout = w.Dim(0), Cg = w.Dim(1), K = w.Dim(2);
  const int64_t pad = dilation * (K - 1) / 2;
  const int64_t out_per_group = Cout / groups;
  Tensor y({B, Cout, T});
  for (int64_t n = 0; n < B; ++n) {
    for (int64_t o = 0; o < Cout; ++o) {
      const int64_t g = o / out_per_group;
      for (int64_t t = 0; t < T; ++t) {
        double acc = b.data.empty() ? 0.0 : b.At(o);
        for (int64_t ci = 0; ci < Cg; ++ci) {
          for (int64_t k = 0; k < K; ++k) {
            const int64_t src = t - pad + k * dilation;
            if (src < 0 || src >= T) continue;
            acc += w.At(o, ci, k) * x.At(n, g * Cg + ci, src);
          }
        }
        y.At(n, o, t) = acc;
      }
    }
  }
  return y;
}

inline Tensor NaiveLinear(const Tensor& x, const Tensor& w, const Tensor& b) {
  const int64_t B = x.Dim(0), F = x.Dim(1), O = w.Dim(0);
  Tensor y({B, O});
  for (int64_t n = 0; n < B; ++n) {
    for (int64_t o = 0; o < O; ++o) {
      double acc = b.data.empty() ? 0.0 : b.At(o);
      for (int64_t f = 0; f < F; ++f) acc += x.At(n, f) * w.At(o, f);
      y.At(n, o) = acc;
    }
  }
  return y;
}

// Central finite difference of a scalar function of one tensor coordinate.
inline double CentralDiff(const std::function<double()>& f, double* coord) {
  const double x0 = *coord;
  const double h = 1e-5 * std::max(1.0, std::fabs(x0));
  *coord = x0 + h;
  const double fp = f();
  *coord = x0 - h;
  const double fm = f();
  *coord = x0;
  return (fp - fm) / (2.0 * h);
}

// Relative gradient error with an absolute floor.
inline double GradRelErr(double analytic, double numeric) {
  const double scale = std::max({1e-3, std::fabs(analytic), std::fabs(numeric)});
  return std::fabs(analytic - numeric) / scale;
}

// Detector with accept-if-score >= threshold.  False-accept and false-reject
// rates by plain recounting.
inline void CountRates(const std::vector<double>& target,
                       const std::vector<double>& nontarget, double threshold,
                       double* fa, double* fr) {
  int64_t n_fa = 0, n_fr = 0;
  for (double s : nontarget)
    if (s >= threshold) ++n_fa;
  for (double s : target)
    if (s < threshold) ++n_fr;
  *fa = static_cast<double>(n_fa) / static_cast<double>(nontarget.size());
  *fr = static_cast<double>(n_fr) / static_cast<double>(target.size());
}

// Equal error rate on the polyline of operating points, located by bisection
// on the bracketing segment instead of solving the linear crossing directly.
inline double NaiveEer(const std::vector<double>& target,
                       const std::vector<double>& nontarget) {
  std::set<double> distinct(target.begin(), target.end());
  distinct.insert(nontarget.begin(), nontarget.end());
  std::vector<double> fas, frs;
  {
    // Thresholds from "accept everything" through every score to "accept
    // nothing".
    double fa, fr;
    CountRates(target, nontarget, -std::numeric_limits<double>::infinity(),
               &fa, &fr);
    fas.push_back(fa);
    frs.push_back(fr);
    for (double t : distinct) {
      CountRates(target, nontarget, t, &fa, &fr);
      fas.push_back(fa);
      frs.push_back(fr);
    }
    CountRates(target, nontarget, std::numeric_limits<double>::infinity(), &fa,
               &fr);
    fas.push_back(fa);
    frs.push_back(fr);
  }
  for (size_t i = 0; i + 1 < fas.size(); ++i) {
    const double d0 = fas[i] - frs[i];
    const double d1 = fas[i + 1] - frs[i + 1];
    if (d0 == 0.0) return fas[i];
    if (d0 > 0.0 && d1 <= 0.0) {
      double lo = 0.0, hi = 1.0;
      for (int iter = 0; iter < 80; ++iter) {
        const double mid = 0.5 * (lo + hi);
        const double fa = fas[i] + mid * (fas[i + 1] - fas[i]);
        const double fr = frs[i] + mid * (frs[i + 1] - frs[i]);
        if (fa - fr > 0.0) {
          lo = mid;
        } else {
          hi = mid;
        }
      }
      const double mid = 0.5 * (lo + hi);
      const double fa = fas[i] + mid * (fas[i + 1] - fas[i]);
      const double fr = frs[i] + mid * (frs[i + 1] - frs[i]);
      return 0.5 * (fa + fr);
    }
  }
  return fas.back() == frs.back() ? fas.back() : 0.0;
}

// Minimum normalized detection cost by rescanning every score, midpoints
// between adjacent distinct scores, and both extremes.
inline double NaiveMinDcf(const std::vector<double>& target,
                          const std::vector<double>& nontarget,
                          double p_target, double c_miss, double c_fa) {
  std::set<double> distinct(target.begin(), target.end());
  distinct.insert(nontarget.begin(), nontarget.end());
  std::vector<double> thresholds(distinct.begin(), distinct.end());
  std::vector<double> probe;
  probe.push_back(thresholds.front() - 1.0);
  for (size_t i = 0; i < thresholds.size(); ++i) {
    probe.push_back(thresholds[i]);
    if (i + 1 < thresholds.size())
      probe.push_back(0.5 * (thresholds[i] + thresholds[i + 1]));
  }
  probe.push_back(thresholds.back() + 1.0);
  double best = std::numeric_limits<double>::infinity();
  for (double t : probe) {
    double fa, fr;
    CountRates(target, nontarget, t, &fa, &fr);
    const double dcf = c_miss * p_target * fr + c_fa * (1.0 - p_target) * fa;
    best = std::min(best, dcf);
  }
  return best / std::min(c_miss * p_target, c_fa * (1.0 - p_target));
}

// Rank correlation recomputed from first principles: average ranks by
// scanning for equal values, then a plain Pearson correlation of the ranks.
inline double NaiveSpearman(const std::vector<double>& xs,
                            const std::vector<double>& ys) {
  const size_t n = xs.size();
  auto ranks = [n](const std::vector<double>& v) {
    std::vector<double> r(n);
    for (size_t i = 0; i < n; ++i) {
      double below = 0, equal = 0;
      for (size_t j = 0; j < n; ++j) {
        if (v[j] < v[i]) ++below;
        if (v[j] == v[i]) ++equal;
      }
      r[i] = below + 0.5 * (equal + 1.0);
    }
    return r;
  };
  const std::vector<double> rx = ranks(xs), ry = ranks(ys);
  double mx = 0, my = 0;
  for (size_t i = 0; i < n; ++i) {
    mx += rx[i];
    my += ry[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double num = 0, dx = 0, dy = 0;
  for (size_t i = 0; i < n; ++i) {
    num += (rx[i] - mx) * (ry[i] - my);
    dx += (rx[i] - mx) * (rx[i] - mx);
    dy += (ry[i] - my) * (ry[i] - my);
  }
  return num / std::sqrt(dx * dy);
}

// One Adam step on a single scalar, straight from the update equations.
struct ScalarAdam {
  double m = 0, v = 0;
  int64_t t = 0;

  double Step(double x, double g, double lr, double beta1 = 0.9,
              double beta2 = 0.999, double eps = 1e-8) {
    t += 1;
    m = beta1 * m + (1.0 - beta1) * g;
    v = beta2 * v + (1.0 - beta2) * g * g;
    const double mhat = m / (1.0 - std::pow(beta1, static_cast<double>(t)));
    const double vhat = v / (1.0 - std::pow(beta2, static_cast<double>(t)));
    return x - lr * mhat / (std::sqrt(vhat) + eps);
  }
};

}  // namespace oracles
}  // namespace tdnas

#endif  // TDNAS_TESTS_TEST_ORACLES_H_
