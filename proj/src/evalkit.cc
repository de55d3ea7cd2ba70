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

#include "evalkit.h"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace tdnas {
namespace evalkit {

std::vector<Trial> ParseTrialList(const std::string& text) {
  std::vector<Trial> trials;
  std::istringstream is(text);
  std::string line;
  int64_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ls(line);
    Trial t;
    if (!(ls >> t.label >> t.id_a >> t.id_b) || (t.label != 0 && t.label != 1))
      Fail(ErrorKind::kCorrupt,
           "trial list line " + std::to_string(line_no) +
               ": expected \"label id_a id_b\" with label 0 or 1");
    trials.push_back(std::move(t));
  }
  return trials;
}

std::string FormatTrialList(const std::vector<Trial>& trials) {
  std::ostringstream os;
  for (const Trial& t : trials)
    os << t.label << " " << t.id_a << " " << t.id_b << "\n";
  return os.str();
}

std::vector<ScoredPair> ParseScores(const std::string& text) {
  std::vector<ScoredPair> out;
  std::istringstream is(text);
  std::string line;
  int64_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ls(line);
    ScoredPair p;
    if (!(ls >> p.id_a >> p.id_b >> p.score))
      Fail(ErrorKind::kCorrupt, "score file line " + std::to_string(line_no) +
                                    ": expected \"id_a id_b score\"");
    out.push_back(std::move(p));
  }
  return out;
}

std::string FormatScores(const std::vector<ScoredPair>& scores) {
  std::ostringstream os;
  for (const ScoredPair& p : scores)
    os << p.id_a << " " << p.id_b << " " << FormatDouble(p.score) << "\n";
  return os.str();
}

namespace {

// False-accept and false-reject fractions at every operating point, ordered
// by increasing threshold.  Includes the two all-accept / all-reject ends.
void OperatingPoints(const std::vector<double>& targets,
                     const std::vector<double>& nontargets,
                     std::vector<double>* fa, std::vector<double>* fr) {
  Require(!targets.empty() && !nontargets.empty(),
          "metrics need at least one target and one nontarget score",
          ErrorKind::kValidation);
  std::vector<double> tar = targets, non = nontargets;
  std::sort(tar.begin(), tar.end());
  std::sort(non.begin(), non.end());
  std::set<double> thr_set(tar.begin(), tar.end());
  thr_set.insert(non.begin(), non.end());
  const double n_tar = static_cast<double>(tar.size());
  const double n_non = static_cast<double>(non.size());
  fa->clear();
  fr->clear();
  fa->push_back(1.0);
  fr->push_back(0.0);
  for (double thr : thr_set) {
    const auto non_ge = non.end() - std::lower_bound(non.begin(), non.end(), thr);
    const auto tar_lt = std::lower_bound(tar.begin(), tar.end(), thr) - tar.begin();
    fa->push_back(static_cast<double>(non_ge) / n_non);
    fr->push_back(static_cast<double>(tar_lt) / n_tar);
  }
  fa->push_back(0.0);
  fr->push_back(1.0);
}

}  // namespace

double ComputeEer(const std::vector<double>& target_scores,
                  const std::vector<double>& nontarget_scores) {
  std::vector<double> fa, fr;
  OperatingPoints(target_scores, nontarget_scores, &fa, &fr);
  // d = fa - fr decreases from +1 to -1; find the bracketing segment and
  // solve the linear crossing on it.
  for (size_t i = 0; i + 1 < fa.size(); ++i) {
    const double d0 = fa[i] - fr[i];
    const double d1 = fa[i + 1] - fr[i + 1];
    if (d0 >= 0.0 && d1 <= 0.0) {
      if (d0 == d1) return fa[i];
      const double lambda = d0 / (d0 - d1);
      return fa[i] + lambda * (fa[i + 1] - fa[i]);
    }
  }
  Fail(ErrorKind::kInternal, "ComputeEer: no crossing found");
}

double ComputeMinDcf(const std::vector<double>& target_scores,
                     const std::vector<double>& nontarget_scores,
                     double p_target, double c_miss, double c_fa) {
  Require(p_target > 0.0 && p_target < 1.0, "ComputeMinDcf: bad p_target");
  Require(c_miss > 0.0 && c_fa > 0.0, "ComputeMinDcf: costs must be positive");
  std::vector<double> fa, fr;
  OperatingPoints(target_scores, nontarget_scores, &fa, &fr);
  const double w_miss = c_miss * p_target;
  const double w_fa = c_fa * (1.0 - p_target);
  double best = w_miss * fr[0] + w_fa * fa[0];
  for (size_t i = 1; i < fa.size(); ++i)
    best = std::min(best, w_miss * fr[i] + w_fa * fa[i]);
  return best / std::min(w_miss, w_fa);
}

double SNormScore(double raw, const std::vector<double>& enroll_cohort,
                  const std::vector<double>& test_cohort, int64_t top_k) {
  Require(top_k >= 1, "SNormScore: top_k must be positive");
  auto z = [&](const std::vector<double>& cohort) {
    Require(!cohort.empty(), "SNormScore: empty cohort",
            ErrorKind::kValidation);
    std::vector<double> c = cohort;
    const size_t k = std::min<size_t>(static_cast<size_t>(top_k), c.size());
    std::partial_sort(c.begin(), c.begin() + static_cast<int64_t>(k), c.end(),
                      std::greater<double>());
    double mean = 0.0;
    for (size_t i = 0; i < k; ++i) mean += c[i];
    mean /= static_cast<double>(k);
    double var = 0.0;
    for (size_t i = 0; i < k; ++i) var += (c[i] - mean) * (c[i] - mean);
    double sd = std::sqrt(var / static_cast<double>(k));
    if (sd < 1e-12) sd = 1e-12;
    return (raw - mean) / sd;
  };
  return 0.5 * (z(enroll_cohort) + z(test_cohort));
}

namespace {

std::vector<double> AverageRanks(const std::vector<double>& xs) {
  const size_t n = xs.size();
  std::vector<size_t> order(n);
  for (size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&xs](size_t a, size_t b) { return xs[a] < xs[b]; });
  std::vector<double> ranks(n);
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    while (j + 1 < n && xs[order[j + 1]] == xs[order[i]]) ++j;
    // 1-based ranks i+1..j+1 share their average.
    const double avg = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

double Spearman(const std::vector<double>& xs, const std::vector<double>& ys) {
  Require(xs.size() == ys.size(), "Spearman: length mismatch");
  Require(xs.size() >= 2, "Spearman: need at least two points");
  const std::vector<double> rx = AverageRanks(xs);
  const std::vector<double> ry = AverageRanks(ys);
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (size_t i = 0; i < xs.size(); ++i) {
    mx += rx[i];
    my += ry[i];
  }
  mx /= n;
  my /= n;
  double cov = 0.0, vx = 0.0, vy = 0.0;
  for (size_t i = 0; i < xs.size(); ++i) {
    cov += (rx[i] - mx) * (ry[i] - my);
    vx += (rx[i] - mx) * (rx[i] - mx);
    vy += (ry[i] - my) * (ry[i] - my);
  }
  Require(vx > 0.0 && vy > 0.0, "Spearman: constant input has no rank order",
          ErrorKind::kValidation);
  return cov / std::sqrt(vx * vy);
}

std::vector<int64_t> SegmentStarts(int64_t utt_frames, int64_t segment_frames,
                                   int n_segments) {
  Require(utt_frames >= 1 && segment_frames >= 1 && n_segments >= 1,
          "SegmentStarts: sizes must be positive");
  std::vector<int64_t> starts;
  if (n_segments == 1) {
    starts.push_back(0);
    return starts;
  }
  if (utt_frames >= segment_frames) {
    const double span = static_cast<double>(utt_frames - segment_frames);
    for (int i = 0; i < n_segments; ++i)
      starts.push_back(static_cast<int64_t>(
          std::floor(span * i / static_cast<double>(n_segments - 1))));
  } else {
    for (int i = 0; i < n_segments; ++i)
      starts.push_back(utt_frames * i / n_segments);
  }
  return starts;
}

Tensor ExtractSegment(const Tensor& utt, int64_t start, int64_t frames) {
  CheckRank(utt, 2, "ExtractSegment");
  const int64_t c = utt.Dim(0), t = utt.Dim(1);
  Require(start >= 0, "ExtractSegment: negative start");
  Tensor seg({c, frames});
  for (int64_t ci = 0; ci < c; ++ci)
    for (int64_t i = 0; i < frames; ++i)
      seg.At(ci, i) = utt.At(ci, (start + i) % t);
  return seg;
}

double CosineSimilarity(const std::vector<double>& a,
                        const std::vector<double>& b) {
  Require(a.size() == b.size() && !a.empty(), "CosineSimilarity: bad inputs");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  const double denom = std::max(std::sqrt(na) * std::sqrt(nb), 1e-12);
  return dot / denom;
}

double ScoreSegmentPair(const Tensor& embs_a, const Tensor& embs_b) {
  CheckRank(embs_a, 2, "ScoreSegmentPair");
  CheckRank(embs_b, 2, "ScoreSegmentPair");
  Require(embs_a.Dim(1) == embs_b.Dim(1),
          "ScoreSegmentPair: embedding dims differ");
  const int64_t sa = embs_a.Dim(0), sb = embs_b.Dim(0), e = embs_a.Dim(1);
  double total = 0.0;
  for (int64_t i = 0; i < sa; ++i) {
    for (int64_t j = 0; j < sb; ++j) {
      std::vector<double> va(e), vb(e);
      for (int64_t k = 0; k < e; ++k) {
        va[static_cast<size_t>(k)] = embs_a.At(i, k);
        vb[static_cast<size_t>(k)] = embs_b.At(j, k);
      }
      total += CosineSimilarity(va, vb);
    }
  }
  return total / static_cast<double>(sa * sb);
}

}  // namespace evalkit
}  // namespace tdnas
