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

#ifndef TDNAS_EVALKIT_H_
#define TDNAS_EVALKIT_H_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "tensor.h"

namespace tdnas {
namespace evalkit {

struct Trial {
  int label = 0;  // 1 = same speaker, 0 = different
  std::string id_a;
  std::string id_b;
};

// Text format: one trial per line, "label id_a id_b".
std::vector<Trial> ParseTrialList(const std::string& text);
std::string FormatTrialList(const std::vector<Trial>& trials);

struct ScoredPair {
  std::string id_a;
  std::string id_b;
  double score = 0.0;
};

// Text format: one score per line, "id_a id_b score".
std::vector<ScoredPair> ParseScores(const std::string& text);
std::string FormatScores(const std::vector<ScoredPair>& scores);

// Equal error rate of an accept-if-score>=threshold detector.  Operating
// points are taken at every distinct score plus the two degenerate endpoints;
// the crossing of false-accept and false-reject rates is located on the
// polyline joining adjacent operating points and solved linearly.  Depends on
// score order only, so any strictly increasing transform of the scores leaves
// the value bit-identical.
double ComputeEer(const std::vector<double>& target_scores,
                  const std::vector<double>& nontarget_scores);

// Minimum normalized detection cost over all thresholds (attained at an
// operating point, so a sweep over the finite score set is exact).
double ComputeMinDcf(const std::vector<double>& target_scores,
                     const std::vector<double>& nontarget_scores,
                     double p_target = 0.01, double c_miss = 1.0,
                     double c_fa = 1.0);

// Adaptive symmetric score normalization: z-normalizes the raw score against
// the mean and population standard deviation of the top-k scores of each
// side's cohort, then averages the two normalized values.
double SNormScore(double raw, const std::vector<double>& enroll_cohort,
                  const std::vector<double>& test_cohort, int64_t top_k);

// Rank correlation with average ranks for ties.  Inputs must not be constant.
double Spearman(const std::vector<double>& xs, const std::vector<double>& ys);

// Evenly spread segment start offsets over an utterance.  Shorter utterances
// than the segment length are handled by wrap-around reads in ExtractSegment.
std::vector<int64_t> SegmentStarts(int64_t utt_frames, int64_t segment_frames,
                                   int n_segments);

// Copies `frames` columns of a [C, T] utterance starting at `start`, indices
// taken modulo T.
Tensor ExtractSegment(const Tensor& utt, int64_t start, int64_t frames);

double CosineSimilarity(const std::vector<double>& a,
                        const std::vector<double>& b);

// Trial score = mean cosine similarity over all cross pairs of the two
// utterances' segment embeddings (rows of the [S, E] matrices).
double ScoreSegmentPair(const Tensor& embs_a, const Tensor& embs_b);

}  // namespace evalkit
}  // namespace tdnas

#endif  // TDNAS_EVALKIT_H_
