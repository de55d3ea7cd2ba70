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

#include "dataset.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <utility>
#include <vector>

#include "common.h"

namespace tdnas {
namespace dataset {

void ValidateDatasetConfig(const DatasetConfig& cfg) {
  Require(cfg.n_speakers >= 2, "dataset needs at least 2 speakers", ErrorKind::kBadConfig);
  Require(cfg.train_utts_per_speaker >= 1, "dataset needs at least 1 train utterance per speaker", ErrorKind::kBadConfig);
  Require(cfg.eval_utts_per_speaker >= 2, "dataset needs at least 2 eval utterances per speaker for target trials", ErrorKind::kBadConfig);
  Require(cfg.feature_dim >= 1 && cfg.frames >= 8, "dataset feature_dim must be >= 1 and frames >= 8", ErrorKind::kBadConfig);
  Require(cfg.smoothing >= 1 && cfg.smoothing < cfg.frames, "dataset smoothing window must be in [1, frames)", ErrorKind::kBadConfig);
  Require(cfg.noise_scale >= 0.0, "dataset noise_scale must be >= 0", ErrorKind::kBadConfig);
  Require(cfg.n_trials >= 2, "dataset n_trials must be >= 2", ErrorKind::kBadConfig);
}

std::string UttId(int speaker, int utt, bool is_eval) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "s%03d%c%02d", speaker, is_eval ? 'e' : 'u', utt);
  return std::string(buf);
}

namespace {

// White noise smoothed by a circular moving average, rescaled so the result
// keeps roughly unit variance regardless of the window size.
Tensor SmoothNoise(int channels, int frames, int window, Rng* rng) {
  Tensor raw = Tensor::Zeros({channels, frames});
  for (double& v : raw.data) v = rng->Normal();
  Tensor out = Tensor::Zeros({channels, frames});
  const double gain = std::sqrt(static_cast<double>(window));
  for (int c = 0; c < channels; ++c) {
    double acc = 0.0;
    for (int t = 0; t < window; ++t) acc += raw.At(c, t % frames);
    for (int t = 0; t < frames; ++t) {
      out.At(c, t) = gain * acc / window;
      acc -= raw.At(c, t);
      acc += raw.At(c, (t + window) % frames);
    }
  }
  return out;
}

Tensor MakeUtterance(const Tensor& tpl, const DatasetConfig& cfg, Rng* rng) {
  const int c0 = cfg.feature_dim;
  const int t0 = cfg.frames;
  const int shift = static_cast<int>(rng->UniformIndex(static_cast<size_t>(t0)));
  Tensor noise = SmoothNoise(c0, t0, cfg.smoothing, rng);
  Tensor utt = Tensor::Zeros({c0, t0});
  for (int c = 0; c < c0; ++c) {
    for (int t = 0; t < t0; ++t) {
      utt.At(c, t) = tpl.At(c, (t + shift) % t0) + cfg.noise_scale * noise.At(c, t);
    }
  }
  return utt;
}

}  // namespace

Dataset Generate(const DatasetConfig& cfg) {
  ValidateDatasetConfig(cfg);
  Dataset ds;
  ds.cfg = cfg;
  Rng rng(cfg.seed);
  for (int s = 0; s < cfg.n_speakers; ++s) {
    Tensor tpl = SmoothNoise(cfg.feature_dim, cfg.frames, cfg.smoothing, &rng);
    for (int u = 0; u < cfg.train_utts_per_speaker; ++u) {
      const std::string id = UttId(s, u, false);
      ds.train.emplace(id, MakeUtterance(tpl, cfg, &rng));
      ds.speaker_of.emplace(id, s);
    }
    for (int u = 0; u < cfg.eval_utts_per_speaker; ++u) {
      const std::string id = UttId(s, u, true);
      ds.eval.emplace(id, MakeUtterance(tpl, cfg, &rng));
      ds.speaker_of.emplace(id, s);
    }
  }

  const int n_target = cfg.n_trials / 2;
  for (int i = 0; i < cfg.n_trials; ++i) {
    evalkit::Trial tr;
    if (i < n_target) {
      tr.label = 1;
      const int s = static_cast<int>(rng.UniformIndex(static_cast<size_t>(cfg.n_speakers)));
      const int a = static_cast<int>(rng.UniformIndex(static_cast<size_t>(cfg.eval_utts_per_speaker)));
      int b = static_cast<int>(rng.UniformIndex(static_cast<size_t>(cfg.eval_utts_per_speaker - 1)));
      if (b >= a) ++b;
      tr.id_a = UttId(s, a, true);
      tr.id_b = UttId(s, b, true);
    } else {
      tr.label = 0;
      const int sa = static_cast<int>(rng.UniformIndex(static_cast<size_t>(cfg.n_speakers)));
      int sb = static_cast<int>(rng.UniformIndex(static_cast<size_t>(cfg.n_speakers - 1)));
      if (sb >= sa) ++sb;
      tr.id_a = UttId(sa, static_cast<int>(rng.UniformIndex(static_cast<size_t>(cfg.eval_utts_per_speaker))), true);
      tr.id_b = UttId(sb, static_cast<int>(rng.UniformIndex(static_cast<size_t>(cfg.eval_utts_per_speaker))), true);
    }
    ds.trials.push_back(std::move(tr));
  }
  return ds;
}

}  // namespace dataset
}  // namespace tdnas
