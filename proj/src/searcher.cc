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

#include "searcher.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <utility>

namespace tdnas {
namespace searcher {

bool Better(const Candidate& a, const Candidate& b) {
  if (a.feasible != b.feasible) return a.feasible;
  if (a.feasible) return a.metric < b.metric;
  return a.cost < b.cost;
}

namespace {

class Evaluator {
 public:
  Evaluator(const MetricFn& metric, const CostFn& cost, double budget)
      : metric_(metric), cost_(cost), budget_(budget) {
    Require(static_cast<bool>(metric_), "metric callback is empty");
    Require(static_cast<bool>(cost_), "cost callback is empty");
    Require(std::isfinite(budget_) && budget_ > 0, "budget must be finite and > 0");
  }

  Candidate Eval(const space::SubnetSpec& spec) {
    const std::string key = spec.ToString();
    const auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    Candidate cand;
    cand.spec = spec;
    cand.cost = cost_(spec);
    ++cost_evaluations_;
    Require(std::isfinite(cand.cost), "cost callback returned a non-finite value for " + key,
            ErrorKind::kNumeric);
    cand.feasible = cand.cost <= budget_;
    if (cand.feasible) {
      cand.metric = metric_(spec);
      ++metric_evaluations_;
      Require(std::isfinite(cand.metric),
              "metric callback returned a non-finite value for " + key, ErrorKind::kNumeric);
    } else {
      cand.metric = std::numeric_limits<double>::infinity();
    }
    cache_.emplace(key, cand);
    return cand;
  }

  uint64_t cost_evaluations() const { return cost_evaluations_; }
  uint64_t metric_evaluations() const { return metric_evaluations_; }

 private:
  MetricFn metric_;
  CostFn cost_;
  double budget_;
  std::map<std::string, Candidate> cache_;
  uint64_t cost_evaluations_ = 0;
  uint64_t metric_evaluations_ = 0;
};

void TrackBest(const Candidate& cand, SearchResult* result) {
  if (!cand.feasible) return;
  if (!result->found || Better(cand, result->best)) {
    result->found = true;
    result->best = cand;
  }
}

bool Coin(Rng* rng, double rate) { return rng->UniformReal() < rate; }

int PickOption(const std::vector<int>& options, Rng* rng) {
  return options[rng->UniformIndex(options.size())];
}

// Grid spaces tie the wide-layer width to the narrow-layer width by position
// in the option lists.
int GridBackFor(const space::SpaceConfig& cfg, int front) {
  for (size_t i = 0; i < cfg.width_front_options.size(); ++i)
    if (cfg.width_front_options[i] == front) return cfg.width_back_options[i];
  Check(false, "grid width lookup failed");
  return 0;
}

space::SubnetSpec MakeGridSpec(const space::SpaceConfig& cfg, int depth, int kernel,
                               int width) {
  space::SubnetSpec s;
  s.depth = depth;
  s.kernels.assign(depth + 1, kernel);
  s.widths.assign(depth + 1, width);
  s.width_back = GridBackFor(cfg, width);
  return s;
}

}  // namespace

space::SubnetSpec Crossover(const space::SubnetSpec& a, const space::SubnetSpec& b,
                            const space::SpaceConfig& cfg, Rng* rng) {
  const space::Validation va = space::Validate(a, cfg);
  Require(va.ok, "crossover parent invalid: " + va.reason, ErrorKind::kValidation);
  const space::Validation vb = space::Validate(b, cfg);
  Require(vb.ok, "crossover parent invalid: " + vb.reason, ErrorKind::kValidation);

  if (cfg.coupling == space::Coupling::kGrid) {
    const int depth = Coin(rng, 0.5) ? a.depth : b.depth;
    const int kernel = Coin(rng, 0.5) ? a.kernels[0] : b.kernels[0];
    const int width = Coin(rng, 0.5) ? a.widths[0] : b.widths[0];
    return MakeGridSpec(cfg, depth, kernel, width);
  }

  space::SubnetSpec child;
  child.depth = Coin(rng, 0.5) ? a.depth : b.depth;
  for (int p = 0; p <= child.depth; ++p) {
    const bool in_a = p <= a.depth;
    const bool in_b = p <= b.depth;
    const space::SubnetSpec& donor_k = in_a && in_b ? (Coin(rng, 0.5) ? a : b) : (in_a ? a : b);
    child.kernels.push_back(donor_k.kernels[p]);
    const space::SubnetSpec& donor_w = in_a && in_b ? (Coin(rng, 0.5) ? a : b) : (in_a ? a : b);
    child.widths.push_back(donor_w.widths[p]);
  }
  child.width_back = Coin(rng, 0.5) ? a.width_back : b.width_back;
  return child;
}

void Mutate(space::SubnetSpec* spec, const space::SpaceConfig& cfg, double rate,
            Rng* rng) {
  Require(rate >= 0 && rate <= 1, "mutation rate must lie in [0, 1]");
  if (cfg.coupling == space::Coupling::kGrid) {
    int depth = spec->depth;
    int kernel = spec->kernels[0];
    int width = spec->widths[0];
    if (Coin(rng, rate)) depth = PickOption(cfg.depth_options, rng);
    if (Coin(rng, rate)) kernel = PickOption(cfg.kernel_options, rng);
    if (Coin(rng, rate)) width = PickOption(cfg.width_front_options, rng);
    *spec = MakeGridSpec(cfg, depth, kernel, width);
    return;
  }
  if (Coin(rng, rate)) {
    const int depth = PickOption(cfg.depth_options, rng);
    spec->depth = depth;
    while (static_cast<int>(spec->kernels.size()) < depth + 1)
      spec->kernels.push_back(PickOption(cfg.kernel_options, rng));
    while (static_cast<int>(spec->widths.size()) < depth + 1)
      spec->widths.push_back(PickOption(cfg.width_front_options, rng));
    spec->kernels.resize(depth + 1);
    spec->widths.resize(depth + 1);
  }
  for (int p = 0; p <= spec->depth; ++p) {
    if (Coin(rng, rate)) spec->kernels[p] = PickOption(cfg.kernel_options, rng);
    if (Coin(rng, rate)) spec->widths[p] = PickOption(cfg.width_front_options, rng);
  }
  if (Coin(rng, rate)) spec->width_back = PickOption(cfg.width_back_options, rng);
}

SearchResult GridSearch(const space::SpaceConfig& cfg, const MetricFn& metric,
                        const CostFn& cost, double budget) {
  Evaluator ev(metric, cost, budget);
  SearchResult result;
  for (const space::SubnetSpec& spec : space::EnumerateGrid(cfg)) {
    TrackBest(ev.Eval(spec), &result);
  }
  result.cost_evaluations = ev.cost_evaluations();
  result.metric_evaluations = ev.metric_evaluations();
  return result;
}

SearchResult RandomSearch(const space::SpaceConfig& cfg, int samples,
                          uint64_t seed, const MetricFn& metric,
                          const CostFn& cost, double budget) {
  Require(samples >= 1, "random search needs at least 1 sample");
  space::ValidateConfig(cfg);
  Evaluator ev(metric, cost, budget);
  SearchResult result;
  space::SamplerState state{seed, 0};
  for (int i = 0; i < samples; ++i) {
    TrackBest(ev.Eval(space::Sample(cfg, &state)), &result);
  }
  result.cost_evaluations = ev.cost_evaluations();
  result.metric_evaluations = ev.metric_evaluations();
  return result;
}

void ValidateEvolutionConfig(const EvolutionConfig& ec) {
  Require(ec.population >= 2, "evolution population must be >= 2", ErrorKind::kBadConfig);
  Require(ec.generations >= 0, "evolution generations must be >= 0", ErrorKind::kBadConfig);
  Require(ec.mutation_rate >= 0 && ec.mutation_rate <= 1,
          "mutation_rate must lie in [0, 1]", ErrorKind::kBadConfig);
  Require(ec.tournament >= 1 && ec.tournament <= ec.population,
          "tournament size must lie in [1, population]", ErrorKind::kBadConfig);
  Require(ec.elites >= 0 && ec.elites < ec.population,
          "elites must lie in [0, population)", ErrorKind::kBadConfig);
}

namespace {

const Candidate& Tournament(const std::vector<Candidate>& pop, int rounds, Rng* rng) {
  const Candidate* champion = &pop[rng->UniformIndex(pop.size())];
  for (int i = 1; i < rounds; ++i) {
    const Candidate& challenger = pop[rng->UniformIndex(pop.size())];
    if (Better(challenger, *champion)) champion = &challenger;
  }
  return *champion;
}

SearchResult::GenerationLog LogGeneration(const std::vector<Candidate>& pop, int gen) {
  SearchResult::GenerationLog log;
  log.generation = gen;
  double best = std::numeric_limits<double>::infinity();
  double sum = 0;
  for (const Candidate& c : pop) {
    if (!c.feasible) continue;
    ++log.feasible_count;
    sum += c.metric;
    best = std::min(best, c.metric);
  }
  if (log.feasible_count > 0) {
    log.best_metric = best;
    log.mean_metric = sum / log.feasible_count;
  }
  return log;
}

}  // namespace

SearchResult Evolve(const space::SpaceConfig& cfg, const EvolutionConfig& ec,
                    const MetricFn& metric, const CostFn& cost, double budget) {
  space::ValidateConfig(cfg);
  ValidateEvolutionConfig(ec);
  Evaluator ev(metric, cost, budget);
  SearchResult result;

  // Each initial slot is drawn inside the constraint when possible: rejected
  // draws are retried a bounded number of times, keeping the cheapest
  // infeasible draw as the fallback.
  constexpr int kInitTries = 100;
  space::SamplerState state{ec.seed, 0};
  std::vector<Candidate> pop;
  pop.reserve(ec.population);
  for (int i = 0; i < ec.population; ++i) {
    Candidate slot;
    bool have = false;
    for (int t = 0; t < kInitTries && !(have && slot.feasible); ++t) {
      const Candidate cand = ev.Eval(space::Sample(cfg, &state));
      TrackBest(cand, &result);
      if (!have || Better(cand, slot)) {
        slot = cand;
        have = true;
      }
    }
    pop.push_back(std::move(slot));
  }

  Rng rng(ec.seed + 1);
  for (int gen = 0;; ++gen) {
    result.generations.push_back(LogGeneration(pop, gen));
    if (gen == ec.generations) break;

    std::vector<Candidate> ranked = pop;
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const Candidate& a, const Candidate& b) { return Better(a, b); });
    std::vector<Candidate> next(ranked.begin(), ranked.begin() + ec.elites);
    while (static_cast<int>(next.size()) < ec.population) {
      const Candidate& p1 = Tournament(pop, ec.tournament, &rng);
      const Candidate& p2 = Tournament(pop, ec.tournament, &rng);
      space::SubnetSpec child = Crossover(p1.spec, p2.spec, cfg, &rng);
      Mutate(&child, cfg, ec.mutation_rate, &rng);
      next.push_back(ev.Eval(child));
      TrackBest(next.back(), &result);
    }
    pop = std::move(next);
  }

  result.cost_evaluations = ev.cost_evaluations();
  result.metric_evaluations = ev.metric_evaluations();
  return result;
}

}  // namespace searcher
}  // namespace tdnas
