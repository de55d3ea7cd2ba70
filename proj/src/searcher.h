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

#ifndef TDNAS_SEARCHER_H_
#define TDNAS_SEARCHER_H_

#include <cstdint>
#include <functional>
#include <vector>

#include "common.h"
#include "space.h"

namespace tdnas {
namespace searcher {

// Both callbacks take a spec; the metric is "lower is better" (an error rate
// or a predicted one).  The cost is compared against the budget.
using CostFn = std::function<double(const space::SubnetSpec&)>;
using MetricFn = std::function<double(const space::SubnetSpec&)>;

struct Candidate {
  space::SubnetSpec spec;
  double cost = 0;
  double metric = 0;  // +inf when infeasible: the metric is never queried then
  bool feasible = false;
};

// Feasibility-first order: any feasible candidate beats any infeasible one;
// among feasible, lower metric wins; among infeasible, lower cost wins.
// Strict, so ties keep the incumbent.
bool Better(const Candidate& a, const Candidate& b);

struct SearchResult {
  bool found = false;  // false means no feasible architecture was seen
  Candidate best;      // meaningful only when found
  uint64_t cost_evaluations = 0;
  uint64_t metric_evaluations = 0;
  struct GenerationLog {
    int generation = 0;
    int feasible_count = 0;
    double best_metric = 0;  // over feasible members; 0 when none
    double mean_metric = 0;
  };
  std::vector<GenerationLog> generations;  // evolution only
};

// Exhaustive sweep of a coupled-grid space.
SearchResult GridSearch(const space::SpaceConfig& cfg, const MetricFn& metric,
                        const CostFn& cost, double budget);

// Uniform sampling; duplicates are evaluated once through a cache but still
// count as samples.
SearchResult RandomSearch(const space::SpaceConfig& cfg, int samples,
                          uint64_t seed, const MetricFn& metric,
                          const CostFn& cost, double budget);

struct EvolutionConfig {
  int population = 50;
  int generations = 20;
  double mutation_rate = 0.1;
  int tournament = 2;
  int elites = 1;
  uint64_t seed = 5;
};

void ValidateEvolutionConfig(const EvolutionConfig& ec);

// Genetic operators, exposed for direct testing.  Children are always valid
// members of the space.
space::SubnetSpec Crossover(const space::SubnetSpec& a, const space::SubnetSpec& b,
                            const space::SpaceConfig& cfg, Rng* rng);
void Mutate(space::SubnetSpec* spec, const space::SpaceConfig& cfg, double rate,
            Rng* rng);

// Tournament-selection evolution under a hard budget.  Infeasible candidates
// survive only by approaching the budget; the returned best is always
// feasible (found == false otherwise).
SearchResult Evolve(const space::SpaceConfig& cfg, const EvolutionConfig& ec,
                    const MetricFn& metric, const CostFn& cost, double budget);

}  // namespace searcher
}  // namespace tdnas

#endif  // TDNAS_SEARCHER_H_
