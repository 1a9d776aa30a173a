/*
 * Copyright 2026 The costbo Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef COSTBO_DIAGNOSTICS_HPP
#define COSTBO_DIAGNOSTICS_HPP

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "costbo/acquisition.hpp"
#include "costbo/cost.hpp"
#include "costbo/error.hpp"
#include "costbo/space.hpp"
#include "costbo/surrogate.hpp"

namespace costbo {

/// Change of EI at a fixed point between two successive iterations, split
/// into the incumbent shift and everything else.
struct EIDecomposition {
  double global_term = 0.0;  // y_min(t+1) - y_min(t)
  double local_term = 0.0;   // exact_delta - global_term
  double exact_delta = 0.0;  // EI_{t+1}(x) - EI_t(x)
};

inline EIDecomposition ei_decomposition(const GPModel& model_t, const GPModel& model_t1, double y_min_t,
                                        double y_min_t1, const UnitPoint& x) {
  if (y_min_t1 > y_min_t) throw UsageError("ei_decomposition: incumbent increased");
  const auto p0 = model_t.posterior(x);
  const auto p1 = model_t1.posterior(x);
  EIDecomposition d;
  d.exact_delta = ei(p1.mean, p1.sd(), y_min_t1) - ei(p0.mean, p0.sd(), y_min_t);
  d.global_term = y_min_t1 - y_min_t;
  d.local_term = d.exact_delta - d.global_term;
  return d;
}

struct FrontSnapshot {
  std::size_t iteration = 0;
  std::vector<Candidate> front;
};

struct PersistenceStat {
  std::size_t survived = 0;
  std::size_t total = 0;
  std::vector<std::pair<Candidate, Candidate>> rescored;  // (old, new)
  std::vector<bool> survived_flags;                        // per previous front point
};

/// Re-scores the previous front under the new models and counts the points
/// still non-dominated among the re-scored points and the current front.
inline PersistenceStat front_persistence(const SearchSpace& space, const FrontSnapshot& prev,
                                         const GPModel& model_t1, const CostModel& cost_model_t1,
                                         double y_min_t1, std::span<const Candidate> current_front,
                                         double floor = 1e-6) {
  std::vector<UnitPoint> pts;
  for (const auto& c : prev.front) pts.push_back(c.point);
  const auto fresh = score_candidates(space, model_t1, cost_model_t1, pts, y_min_t1, floor);

  std::vector<Candidate> pool(fresh.begin(), fresh.end());
  pool.insert(pool.end(), current_front.begin(), current_front.end());
  const auto front = pareto_front_indices(pool);
  std::vector<bool> on_front(pool.size(), false);
  for (std::size_t i : front) on_front[i] = true;

  PersistenceStat s;
  s.total = fresh.size();
  for (std::size_t i = 0; i < fresh.size(); ++i) {
    s.rescored.emplace_back(prev.front[i], fresh[i]);
    s.survived_flags.push_back(on_front[i]);
    if (on_front[i]) ++s.survived;
  }
  return s;
}

}  // namespace costbo

#endif  // COSTBO_DIAGNOSTICS_HPP
