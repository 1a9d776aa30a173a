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

#ifndef COSTBO_ENGINE_HPP
#define COSTBO_ENGINE_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <numeric>
#include <limits>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "costbo/acquisition.hpp"
#include "costbo/bench.hpp"
#include "costbo/cost.hpp"
#include "costbo/error.hpp"
#include "costbo/space.hpp"
#include "costbo/surrogate.hpp"

namespace costbo {

struct Observation {
  UnitPoint point;
  double y = 0.0;
  double cost = 1.0;
};

struct Budget {
  enum class Kind { kIterations, kSimulatedCost };
  Kind kind = Kind::kIterations;
  std::size_t iterations = 50;
  double tau = 0.0;

  static Budget iterations_of(std::size_t n) { return {Kind::kIterations, n, 0.0}; }
  static Budget simulated_cost(double tau) { return {Kind::kSimulatedCost, 0, tau}; }

  void validate() const {
    if (kind == Kind::kIterations && iterations < 1) throw ConfigError("budget: iterations must be >= 1");
    if (kind == Kind::kSimulatedCost && !(tau > 0.0 && std::isfinite(tau))) {
      throw ConfigError("budget: tau must be positive and finite");
    }
  }
  std::string describe() const {
    return kind == Kind::kIterations ? "iterations:" + std::to_string(iterations)
                                     : "cost:" + nlohmann::json(tau).dump();
  }
};

struct RunConfig {
  std::uint64_t seed = 0;
  AcquisitionKind acquisition = AcquisitionKind::ei();
  CostModelKind cost_model = CostModelKind::lv(3);
  std::size_t init_design_size = 0;  // 0 selects max(5, dimension count)
  std::size_t candidate_count = 2048;
  Budget budget;
  int gp_restarts = 5;       // first surrogate fit
  int gp_warm_restarts = 1;  // later fits, started from the previous parameters
  int gp_max_iterations = 300;
  // Hard cap on evaluations for cost budgets; 0 means none.
  std::size_t max_evaluations = 0;
  // Pre-fitted cost model (transfer kinds); refits are skipped when set.
  std::shared_ptr<const CostModel> fixed_cost_model;
  // Keep every scored candidate in the trace records.
  bool keep_candidates = false;

  std::size_t init_size(const SearchSpace& s) const {
    return init_design_size > 0 ? init_design_size : std::max<std::size_t>(5, s.size());
  }

  void validate() const {
    budget.validate();
    AcquisitionKind a = acquisition;
    if (a.type == AcquisitionKind::Type::kEICool && !(a.total_budget > 0.0)) a.total_budget = budget.tau;
    if (a.type != AcquisitionKind::Type::kEICool || a.total_budget > 0.0) a.validate();
    if (candidate_count < 1) throw ConfigError("run: candidate_count must be >= 1");
    if (gp_restarts < 1 || gp_warm_restarts < 1) throw ConfigError("run: gp restarts must be >= 1");
    if (cost_model.is_transfer() && !fixed_cost_model) {
      throw ConfigError("run: transfer cost models must be fitted beforehand");
    }
    if (acquisition.type == AcquisitionKind::Type::kEICool && budget.kind == Budget::Kind::kIterations &&
        !(acquisition.total_budget > 0.0)) {
      throw ConfigError("run: ei_cool needs a cost budget or an explicit total budget");
    }
  }

  nlohmann::json to_json() const {
    return {{"acquisition", acquisition.name()},
            {"cost_model", cost_model.name()},
            {"init_design_size", init_design_size},
            {"candidate_count", candidate_count},
            {"budget", budget.describe()},
            {"gp_restarts", gp_restarts},
            {"gp_warm_restarts", gp_warm_restarts},
            {"gp_max_iterations", gp_max_iterations},
            {"max_evaluations", max_evaluations}};
  }

  /// FNV-1a over the canonical JSON of the configuration, seed excluded.
  std::string hash() const {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : to_json().dump()) {
      h ^= c;
      h *= 1099511628211ULL;
    }
    static const char* hex = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i, h >>= 4) s[static_cast<std::size_t>(i)] = hex[h & 0xF];
    return s;
  }
};

struct IterationRecord {
  std::size_t iteration = 0;  // 1-based
  bool initial = false;       // part of the initial design
  UnitPoint point;
  NativeConfig config;
  double y = 0.0;  // +inf when the evaluation failed
  double cost = 0.0;
  double cumulative_cost = 0.0;
  double incumbent = std::numeric_limits<double>::infinity();
  std::optional<double> max_ei;
  std::optional<double> cei_threshold;
  std::optional<ImpliedAlpha> implied_alpha;
  std::optional<double> predicted_cost;
  std::vector<Candidate> front;
  std::vector<Candidate> candidates;  // only with keep_candidates
  bool over_budget = false;
  bool failed = false;
  bool degenerate = false;
};

struct Trace {
  std::string problem;
  RunConfig config;
  std::vector<IterationRecord> records;

  double total_cost() const { return records.empty() ? 0.0 : records.back().cumulative_cost; }
  double final_incumbent() const {
    return records.empty() ? std::numeric_limits<double>::infinity() : records.back().incumbent;
  }
};

/// Models and selection of one BO step, handed to run observers.
struct StepContext {
  const IterationRecord& record;
  const GPModel& surrogate;
  const CostModel& cost_model;
  const SelectionResult& selection;
  std::span<const Observation> history;  // data the models were fitted on
  double f_min = 0.0;
  double cost_floor = 1e-6;
};

using StepObserver = std::function<void(const StepContext&)>;

namespace detail {

inline std::vector<UnitPoint> initial_design(const BlackBox& box, std::size_t n, std::mt19937_64& rng) {
  const auto& space = box.space();
  std::vector<UnitPoint> out;
  if (const auto* table = box.table_points()) {
    std::vector<std::size_t> idx(table->size());
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), rng);
    for (std::size_t i = 0; i < n; ++i) out.push_back((*table)[idx[i % idx.size()]]);
    return out;
  }
  for (const auto& p : sample_uniform(space, rng, n)) out.push_back(to_unit(space, from_unit(space, p)));
  return out;
}

}  // namespace detail

/// Sequential cost-aware BO on one black box.
inline Trace run(BlackBox& box, const RunConfig& cfg, const StepObserver& observer = {}) {
  cfg.validate();
  const SearchSpace& space = box.space();
  std::mt19937_64 rng(cfg.seed);
  Trace trace;
  trace.problem = box.descriptor();
  trace.config = cfg;

  std::vector<Observation> data;  // successful evaluations only
  std::vector<UnitPoint> all_points;
  double cumulative = 0.0;
  double incumbent = std::numeric_limits<double>::infinity();
  std::size_t evaluations = 0;

  const auto budget_left = [&] {
    if (cfg.max_evaluations > 0 && evaluations >= cfg.max_evaluations) return false;
    if (cfg.budget.kind == Budget::Kind::kIterations) return evaluations < cfg.budget.iterations;
    return cumulative < cfg.budget.tau;
  };

  const auto evaluate = [&](const UnitPoint& x, IterationRecord rec) -> IterationRecord& {
    rec.iteration = ++evaluations;
    rec.point = x;
    rec.config = from_unit(space, x);
    try {
      const auto e = box.evaluate(x);
      if (!std::isfinite(e.y)) throw EvaluationFailure("non-finite objective value", e.cost);
      rec.y = e.y;
      rec.cost = e.cost;
      data.push_back({x, e.y, e.cost});
      incumbent = std::min(incumbent, e.y);
    } catch (const EvaluationFailure& f) {
      rec.failed = true;
      rec.y = std::numeric_limits<double>::infinity();
      rec.cost = f.cost();
    }
    if (!(rec.cost > 0.0) || !std::isfinite(rec.cost)) {
      throw HarnessError("black box reported a non-positive cost at iteration " + std::to_string(rec.iteration));
    }
    all_points.push_back(x);
    cumulative += rec.cost;
    rec.cumulative_cost = cumulative;
    rec.incumbent = incumbent;
    rec.over_budget = cfg.budget.kind == Budget::Kind::kSimulatedCost && cumulative > cfg.budget.tau;
    trace.records.push_back(std::move(rec));
    return trace.records.back();
  };

  for (const auto& x : detail::initial_design(box, cfg.init_size(space), rng)) {
    if (!budget_left()) break;
    IterationRecord rec;
    rec.initial = true;
    evaluate(x, std::move(rec));
  }

  AcquisitionKind acq = cfg.acquisition;
  if (acq.type == AcquisitionKind::Type::kEICool) {
    if (!(acq.total_budget > 0.0)) acq.total_budget = cfg.budget.tau;
    acq.init_budget = cumulative;
    if (acq.init_budget >= acq.total_budget) acq.init_budget = 0.0;
  }

  GpFitOptions first_opt;
  first_opt.restarts = cfg.gp_restarts;
  first_opt.minimizer.max_iterations = cfg.gp_max_iterations;
  GpFitOptions warm_opt = first_opt;
  warm_opt.restarts = cfg.gp_warm_restarts;
  std::optional<KernelParams> warm;
  ProposalOptions popt;
  popt.candidate_count = cfg.candidate_count;

  while (budget_left()) {
    if (data.empty()) {
      // Nothing to model yet: fall back to a uniform draw.
      IterationRecord rec;
      evaluate(detail::initial_design(box, 1, rng).front(), std::move(rec));
      continue;
    }
    std::vector<UnitPoint> X;
    std::vector<double> y;
    std::vector<CostSample> cost_samples;
    std::vector<double> costs;
    for (const auto& o : data) {
      X.push_back(o.point);
      y.push_back(o.y);
      cost_samples.push_back({from_unit(space, o.point), o.cost});
      costs.push_back(o.cost);
    }
    const GPModel surrogate = warm ? gp_fit(X, y, rng, warm_opt, &*warm) : gp_fit(X, y, rng, first_opt);
    warm = surrogate.params();
    const CostModel cost_model =
        cfg.fixed_cost_model ? *cfg.fixed_cost_model : fit_cost_model(cfg.cost_model, space, cost_samples, rng, first_opt);

    ProposalInput in;
    in.space = &space;
    in.surrogate = &surrogate;
    in.cost_model = &cost_model;
    in.history = all_points;
    in.f_min = incumbent;
    in.spent = cumulative;
    in.cost_floor = cost_floor(costs);
    in.fixed_candidates = box.table_points();
    const SelectionResult sel = propose(acq, in, popt, rng);

    IterationRecord rec;
    rec.max_ei = sel.max_ei;
    rec.cei_threshold = sel.threshold;
    if (acq.type == AcquisitionKind::Type::kCEI) rec.implied_alpha = implied_alpha(sel);
    rec.predicted_cost = sel.chosen.cost_pred;
    for (std::size_t i : sel.front) rec.front.push_back(sel.candidates[i]);
    if (cfg.keep_candidates) rec.candidates = sel.candidates;
    rec.degenerate = sel.degenerate;
    const double f_min = incumbent;
    const std::size_t fitted = data.size();
    const auto& stored = evaluate(sel.chosen.point, std::move(rec));
    if (observer) {
      observer(StepContext{stored, surrogate, cost_model, sel, std::span<const Observation>(data).first(fitted),
                           f_min, in.cost_floor});
    }
  }
  return trace;
}

struct ConstrainedBest {
  double y = std::numeric_limits<double>::infinity();
  double cost = 0.0;
};

/// Incumbent over the longest prefix of records whose cumulative cost stays
/// within tau.
inline ConstrainedBest constrained_best(std::span<const IterationRecord> records, double tau) {
  if (!(tau > 0.0)) throw UsageError("constrained_best: tau must be positive");
  ConstrainedBest b;
  for (const auto& r : records) {
    if (r.cumulative_cost > tau) break;
    b.y = r.incumbent;
    b.cost = r.cumulative_cost;
  }
  return b;
}

inline ConstrainedBest constrained_best(const Trace& trace, double tau) {
  return constrained_best(std::span<const IterationRecord>(trace.records), tau);
}

}  // namespace costbo

#endif  // COSTBO_ENGINE_HPP
