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

#ifndef COSTBO_EXPERIMENTS_HPP
#define COSTBO_EXPERIMENTS_HPP

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <istream>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <random>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <thread>
#include <tuple>
#include <utility>
#include <vector>

#include <json.hpp>

#include "costbo/acquisition.hpp"
#include "costbo/bench.hpp"
#include "costbo/cost.hpp"
#include "costbo/diagnostics.hpp"
#include "costbo/engine.hpp"
#include "costbo/error.hpp"

namespace costbo {

// --- trace files -----------------------------------------------------------

namespace detail {

inline nlohmann::json finite_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(); }
inline double number_or_inf(const nlohmann::json& j) {
  return j.is_null() ? std::numeric_limits<double>::infinity() : j.get<double>();
}

}  // namespace detail

inline nlohmann::json to_json(const IterationRecord& r) {
  nlohmann::json front = nlohmann::json::array();
  for (const auto& c : r.front) front.push_back({c.ei, c.cost_pred});
  nlohmann::json j{{"type", "iteration"},
                   {"iteration", r.iteration},
                   {"initial", r.initial},
                   {"point", r.point.coords},
                   {"config", r.config.values},
                   {"y", detail::finite_or_null(r.y)},
                   {"cost", r.cost},
                   {"cumulative_cost", r.cumulative_cost},
                   {"incumbent", detail::finite_or_null(r.incumbent)},
                   {"max_ei", r.max_ei ? nlohmann::json(*r.max_ei) : nlohmann::json()},
                   {"cei_threshold", r.cei_threshold ? nlohmann::json(*r.cei_threshold) : nlohmann::json()},
                   {"predicted_cost", r.predicted_cost ? nlohmann::json(*r.predicted_cost) : nlohmann::json()},
                   {"front", std::move(front)},
                   {"over_budget", r.over_budget},
                   {"failed", r.failed},
                   {"degenerate", r.degenerate}};
  if (r.implied_alpha) {
    j["implied_alpha"] = {{"lower", r.implied_alpha->lower},
                          {"upper", r.implied_alpha->upper},
                          {"value", r.implied_alpha->value}};
  } else {
    j["implied_alpha"] = nullptr;
  }
  return j;
}

inline IterationRecord record_from_json(const nlohmann::json& j) {
  IterationRecord r;
  r.iteration = j.at("iteration").get<std::size_t>();
  r.initial = j.at("initial").get<bool>();
  r.point = UnitPoint{j.at("point").get<std::vector<double>>()};
  r.config = NativeConfig{j.at("config").get<std::vector<double>>()};
  r.y = detail::number_or_inf(j.at("y"));
  r.cost = j.at("cost").get<double>();
  r.cumulative_cost = j.at("cumulative_cost").get<double>();
  r.incumbent = detail::number_or_inf(j.at("incumbent"));
  if (!j.at("max_ei").is_null()) r.max_ei = j.at("max_ei").get<double>();
  if (!j.at("cei_threshold").is_null()) r.cei_threshold = j.at("cei_threshold").get<double>();
  if (!j.at("predicted_cost").is_null()) r.predicted_cost = j.at("predicted_cost").get<double>();
  if (const auto& ia = j.at("implied_alpha"); !ia.is_null()) {
    r.implied_alpha = ImpliedAlpha{ia.at("lower").get<double>(), ia.at("upper").get<double>(),
                                   ia.at("value").get<double>()};
  }
  for (const auto& f : j.at("front")) r.front.push_back({UnitPoint{}, f.at(0).get<double>(), f.at(1).get<double>()});
  r.over_budget = j.at("over_budget").get<bool>();
  r.failed = j.at("failed").get<bool>();
  r.degenerate = j.at("degenerate").get<bool>();
  return r;
}

/// A run as stored on disk: a header line followed by one line per record.
struct StoredTrace {
  std::string problem;
  std::string method;
  std::string cost_model;
  std::uint64_t seed = 0;
  Budget budget;
  std::optional<double> known_minimum;
  std::string config_hash;
  nlohmann::json config;
  std::vector<IterationRecord> records;

  double total_cost() const { return records.empty() ? 0.0 : records.back().cumulative_cost; }
  double final_incumbent() const {
    return records.empty() ? std::numeric_limits<double>::infinity() : records.back().incumbent;
  }
  /// Simple regret of y against the known minimum (raw y when unknown).
  double regret(double y) const { return known_minimum ? std::max(0.0, y - *known_minimum) : y; }
};

inline StoredTrace stored_trace(const Trace& t, std::optional<double> known_minimum) {
  StoredTrace s;
  s.problem = t.problem;
  s.method = t.config.acquisition.name();
  s.cost_model = t.config.cost_model.name();
  s.seed = t.config.seed;
  s.budget = t.config.budget;
  s.known_minimum = known_minimum;
  s.config_hash = t.config.hash();
  s.config = t.config.to_json();
  s.records = t.records;
  return s;
}

inline void write_trace(std::ostream& os, const StoredTrace& t) {
  nlohmann::json h{{"type", "header"},
                   {"problem", t.problem},
                   {"method", t.method},
                   {"cost_model", t.cost_model},
                   {"seed", t.seed},
                   {"budget", t.budget.describe()},
                   {"known_minimum", t.known_minimum ? nlohmann::json(*t.known_minimum) : nlohmann::json()},
                   {"config_hash", t.config_hash},
                   {"config", t.config}};
  os << h.dump() << '\n';
  for (const auto& r : t.records) os << to_json(r).dump() << '\n';
}

inline std::string trace_string(const StoredTrace& t) {
  std::ostringstream os;
  write_trace(os, t);
  return os.str();
}

inline Budget parse_budget(const std::string& s) {
  if (s.rfind("iterations:", 0) == 0) return Budget::iterations_of(std::stoul(s.substr(11)));
  if (s.rfind("cost:", 0) == 0) return Budget::simulated_cost(std::stod(s.substr(5)));
  throw DataError("unrecognized budget '" + s + "'");
}

inline StoredTrace read_trace(std::istream& is, const std::string& origin = "trace") {
  StoredTrace t;
  std::string line;
  bool header = false;
  std::size_t lineno = 0;
  try {
    while (std::getline(is, line)) {
      ++lineno;
      if (csv::trim(line).empty()) continue;
      const auto j = nlohmann::json::parse(line);
      if (j.at("type") == "header") {
        t.problem = j.at("problem").get<std::string>();
        t.method = j.at("method").get<std::string>();
        t.cost_model = j.at("cost_model").get<std::string>();
        t.seed = j.at("seed").get<std::uint64_t>();
        t.budget = parse_budget(j.at("budget").get<std::string>());
        if (!j.at("known_minimum").is_null()) t.known_minimum = j.at("known_minimum").get<double>();
        t.config_hash = j.at("config_hash").get<std::string>();
        t.config = j.at("config");
        header = true;
      } else {
        t.records.push_back(record_from_json(j));
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(origin + ":" + std::to_string(lineno) + ": " + e.what());
  }
  if (!header) throw DataError(origin + ": missing header line");
  return t;
}

inline StoredTrace read_trace_file(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw IoError("cannot open " + p.string());
  return read_trace(in, p.string());
}

inline std::string trace_file_name(const StoredTrace& t) {
  std::string prob = t.problem;
  std::replace(prob.begin(), prob.end(), '/', '_');
  const std::string kind = t.budget.kind == Budget::Kind::kIterations ? "iter" : "cost";
  return prob + "__" + t.method + "__" + kind + "__s" + std::to_string(t.seed) + ".jsonl";
}

inline void write_trace_file(const std::filesystem::path& dir, const StoredTrace& t) {
  std::filesystem::create_directories(dir);
  std::ofstream out(dir / trace_file_name(t), std::ios::binary);
  if (!out) throw IoError("cannot write " + (dir / trace_file_name(t)).string());
  write_trace(out, t);
}

/// Every *.jsonl trace below dir, in file-name order.
inline std::vector<StoredTrace> read_trace_dir(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw IoError("no trace directory " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.path().extension() == ".jsonl") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<StoredTrace> out;
  for (const auto& f : files) out.push_back(read_trace_file(f));
  return out;
}

inline constexpr const char* kSummaryHeader = "problem,method,config_hash,seed,final_y,total_cost,iterations";

inline std::string summary_row(const StoredTrace& t) {
  std::ostringstream os;
  os << std::setprecision(17) << t.problem << ',' << t.method << ',' << t.config_hash << ',' << t.seed << ','
     << t.final_incumbent() << ',' << t.total_cost() << ',' << t.records.size();
  return os.str();
}

// --- work dispatch -----------------------------------------------------------

/// Runs f(0..n-1) on up to `jobs` threads. Each index is independent; the
/// first exception is rethrown after all workers stop.
template <class F>
void parallel_for(std::size_t n, int jobs, F&& f) {
  const auto workers = static_cast<std::size_t>(std::max(1, jobs));
  if (workers == 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex m;
  std::vector<std::jthread> pool;
  for (std::size_t w = 0; w < std::min(workers, n); ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          f(i);
        } catch (...) {
          std::lock_guard lock(m);
          if (!error) error = std::current_exception();
          next = n;
        }
      }
    });
  }
  pool.clear();
  if (error) std::rethrow_exception(error);
}

// --- statistics ----------------------------------------------------------------

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

inline double mean_of(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? std::numeric_limits<double>::quiet_NaN() : s / static_cast<double>(v.size());
}

inline double median_of(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

/// Percentile bootstrap 95% interval of the mean; seeded, so repeatable.
inline Interval bootstrap_mean_ci(std::span<const double> v, std::uint64_t seed, int resamples = 1000) {
  if (v.empty()) return {std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, v.size() - 1);
  std::vector<double> means;
  means.reserve(static_cast<std::size_t>(resamples));
  for (int b = 0; b < resamples; ++b) {
    double s = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) s += v[pick(rng)];
    means.push_back(s / static_cast<double>(v.size()));
  }
  std::sort(means.begin(), means.end());
  auto at = [&](double q) {
    const double pos = q * static_cast<double>(means.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, means.size() - 1);
    return means[lo] + (pos - static_cast<double>(lo)) * (means[hi] - means[lo]);
  };
  return {at(0.025), at(0.975)};
}

/// Ranks with 1 = smallest; tied values share their average rank.
inline std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j < idx.size() && v[idx[j]] == v[idx[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) r[idx[k]] = avg;
    i = j;
  }
  return r;
}

// --- experiment grid ------------------------------------------------------------

struct ExperimentSpec {
  std::string suite = "default";
  std::size_t seeds = 20;
  std::uint64_t first_seed = 0;
  std::vector<double> alphas{0.0, 0.1, 0.3, 1.0};
  std::vector<double> lambdas{0.5};
  std::vector<std::string> baselines{"ei", "eipu"};
  std::size_t iterations = 50;
  std::vector<double> multiples{1.0, 5.0, 10.0, 20.0};
  std::size_t candidate_count = 2048;
  std::size_t max_evaluations = 150;
  std::string cost_model = "lv3";
  int jobs = 1;
  std::uint64_t bootstrap_seed = 20260101;

  void validate() const {
    if (seeds < 1) throw ConfigError("seeds must be >= 1");
    if (alphas.empty() && lambdas.empty() && baselines.empty()) throw ConfigError("empty method grid");
    if (iterations < 1) throw ConfigError("iterations must be >= 1");
    if (multiples.empty()) throw ConfigError("empty budget multiples");
    for (double m : multiples) {
      if (!(m > 0.0)) throw ConfigError("budget multiples must be positive");
    }
    for (double a : alphas) AcquisitionKind::ei_alpha(a).validate();
    for (double l : lambdas) AcquisitionKind::cei(l).validate();
    for (const auto& b : baselines) AcquisitionKind::parse(b);
    CostModelKind::parse(cost_model);
    make_suite(suite);
  }

  static ExperimentSpec from_json(const nlohmann::json& j) {
    ExperimentSpec s;
    try {
      if (j.contains("suite")) s.suite = j["suite"].get<std::string>();
      if (j.contains("seeds")) s.seeds = j["seeds"].get<std::size_t>();
      if (j.contains("first_seed")) s.first_seed = j["first_seed"].get<std::uint64_t>();
      if (j.contains("alphas")) s.alphas = j["alphas"].get<std::vector<double>>();
      if (j.contains("lambdas")) s.lambdas = j["lambdas"].get<std::vector<double>>();
      if (j.contains("baselines")) s.baselines = j["baselines"].get<std::vector<std::string>>();
      if (j.contains("iterations")) s.iterations = j["iterations"].get<std::size_t>();
      if (j.contains("multiples")) s.multiples = j["multiples"].get<std::vector<double>>();
      if (j.contains("candidate_count")) s.candidate_count = j["candidate_count"].get<std::size_t>();
      if (j.contains("max_evaluations")) s.max_evaluations = j["max_evaluations"].get<std::size_t>();
      if (j.contains("cost_model")) s.cost_model = j["cost_model"].get<std::string>();
      if (j.contains("jobs")) s.jobs = j["jobs"].get<int>();
      if (j.contains("bootstrap_seed")) s.bootstrap_seed = j["bootstrap_seed"].get<std::uint64_t>();
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("config: ") + e.what());
    }
    return s;
  }

  std::vector<AcquisitionKind> alpha_grid() const {
    std::vector<AcquisitionKind> out;
    for (double a : alphas) out.push_back(AcquisitionKind::ei_alpha(a));
    return out;
  }

  /// EI first, then the alpha grid, CEI grid and remaining baselines.
  std::vector<AcquisitionKind> methods() const {
    std::vector<AcquisitionKind> out{AcquisitionKind::ei()};
    auto add = [&](const AcquisitionKind& k) {
      for (const auto& o : out) {
        if (o.name() == k.name()) return;
      }
      out.push_back(k);
    };
    for (const auto& k : alpha_grid()) add(k);
    for (double l : lambdas) add(AcquisitionKind::cei(l));
    for (const auto& b : baselines) add(AcquisitionKind::parse(b));
    return out;
  }

  RunConfig run_config(const AcquisitionKind& k, std::uint64_t seed, Budget budget) const {
    RunConfig c;
    c.seed = seed;
    c.acquisition = k;
    c.cost_model = CostModelKind::parse(cost_model);
    c.candidate_count = candidate_count;
    c.budget = budget;
    if (budget.kind == Budget::Kind::kSimulatedCost) c.max_evaluations = max_evaluations;
    return c;
  }
};

struct RunJob {
  ProblemSpec problem;
  RunConfig config;
};

/// Runs every job (each with its own black box seeded by the run seed) and
/// returns the traces in job order.
inline std::vector<StoredTrace> run_jobs(const std::vector<RunJob>& jobs, int threads) {
  std::vector<StoredTrace> out(jobs.size());
  parallel_for(jobs.size(), threads, [&](std::size_t i) {
    auto box = jobs[i].problem.make(jobs[i].config.seed);
    auto t = run(*box, jobs[i].config);
    t.problem = jobs[i].problem.name();
    out[i] = stored_trace(t, box->known_minimum());
  });
  return out;
}

// --- bi-optimization ---------------------------------------------------------------

struct TradeoffRow {
  std::string method;
  std::size_t runs = 0;
  double mean_time = 0.0;    // % of the matched EI run's total cost
  double median_time = 0.0;
  double mean_loss = 0.0;    // % increase in simple regret over the matched EI run
  double median_loss = 0.0;
  Interval time_ci;
  Interval loss_ci;
  double mean_cost = 0.0;
  double mean_regret = 0.0;
};

inline double relative_loss_pct(double regret, double baseline_regret) {
  if (regret == baseline_regret) return 0.0;
  if (baseline_regret == 0.0) return std::numeric_limits<double>::infinity();
  return 100.0 * (regret - baseline_regret) / baseline_regret;
}

/// Normalizes every run against the EI run on the same problem and seed.
inline std::vector<TradeoffRow> tradeoff_rows(const std::vector<StoredTrace>& traces, std::uint64_t boot_seed,
                                              const std::string& baseline = "ei") {
  std::map<std::pair<std::string, std::uint64_t>, const StoredTrace*> base;
  std::vector<std::string> order;
  for (const auto& t : traces) {
    if (t.method == baseline) base[{t.problem, t.seed}] = &t;
    if (std::find(order.begin(), order.end(), t.method) == order.end()) order.push_back(t.method);
  }
  std::vector<TradeoffRow> rows;
  for (const auto& m : order) {
    TradeoffRow r;
    r.method = m;
    std::vector<double> time, loss, cost, regret;
    for (const auto& t : traces) {
      if (t.method != m) continue;
      const auto it = base.find({t.problem, t.seed});
      if (it == base.end()) {
        throw HarnessError("no " + baseline + " run for " + t.problem + " seed " + std::to_string(t.seed));
      }
      const auto& b = *it->second;
      if (b.budget.describe() != t.budget.describe()) {
        throw HarnessError("baseline budget mismatch for " + t.problem + " seed " + std::to_string(t.seed));
      }
      time.push_back(100.0 * t.total_cost() / b.total_cost());
      const double rg = t.regret(t.final_incumbent());
      loss.push_back(relative_loss_pct(rg, b.regret(b.final_incumbent())));
      cost.push_back(t.total_cost());
      regret.push_back(rg);
    }
    r.runs = time.size();
    r.mean_time = mean_of(time);
    r.median_time = median_of(time);
    r.mean_loss = mean_of(loss);
    r.median_loss = median_of(loss);
    r.time_ci = bootstrap_mean_ci(time, boot_seed);
    r.loss_ci = bootstrap_mean_ci(loss, boot_seed + 1);
    r.mean_cost = mean_of(cost);
    r.mean_regret = mean_of(regret);
    rows.push_back(r);
  }
  return rows;
}

inline constexpr const char* kTradeoffHeader =
    "method,runs,mean_time_pct,median_time_pct,time_ci_lo,time_ci_hi,mean_loss_pct,median_loss_pct,"
    "loss_ci_lo,loss_ci_hi,mean_total_cost,mean_regret,accuracy_metric";

inline std::string csv_row(const TradeoffRow& r) {
  std::ostringstream os;
  os << std::setprecision(10) << r.method << ',' << r.runs << ',' << r.mean_time << ',' << r.median_time << ','
     << r.time_ci.lo << ',' << r.time_ci.hi << ',' << r.mean_loss << ',' << r.median_loss << ',' << r.loss_ci.lo
     << ',' << r.loss_ci.hi << ',' << r.mean_cost << ',' << r.mean_regret << ",simple_regret";
  return os.str();
}

inline std::vector<RunJob> biopt_jobs(const ExperimentSpec& spec) {
  std::vector<RunJob> jobs;
  for (const auto& p : make_suite(spec.suite)) {
    for (const auto& k : spec.methods()) {
      if (k.type == AcquisitionKind::Type::kEICool) continue;  // needs a cost budget
      for (std::size_t s = 0; s < spec.seeds; ++s) {
        jobs.push_back({p, spec.run_config(k, spec.first_seed + s, Budget::iterations_of(spec.iterations))});
      }
    }
  }
  return jobs;
}

// --- optimal time allocation -------------------------------------------------------

/// Per problem, the smallest total cost of any alpha-grid run with an
/// iteration budget.
inline std::map<std::string, double> minimal_budgets(const std::vector<StoredTrace>& traces,
                                                     const std::set<std::string>& alpha_methods) {
  std::map<std::string, double> out;
  for (const auto& t : traces) {
    if (t.budget.kind != Budget::Kind::kIterations || !alpha_methods.contains(t.method)) continue;
    if (t.records.size() < t.budget.iterations) continue;
    const double c = t.total_cost();
    auto [it, fresh] = out.emplace(t.problem, c);
    if (!fresh) it->second = std::min(it->second, c);
  }
  return out;
}

struct RankRow {
  double multiple = 0.0;
  std::string method;
  double mean_rank = 0.0;
  Interval ci;
  std::size_t cells = 0;  // (problem, seed) pairs
  double mean_regret = 0.0;
};

/// Ranks cost-budgeted runs by constrained_best at each multiple of the
/// problem's minimal budget.
inline std::vector<RankRow> rank_table(const std::vector<StoredTrace>& traces,
                                       const std::map<std::string, double>& budgets,
                                       std::span<const double> multiples, std::uint64_t boot_seed) {
  std::vector<std::string> methods;
  std::map<std::tuple<std::string, std::uint64_t, std::string>, const StoredTrace*> by;
  std::set<std::pair<std::string, std::uint64_t>> cells;
  for (const auto& t : traces) {
    if (t.budget.kind != Budget::Kind::kSimulatedCost) continue;
    if (std::find(methods.begin(), methods.end(), t.method) == methods.end()) methods.push_back(t.method);
    by[{t.problem, t.seed, t.method}] = &t;
    cells.insert({t.problem, t.seed});
  }
  if (methods.empty()) throw HarnessError("rank: no cost-budgeted traces");
  std::vector<RankRow> rows;
  for (std::size_t mi = 0; mi < multiples.size(); ++mi) {
    const double mult = multiples[mi];
    std::vector<std::vector<double>> ranks(methods.size()), regrets(methods.size());
    for (const auto& [problem, seed] : cells) {
      const auto b = budgets.find(problem);
      if (b == budgets.end()) throw HarnessError("rank: no minimal budget for " + problem);
      std::vector<double> ys;
      for (const auto& m : methods) {
        const auto it = by.find({problem, seed, m});
        if (it == by.end()) {
          throw HarnessError("rank: missing trace " + problem + " / " + m + " / seed " + std::to_string(seed));
        }
        ys.push_back(constrained_best(it->second->records, mult * b->second).y);
      }
      const auto r = average_ranks(ys);
      for (std::size_t k = 0; k < methods.size(); ++k) {
        ranks[k].push_back(r[k]);
        regrets[k].push_back(by.at({problem, seed, methods[k]})->regret(ys[k]));
      }
    }
    for (std::size_t k = 0; k < methods.size(); ++k) {
      RankRow row;
      row.multiple = mult;
      row.method = methods[k];
      row.mean_rank = mean_of(ranks[k]);
      row.ci = bootstrap_mean_ci(ranks[k], boot_seed + 31 * mi + k);
      row.cells = ranks[k].size();
      row.mean_regret = mean_of(regrets[k]);
      rows.push_back(row);
    }
  }
  return rows;
}

inline constexpr const char* kRankHeader = "budget_multiple,method,mean_rank,ci_lo,ci_hi,cells,mean_regret";

inline std::string csv_row(const RankRow& r) {
  std::ostringstream os;
  os << std::setprecision(10) << r.multiple << ',' << r.method << ',' << r.mean_rank << ',' << r.ci.lo << ','
     << r.ci.hi << ',' << r.cells << ',' << r.mean_regret;
  return os.str();
}

/// Alpha-grid runs with the iteration budget; they fix the minimal budgets.
inline std::vector<RunJob> reference_jobs(const ExperimentSpec& spec) {
  std::vector<RunJob> jobs;
  for (const auto& p : make_suite(spec.suite)) {
    for (const auto& k : spec.alpha_grid()) {
      for (std::size_t s = 0; s < spec.seeds; ++s) {
        jobs.push_back({p, spec.run_config(k, spec.first_seed + s, Budget::iterations_of(spec.iterations))});
      }
    }
  }
  return jobs;
}

/// Every method with a cost budget of max(multiples) x the minimal budget.
inline std::vector<RunJob> allocation_jobs(const ExperimentSpec& spec, const std::map<std::string, double>& budgets) {
  const double top = *std::max_element(spec.multiples.begin(), spec.multiples.end());
  std::vector<RunJob> jobs;
  for (const auto& p : make_suite(spec.suite)) {
    const auto b = budgets.find(p.name());
    if (b == budgets.end()) throw HarnessError("no minimal budget for " + p.name());
    auto methods = spec.methods();
    if (std::none_of(methods.begin(), methods.end(),
                     [](const auto& k) { return k.type == AcquisitionKind::Type::kEICool; }) &&
        std::find(spec.baselines.begin(), spec.baselines.end(), "eicool") != spec.baselines.end()) {
      methods.push_back(AcquisitionKind{AcquisitionKind::Type::kEICool});
    }
    for (const auto& k : methods) {
      for (std::size_t s = 0; s < spec.seeds; ++s) {
        jobs.push_back({p, spec.run_config(k, spec.first_seed + s, Budget::simulated_cost(top * b->second))});
      }
    }
  }
  return jobs;
}

// --- cost-model evaluation -----------------------------------------------------------

struct CostEvalSpec {
  std::vector<CostModelKind> kinds{CostModelKind::warped_gp(), CostModelKind::lv(1),
                                   CostModelKind::lv(2),       CostModelKind::lv(3),
                                   CostModelKind::gplv(3),     CostModelKind::limited_gp3(),
                                   CostModelKind::transfer_task_aware(), CostModelKind::transfer_naive()};
  std::vector<std::size_t> n_train{4, 8, 16, 32};
  std::size_t seeds = 20;
  std::uint64_t first_seed = 0;
  std::size_t test_size = 200;
  MultiplicativeCostLaw law;
  std::size_t tasks = 5;
  std::size_t per_task = 50;
  std::optional<TransferDataset> data;  // recorded tasks instead of the synthetic generators
  std::optional<SearchSpace> space;     // space of the recorded configs; XGBoost space if unset
  std::uint64_t bootstrap_seed = 20260101;
};

struct CostEvalRow {
  std::string kind;
  std::size_t n_train = 0;  // 0 for transfer models: no target-task data
  std::size_t count = 0;
  double mean_rmse = 0.0;
  Interval ci;
};

namespace detail {

inline std::vector<double> online_rmse(const CostEvalSpec& spec, const CostModelKind& kind, std::size_t n,
                                       std::vector<std::string>* warnings) {
  const auto space = spec.space ? *spec.space : xgboost_space();
  std::vector<double> out;
  for (std::size_t s = 0; s < spec.seeds; ++s) {
    std::mt19937_64 rng(spec.first_seed + s);
    if (!spec.data) {
      const auto train = multiplicative_cost_samples(spec.law, n, rng);
      const auto test = multiplicative_cost_samples(spec.law, spec.test_size, rng);
      std::mt19937_64 fit_rng(1000003 * (spec.first_seed + s) + 17);
      out.push_back(cost_rmse(fit_cost_model(kind, space, train, fit_rng), test));
      continue;
    }
    for (std::size_t t = 0; t < spec.data->size(); ++t) {
      auto rows = (*spec.data)[t].samples;
      if (n >= rows.size()) {
        if (warnings && s == 0) {
          warnings->push_back("task " + std::to_string(t) + ": n_train " + std::to_string(n) + " exceeds " +
                              std::to_string(rows.size()) + " rows; skipped");
        }
        continue;
      }
      std::shuffle(rows.begin(), rows.end(), rng);
      const std::span<const CostSample> all(rows);
      out.push_back(cost_rmse(fit_cost_model(kind, space, all.first(n), rng), all.subspan(n)));
    }
  }
  return out;
}

inline std::vector<double> transfer_rmse(const CostEvalSpec& spec, const CostModelKind& kind) {
  const auto space = spec.space ? *spec.space : xgboost_space();
  std::vector<double> out;
  const std::size_t reps = spec.data ? 1 : spec.seeds;
  for (std::size_t s = 0; s < reps; ++s) {
    std::mt19937_64 rng(spec.first_seed + s);
    const auto data = spec.data ? *spec.data : multi_task_cost_dataset(spec.tasks, spec.per_task, rng);
    if (data.size() < 2) throw DataError("transfer evaluation needs at least two tasks");
    for (std::size_t held = 0; held < data.size(); ++held) {
      TransferDataset rest;
      for (std::size_t t = 0; t < data.size(); ++t) {
        if (t != held) rest.push_back(data[t]);
      }
      const auto m = transfer_fit(space, rest, kind);
      out.push_back(cost_rmse(m, data[held].samples, &data[held].meta));
    }
  }
  return out;
}

}  // namespace detail

inline std::vector<CostEvalRow> cost_eval(const CostEvalSpec& spec, std::vector<std::string>* warnings = nullptr) {
  std::vector<CostEvalRow> rows;
  std::uint64_t k = 0;
  for (const auto& kind : spec.kinds) {
    if (kind.is_transfer()) {
      const auto v = detail::transfer_rmse(spec, kind);
      rows.push_back({kind.name(), 0, v.size(), mean_of(v), bootstrap_mean_ci(v, spec.bootstrap_seed + k++)});
      continue;
    }
    for (std::size_t n : spec.n_train) {
      const auto v = detail::online_rmse(spec, kind, n, warnings);
      if (v.empty()) continue;
      rows.push_back({kind.name(), n, v.size(), mean_of(v), bootstrap_mean_ci(v, spec.bootstrap_seed + k++)});
    }
  }
  return rows;
}

inline constexpr const char* kCostEvalHeader = "model,n_train,count,mean_log_rmse,ci_lo,ci_hi";

inline std::string csv_row(const CostEvalRow& r) {
  std::ostringstream os;
  os << std::setprecision(10) << r.kind << ',' << r.n_train << ',' << r.count << ',' << r.mean_rmse << ','
     << r.ci.lo << ',' << r.ci.hi;
  return os.str();
}

// --- Pareto-front tracing ---------------------------------------------------------------

struct FrontRow {
  std::size_t iteration = 0;
  double ei = 0.0;
  double cost = 0.0;
  std::optional<bool> survived;  // unknown for the last front
};

struct MarkerRow {
  std::size_t iteration = 0;
  double alpha = 0.0;
  std::size_t index = 0;  // into that iteration's candidate set
  double ei = 0.0;
  double cost = 0.0;
};

struct PersistenceRow {
  std::size_t iteration = 0;  // iteration whose models re-scored the previous front
  std::size_t survived = 0;
  std::size_t total = 0;
};

struct ImpliedAlphaRow {
  std::size_t iteration = 0;
  std::optional<ImpliedAlpha> implied;
};

struct ParetoTraceOutput {
  StoredTrace trace;
  std::vector<FrontRow> fronts;
  std::vector<MarkerRow> markers;
  std::vector<PersistenceRow> persistence;
  std::vector<ImpliedAlphaRow> implied;  // CEI runs only
};

inline const std::vector<double>& marker_alphas() {
  static const std::vector<double> a{0.0, 0.25, 0.5, 1.0};
  return a;
}

inline ParetoTraceOutput pareto_trace(BlackBox& box, const RunConfig& cfg) {
  ParetoTraceOutput out;
  std::optional<FrontSnapshot> prev;
  std::size_t prev_rows = 0;  // start of the previous front in out.fronts
  const SearchSpace& space = box.space();
  const bool cei = cfg.acquisition.type == AcquisitionKind::Type::kCEI;
  auto observer = [&](const StepContext& ctx) {
    const auto& sel = ctx.selection;
    std::vector<Candidate> front;
    for (std::size_t i : sel.front) front.push_back(sel.candidates[i]);
    if (prev) {
      const auto stat = front_persistence(space, *prev, ctx.surrogate, ctx.cost_model, ctx.f_min, front,
                                          ctx.cost_floor);
      out.persistence.push_back({ctx.record.iteration, stat.survived, stat.total});
      for (std::size_t i = 0; i < stat.survived_flags.size(); ++i) {
        out.fronts[prev_rows + i].survived = stat.survived_flags[i];
      }
    }
    prev_rows = out.fronts.size();
    for (const auto& c : front) out.fronts.push_back({ctx.record.iteration, c.ei, c.cost_pred, std::nullopt});
    for (double a : marker_alphas()) {
      const auto idx = detail::argmax_scaled(sel.candidates, a);
      out.markers.push_back({ctx.record.iteration, a, idx, sel.candidates[idx].ei, sel.candidates[idx].cost_pred});
    }
    if (cei) out.implied.push_back({ctx.record.iteration, ctx.record.implied_alpha});
    prev = FrontSnapshot{ctx.record.iteration, std::move(front)};
  };
  auto t = run(box, cfg, observer);
  out.trace = stored_trace(t, box.known_minimum());
  return out;
}

}  // namespace costbo

#endif  // COSTBO_EXPERIMENTS_HPP
