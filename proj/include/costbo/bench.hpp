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

#ifndef COSTBO_BENCH_HPP
#define COSTBO_BENCH_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "costbo/cost.hpp"
#include "costbo/csv.hpp"
#include "costbo/error.hpp"
#include "costbo/space.hpp"

namespace costbo {

struct Evaluation {
  double y = 0.0;
  double cost = 1.0;
};

/// Thrown by a black box whose evaluation failed but still consumed budget.
class EvaluationFailure : public Error {
 public:
  EvaluationFailure(const std::string& what, double cost)
      : Error(ErrorKind::kData, what), cost_(cost) {}
  double cost() const { return cost_; }

 private:
  double cost_;
};

class BlackBox {
 public:
  virtual ~BlackBox() = default;
  virtual const SearchSpace& space() const = 0;
  virtual Evaluation evaluate(const UnitPoint& x) = 0;
  virtual std::string descriptor() const = 0;
  virtual std::optional<double> known_minimum() const { return std::nullopt; }
  /// Unit coordinates of every admissible point in table-replay mode.
  virtual const std::vector<UnitPoint>* table_points() const { return nullptr; }
};

// --- objectives --------------------------------------------------------------

struct Objective {
  std::string name;
  SearchSpace space;
  double minimum = 0.0;
  std::vector<std::vector<double>> minimizers;  // native coordinates
  double (*fn)(const std::vector<double>&) = nullptr;
};

namespace objectives {

inline double branin(const std::vector<double>& x) {
  constexpr double pi = std::numbers::pi;
  const double b = 5.1 / (4.0 * pi * pi), c = 5.0 / pi, t = 1.0 / (8.0 * pi);
  const double u = x[1] - b * x[0] * x[0] + c * x[0] - 6.0;
  return u * u + 10.0 * (1.0 - t) * std::cos(x[0]) + 10.0;
}

template <std::size_t D>
double hartmann(const std::vector<double>& x, const double (&A)[4][D], const double (&P)[4][D]) {
  static constexpr double alpha[4] = {1.0, 1.2, 3.0, 3.2};
  double s = 0.0;
  for (int i = 0; i < 4; ++i) {
    double inner = 0.0;
    for (std::size_t j = 0; j < D; ++j) inner += A[i][j] * (x[j] - P[i][j]) * (x[j] - P[i][j]);
    s -= alpha[i] * std::exp(-inner);
  }
  return s;
}

inline double hartmann3(const std::vector<double>& x) {
  static constexpr double A[4][3] = {{3.0, 10.0, 30.0}, {0.1, 10.0, 35.0}, {3.0, 10.0, 30.0}, {0.1, 10.0, 35.0}};
  static constexpr double P[4][3] = {{0.3689, 0.1170, 0.2673},
                                     {0.4699, 0.4387, 0.7470},
                                     {0.1091, 0.8732, 0.5547},
                                     {0.0381, 0.5743, 0.8828}};
  return hartmann<3>(x, A, P);
}

inline double hartmann6(const std::vector<double>& x) {
  static constexpr double A[4][6] = {{10.0, 3.0, 17.0, 3.5, 1.7, 8.0},
                                     {0.05, 10.0, 17.0, 0.1, 8.0, 14.0},
                                     {3.0, 3.5, 1.7, 10.0, 17.0, 8.0},
                                     {17.0, 8.0, 0.05, 10.0, 0.1, 14.0}};
  static constexpr double P[4][6] = {{0.1312, 0.1696, 0.5569, 0.0124, 0.8283, 0.5886},
                                     {0.2329, 0.4135, 0.8307, 0.3736, 0.1004, 0.9991},
                                     {0.2348, 0.1451, 0.3522, 0.2883, 0.3047, 0.6650},
                                     {0.4047, 0.8828, 0.8732, 0.5743, 0.1091, 0.0381}};
  return hartmann<6>(x, A, P);
}

inline double rosenbrock(const std::vector<double>& x) {
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < x.size(); ++i) {
    s += 100.0 * std::pow(x[i + 1] - x[i] * x[i], 2) + std::pow(1.0 - x[i], 2);
  }
  return s;
}

}  // namespace objectives

inline SearchSpace box_space(std::size_t d, double lo, double hi) {
  std::vector<Dimension> dims;
  for (std::size_t i = 0; i < d; ++i) dims.push_back(Dimension::continuous("x" + std::to_string(i + 1), lo, hi));
  return SearchSpace(std::move(dims));
}

/// Known test functions: branin, hartmann3, hartmann6, rosenbrock (2-d).
inline Objective make_objective(const std::string& id) {
  if (id == "branin") {
    return {id,
            SearchSpace({Dimension::continuous("x1", -5.0, 10.0), Dimension::continuous("x2", 0.0, 15.0)}),
            0.39788735772973816,
            {{-std::numbers::pi, 12.275}, {std::numbers::pi, 2.275}, {3.0 * std::numbers::pi, 2.475}},
            &objectives::branin};
  }
  if (id == "hartmann3") {
    return {id, box_space(3, 0.0, 1.0), -3.8627797869493365, {{0.114614, 0.555649, 0.852547}},
            &objectives::hartmann3};
  }
  if (id == "hartmann6") {
    return {id, box_space(6, 0.0, 1.0), -3.3223680114155147,
            {{0.20169, 0.150011, 0.476874, 0.275332, 0.311652, 0.6573}}, &objectives::hartmann6};
  }
  if (id == "rosenbrock") {
    return {id, box_space(2, -5.0, 10.0), 0.0, {{1.0, 1.0}}, &objectives::rosenbrock};
  }
  throw ConfigError("unknown objective '" + id + "'");
}

// --- cost surfaces -------------------------------------------------------------

struct ExpLinearCost {
  double intercept = 0.0;
  std::vector<double> coefficients;  // per unit coordinate; missing = 0
};
struct PolynomialCost {
  std::vector<double> coefficients;  // c_0 .. c_degree in the mean unit coordinate
};
struct ExpensiveOptimumCost {
  double base = 1.0;
  double contrast = 20.0;
};
struct CheapOptimumCost {
  double base = 1.0;
  double contrast = 20.0;
};

using CostSurface = std::variant<ExpLinearCost, PolynomialCost, ExpensiveOptimumCost, CheapOptimumCost>;

inline std::string cost_surface_name(const CostSurface& s) {
  switch (s.index()) {
    case 0: return "exp_linear";
    case 1: return "polynomial";
    case 2: return "expensive_optimum";
    default: return "cheap_optimum";
  }
}

/// Default parameters for each named surface family.
inline CostSurface make_cost_surface(const std::string& name, std::size_t dim) {
  if (name == "exp_linear") {
    ExpLinearCost c;
    c.coefficients.assign(dim, 0.0);
    c.coefficients[0] = std::log(20.0);
    if (dim > 1) c.coefficients[1] = std::log(4.0);
    return c;
  }
  if (name == "polynomial") return PolynomialCost{{1.0, 4.0, 16.0}};
  if (name == "expensive_optimum") return ExpensiveOptimumCost{};
  if (name == "cheap_optimum") return CheapOptimumCost{};
  throw ConfigError("unknown cost surface '" + name + "'");
}

class CostSurfaceEvaluator {
 public:
  CostSurfaceEvaluator(CostSurface surface, std::vector<UnitPoint> optima)
      : surface_(std::move(surface)), optima_(std::move(optima)) {
    std::visit([](const auto& s) { validate(s); }, surface_);
    if (!optima_.empty()) {
      const std::size_t d = optima_.front().size();
      for (std::size_t mask = 0; mask < (std::size_t{1} << d); ++mask) {
        UnitPoint corner{std::vector<double>(d)};
        for (std::size_t j = 0; j < d; ++j) corner[j] = (mask >> j) & 1U ? 1.0 : 0.0;
        max_distance_ = std::max(max_distance_, distance(corner));
      }
    }
  }

  double operator()(const UnitPoint& u) const {
    return std::visit([&](const auto& s) { return eval(s, u); }, surface_);
  }

  const CostSurface& surface() const { return surface_; }

 private:
  static void validate(const ExpLinearCost& c) {
    for (double v : c.coefficients) {
      if (!std::isfinite(v)) throw ConfigError("exp_linear: non-finite coefficient");
    }
  }
  static void validate(const PolynomialCost& c) {
    if (c.coefficients.empty() || !(c.coefficients[0] > 0.0)) {
      throw ConfigError("polynomial cost: constant term must be > 0");
    }
    for (double v : c.coefficients) {
      if (!(v >= 0.0)) throw ConfigError("polynomial cost: coefficients must be >= 0");
    }
  }
  template <typename T>
  static void validate(const T& c) {
    if (!(c.base > 0.0)) throw ConfigError("cost surface: base must be > 0");
    if (!(c.contrast > 1.0)) throw ConfigError("cost surface: contrast must be > 1");
  }

  double distance(const UnitPoint& u) const {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& o : optima_) {
      double s = 0.0;
      for (std::size_t j = 0; j < u.size(); ++j) s += (u[j] - o[j]) * (u[j] - o[j]);
      best = std::min(best, std::sqrt(s));
    }
    return best;
  }

  double eval(const ExpLinearCost& c, const UnitPoint& u) const {
    double v = c.intercept;
    for (std::size_t j = 0; j < std::min(u.size(), c.coefficients.size()); ++j) v += c.coefficients[j] * u[j];
    return std::exp(v);
  }
  double eval(const PolynomialCost& c, const UnitPoint& u) const {
    double m = 0.0;
    for (double v : u.coords) m += v;
    m /= static_cast<double>(u.size());
    double v = 0.0, p = 1.0;
    for (double coef : c.coefficients) {
      v += coef * p;
      p *= m;
    }
    return v;
  }
  // Peak cost base * contrast at the optimum, falling to base at the farthest corner.
  double eval(const ExpensiveOptimumCost& c, const UnitPoint& u) const {
    return c.base * std::pow(c.contrast, 1.0 - std::min(1.0, distance(u) / max_distance_));
  }
  double eval(const CheapOptimumCost& c, const UnitPoint& u) const {
    return c.base * std::pow(c.contrast, std::min(1.0, distance(u) / max_distance_));
  }

  CostSurface surface_;
  std::vector<UnitPoint> optima_;
  double max_distance_ = 1.0;
};

// --- synthetic black box -------------------------------------------------------

class SyntheticBlackBox final : public BlackBox {
 public:
  SyntheticBlackBox(Objective objective, CostSurface cost, double noise_sd, std::uint64_t seed)
      : objective_(std::move(objective)),
        cost_(std::move(cost), unit_optima(objective_)),
        noise_sd_(noise_sd),
        rng_(seed) {
    if (!(noise_sd_ >= 0.0)) throw ConfigError("noise_sd must be >= 0");
  }

  const SearchSpace& space() const override { return objective_.space; }

  Evaluation evaluate(const UnitPoint& x) override {
    const auto cfg = from_unit(objective_.space, x);
    double y = objective_.fn(cfg.values);
    if (noise_sd_ > 0.0) y += std::normal_distribution<double>(0.0, noise_sd_)(rng_);
    return {y, cost_(x)};
  }

  std::string descriptor() const override {
    return objective_.name + "/" + cost_surface_name(cost_.surface());
  }
  std::optional<double> known_minimum() const override { return objective_.minimum; }
  const Objective& objective() const { return objective_; }
  double cost_at(const UnitPoint& x) const { return cost_(x); }

 private:
  static std::vector<UnitPoint> unit_optima(const Objective& o) {
    std::vector<UnitPoint> out;
    for (const auto& m : o.minimizers) out.push_back(to_unit(o.space, NativeConfig(m)));
    return out;
  }

  Objective objective_;
  CostSurfaceEvaluator cost_;
  double noise_sd_;
  std::mt19937_64 rng_;
};

inline std::unique_ptr<SyntheticBlackBox> make_synthetic(const std::string& objective, CostSurface cost,
                                                         double noise_sd, std::uint64_t seed) {
  return std::make_unique<SyntheticBlackBox>(make_objective(objective), std::move(cost), noise_sd, seed);
}

// --- tabular replay ------------------------------------------------------------

struct TabularRow {
  NativeConfig config;
  double y = 0.0;
  double cost = 1.0;
};

class TabularBlackBox final : public BlackBox {
 public:
  TabularBlackBox(SearchSpace space, std::vector<TabularRow> rows, std::string name,
                  double tolerance = 1e-9, bool table_mode = true)
      : space_(std::move(space)), rows_(std::move(rows)), name_(std::move(name)),
        tolerance_(tolerance), table_mode_(table_mode) {
    if (rows_.empty()) throw DataError("tabular problem has no rows");
    for (const auto& r : rows_) {
      if (!(r.cost > 0.0) || !std::isfinite(r.cost) || !std::isfinite(r.y)) {
        throw DataError("tabular rows need finite y and cost > 0");
      }
      unit_rows_.push_back(to_unit(space_, r.config));
    }
  }

  const SearchSpace& space() const override { return space_; }

  /// Index of the nearest row (Euclidean, unit coordinates; first on ties).
  std::size_t nearest(const UnitPoint& x) const {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < unit_rows_.size(); ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < x.size(); ++j) s += (x[j] - unit_rows_[i][j]) * (x[j] - unit_rows_[i][j]);
      if (s < best_d) {
        best_d = s;
        best = i;
      }
    }
    return best;
  }

  Evaluation evaluate(const UnitPoint& x) override {
    if (x.size() != space_.size()) throw OutOfTableError("query dimension mismatch");
    const std::size_t i = nearest(x);
    double s = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) s += (x[j] - unit_rows_[i][j]) * (x[j] - unit_rows_[i][j]);
    if (std::sqrt(s) > tolerance_) {
      throw OutOfTableError("query is " + std::to_string(std::sqrt(s)) + " from the nearest table row");
    }
    return {rows_[i].y, rows_[i].cost};
  }

  std::string descriptor() const override { return "table/" + name_; }
  std::optional<double> known_minimum() const override {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& r : rows_) m = std::min(m, r.y);
    return m;
  }
  const std::vector<UnitPoint>* table_points() const override {
    return table_mode_ ? &unit_rows_ : nullptr;
  }
  const std::vector<TabularRow>& rows() const { return rows_; }

 private:
  SearchSpace space_;
  std::vector<TabularRow> rows_;
  std::vector<UnitPoint> unit_rows_;
  std::string name_;
  double tolerance_;
  bool table_mode_;
};

/// Loads a table: one column per dimension (native units, by name), then
/// `y`, then `cost`; header row required.
inline std::unique_ptr<TabularBlackBox> load_tabular(const std::string& path, const SearchSpace& space,
                                                     double tolerance = 1e-9, bool table_mode = true) {
  const auto t = csv::read_numeric(path);
  std::vector<std::ptrdiff_t> cols;
  for (const auto& d : space.dims()) {
    const auto c = t.column(d.name);
    if (c < 0) throw DataError(path + ": missing column '" + d.name + "'");
    cols.push_back(c);
  }
  const auto yc = t.column("y"), cc = t.column("cost");
  if (yc < 0 || cc < 0) throw DataError(path + ": columns 'y' and 'cost' are required");
  std::vector<TabularRow> rows;
  for (const auto& row : t.rows) {
    NativeConfig cfg{std::vector<double>(space.size())};
    for (std::size_t j = 0; j < space.size(); ++j) cfg[j] = row[static_cast<std::size_t>(cols[j])];
    rows.push_back({cfg, row[static_cast<std::size_t>(yc)], row[static_cast<std::size_t>(cc)]});
  }
  if (rows.empty()) throw DataError(path + ": no data rows");
  auto name = path.substr(path.find_last_of('/') + 1);
  return std::make_unique<TabularBlackBox>(space, std::move(rows), name, tolerance, table_mode);
}

// --- problem suites ------------------------------------------------------------

struct ProblemSpec {
  std::string objective;
  std::string cost_surface;
  double noise_sd = 0.0;

  std::string name() const { return objective + "/" + cost_surface; }
  std::unique_ptr<SyntheticBlackBox> make(std::uint64_t seed) const {
    const auto obj = make_objective(objective);
    return make_synthetic(objective, make_cost_surface(cost_surface, obj.space.size()), noise_sd, seed);
  }
};

/// Named suites: "default" = {branin, hartmann3} x {exp_linear,
/// expensive_optimum, cheap_optimum}; "expensive" = the expensive_optimum
/// half; otherwise a comma list of objective/surface pairs.
inline std::vector<ProblemSpec> make_suite(const std::string& name) {
  const std::vector<std::string> objs{"branin", "hartmann3"};
  std::vector<ProblemSpec> out;
  if (name == "default") {
    for (const auto& o : objs)
      for (const auto* c : {"exp_linear", "expensive_optimum", "cheap_optimum"}) out.push_back({o, c});
    return out;
  }
  if (name == "expensive") {
    for (const auto& o : objs) out.push_back({o, "expensive_optimum"});
    return out;
  }
  std::size_t start = 0;
  while (start <= name.size()) {
    const auto end = std::min(name.find(',', start), name.size());
    const auto item = csv::trim(name.substr(start, end - start));
    const auto slash = item.find('/');
    if (slash == std::string::npos) throw ConfigError("suite item '" + item + "' is not objective/surface");
    ProblemSpec p{item.substr(0, slash), item.substr(slash + 1)};
    const auto obj = make_objective(p.objective);
    make_cost_surface(p.cost_surface, obj.space.size());
    out.push_back(p);
    start = end + 1;
  }
  return out;
}

// --- synthetic cost datasets ---------------------------------------------------

/// Multiplicative XGBoost-like training cost, proportional to the work done
/// (rounds x depth x sampled rows), with one interaction term:
/// log c = -3 + log(rounds) + log(depth) + log(subsample)
///         + interaction * log(rounds) log(depth) + noise.
struct MultiplicativeCostLaw {
  double interaction = 0.1;
  double noise_sd = 0.1;

  double log_cost(const SearchSpace& s, const NativeConfig& c) const {
    const double lr = std::log(c[s.index_of("num_round")]);
    const double ld = std::log(c[s.index_of("max_depth")]);
    const double ls = std::log(c[s.index_of("subsample")]);
    return -3.0 + lr + ld + ls + interaction * lr * ld;
  }
};

inline std::vector<CostSample> multiplicative_cost_samples(const MultiplicativeCostLaw& law, std::size_t n,
                                                           std::mt19937_64& rng) {
  const auto space = xgboost_space();
  std::normal_distribution<double> noise(0.0, law.noise_sd);
  std::vector<CostSample> out;
  for (const auto& u : sample_uniform(space, rng, n)) {
    auto cfg = from_unit(space, u);
    const double e = law.noise_sd > 0.0 ? noise(rng) : 0.0;
    out.push_back({cfg, std::exp(law.log_cost(space, cfg) + e)});
  }
  return out;
}

/// Related tasks whose costs scale with dataset size: the multiplicative law
/// plus 0.9 log(n_rows) + 0.4 log(n_cols) + 0.2 log(1 + n_classes).
inline TransferDataset multi_task_cost_dataset(std::size_t n_tasks, std::size_t per_task, std::mt19937_64& rng,
                                               double noise_sd = 0.1) {
  const auto space = xgboost_space();
  MultiplicativeCostLaw law{0.0, 0.0};
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, noise_sd);
  TransferDataset out;
  for (std::size_t t = 0; t < n_tasks; ++t) {
    MetaFeatures mf;
    mf.n_rows = std::round(std::exp(std::log(100.0) + unif(rng) * (std::log(1e5) - std::log(100.0))));
    mf.n_cols = std::round(std::exp(std::log(5.0) + unif(rng) * (std::log(500.0) - std::log(5.0))));
    mf.n_classes = std::floor(unif(rng) * 6.0) * 2.0;
    TransferTask task{mf, {}};
    const double task_term = -7.0 + 0.9 * std::log(mf.n_rows) + 0.4 * std::log(mf.n_cols) +
                             0.2 * std::log1p(mf.n_classes);
    for (const auto& u : sample_uniform(space, rng, per_task)) {
      auto cfg = from_unit(space, u);
      const double e = noise_sd > 0.0 ? noise(rng) : 0.0;
      task.samples.push_back({cfg, std::exp(task_term + law.log_cost(space, cfg) + e)});
    }
    out.push_back(std::move(task));
  }
  return out;
}

}  // namespace costbo

#endif  // COSTBO_BENCH_HPP
