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

#ifndef COSTBO_ACQUISITION_HPP
#define COSTBO_ACQUISITION_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <boost/random/sobol.hpp>

#include "costbo/cost.hpp"
#include "costbo/error.hpp"
#include "costbo/space.hpp"
#include "costbo/surrogate.hpp"

namespace costbo {

// --- expected improvement ------------------------------------------------

inline double normal_pdf(double z) {
  return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

/// Expected improvement of a Gaussian N(mu, sigma^2) below the incumbent f_min.
inline double ei(double mu, double sigma, double f_min) {
  if (!std::isfinite(mu) || !std::isfinite(sigma) || !std::isfinite(f_min)) {
    throw NumericError("ei: non-finite input");
  }
  if (sigma < 0.0) throw NumericError("ei: sigma must be >= 0");
  const double gap = f_min - mu;
  if (sigma == 0.0) return std::max(0.0, gap);
  const double z = gap / sigma;
  double h;
  if (z < -30.0) {
    // phi(z) (z Phi(z) / phi(z) + 1) through the Mills-ratio series.
    const double iz2 = 1.0 / (z * z);
    h = normal_pdf(z) * iz2 * (1.0 - 3.0 * iz2 + 15.0 * iz2 * iz2 - 105.0 * iz2 * iz2 * iz2);
  } else {
    h = z * normal_cdf(z) + normal_pdf(z);
  }
  return std::max(0.0, sigma * h);
}

struct EiGradient {
  double d_mu = 0.0;
  double d_sigma = 0.0;
  double d_f_min = 0.0;
};

inline EiGradient ei_gradient(double mu, double sigma, double f_min) {
  if (!(sigma > 0.0)) {
    const double step = f_min > mu ? 1.0 : 0.0;
    return {-step, 0.0, step};
  }
  const double z = (f_min - mu) / sigma;
  return {-normal_cdf(z), normal_pdf(z), normal_cdf(z)};
}

// --- acquisition kinds ---------------------------------------------------

struct AcquisitionKind {
  enum class Type { kEI, kEIpu, kEICool, kEIAlpha, kCEI };

  Type type = Type::kEI;
  double alpha = 0.0;         // EIAlpha
  double lambda = 0.0;        // CEI
  double total_budget = 0.0;  // EICool tau
  double init_budget = 0.0;   // EICool tau_init

  static AcquisitionKind ei() { return {}; }
  static AcquisitionKind eipu() { return {Type::kEIpu}; }
  static AcquisitionKind ei_alpha(double a) { return {Type::kEIAlpha, a}; }
  static AcquisitionKind cei(double l) { return {Type::kCEI, 0.0, l}; }
  static AcquisitionKind ei_cool(double tau, double tau_init = 0.0) {
    return {Type::kEICool, 0.0, 0.0, tau, tau_init};
  }

  void validate() const {
    switch (type) {
      case Type::kEIAlpha:
        if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw ConfigError("EI_alpha: alpha must be >= 0");
        break;
      case Type::kCEI:
        if (!(lambda >= 0.0 && lambda <= 1.0)) throw ConfigError("CEI: lambda must be in [0, 1]");
        break;
      case Type::kEICool:
        if (!(init_budget >= 0.0) || !(total_budget > init_budget)) {
          throw ConfigError("EI-cool: requires total budget > initial budget >= 0");
        }
        break;
      default: break;
    }
  }

  std::string name() const {
    auto num = [](double v) {
      std::string s = std::to_string(v);
      s.erase(s.find_last_not_of('0') + 1);
      if (s.back() == '.') s.pop_back();
      return s;
    };
    switch (type) {
      case Type::kEI: return "ei";
      case Type::kEIpu: return "eipu";
      case Type::kEICool: return "eicool";
      case Type::kEIAlpha: return "ei_alpha_" + num(alpha);
      case Type::kCEI: return "cei_" + num(lambda);
    }
    return "unknown";
  }

  /// Parses "ei", "eipu", "eicool", "ei_alpha_<a>" / "alpha:<a>",
  /// "cei_<l>" / "cei:<l>".
  static AcquisitionKind parse(const std::string& s) {
    auto number = [&](const std::string& tail) {
      try {
        std::size_t used = 0;
        const double v = std::stod(tail, &used);
        if (used != tail.size()) throw std::invalid_argument(tail);
        return v;
      } catch (const std::exception&) {
        throw ConfigError("acquisition '" + s + "': bad number");
      }
    };
    AcquisitionKind k;
    if (s == "ei") {
      k = ei();
    } else if (s == "eipu") {
      k = eipu();
    } else if (s == "eicool") {
      k = AcquisitionKind{Type::kEICool};
    } else if (s.rfind("ei_alpha_", 0) == 0) {
      k = ei_alpha(number(s.substr(9)));
    } else if (s.rfind("alpha:", 0) == 0) {
      k = ei_alpha(number(s.substr(6)));
    } else if (s.rfind("cei_", 0) == 0 || s.rfind("cei:", 0) == 0) {
      k = cei(number(s.substr(4)));
    } else {
      throw ConfigError("unknown acquisition '" + s + "'");
    }
    if (k.type != Type::kEICool) k.validate();
    return k;
  }

  friend bool operator==(const AcquisitionKind&, const AcquisitionKind&) = default;
};

/// EI-cool exponent (tau - tau_k) / (tau - tau_init), clamped to [0, 1].
inline double ei_cool_alpha(double tau, double tau_init, double tau_k) {
  if (!(tau > tau_init)) throw ConfigError("ei_cool_alpha: requires tau > tau_init");
  return std::clamp((tau - tau_k) / (tau - tau_init), 0.0, 1.0);
}

// --- candidates and dominance -------------------------------------------

struct Candidate {
  UnitPoint point;
  double ei = 0.0;
  double cost_pred = 1.0;
};

enum class Dominance { kNone, kWeak, kStrict };

/// Dominance of p over q in the (cost, -EI) plane.
inline Dominance dominates(const Candidate& p, const Candidate& q) {
  if (p.cost_pred <= q.cost_pred && p.ei >= q.ei) {
    return (p.cost_pred < q.cost_pred || p.ei > q.ei) ? Dominance::kStrict : Dominance::kWeak;
  }
  return Dominance::kNone;
}

inline double cost_exponent(const AcquisitionKind& kind, double spent) {
  switch (kind.type) {
    case AcquisitionKind::Type::kEI: return 0.0;
    case AcquisitionKind::Type::kEIpu: return 1.0;
    case AcquisitionKind::Type::kEIAlpha: return kind.alpha;
    case AcquisitionKind::Type::kEICool:
      return ei_cool_alpha(kind.total_budget, kind.init_budget, spent);
    case AcquisitionKind::Type::kCEI: break;
  }
  throw UsageError("CEI has no pointwise score; use cei_select");
}

/// Pointwise acquisition value ei / cost^alpha. For EI-cool, `spent` is the
/// budget consumed so far.
inline double score(const AcquisitionKind& kind, const Candidate& c, double spent = 0.0) {
  const double a = cost_exponent(kind, spent);
  return a == 0.0 ? c.ei : c.ei / std::pow(c.cost_pred, a);
}

/// Indices of candidates not strictly dominated by any other, sorted by
/// ascending cost (then descending EI, then index). Duplicates are kept.
inline std::vector<std::size_t> pareto_front_indices(std::span<const Candidate> cands) {
  std::vector<std::size_t> order(cands.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (cands[a].cost_pred != cands[b].cost_pred) return cands[a].cost_pred < cands[b].cost_pred;
    if (cands[a].ei != cands[b].ei) return cands[a].ei > cands[b].ei;
    return a < b;
  });
  std::vector<std::size_t> front;
  double best_cheaper = -std::numeric_limits<double>::infinity();
  std::size_t i = 0;
  while (i < order.size()) {
    const double cost = cands[order[i]].cost_pred;
    const double group_max = cands[order[i]].ei;
    std::size_t j = i;
    for (; j < order.size() && cands[order[j]].cost_pred == cost; ++j) {
      const double e = cands[order[j]].ei;
      if (e > best_cheaper && e == group_max) front.push_back(order[j]);
    }
    best_cheaper = std::max(best_cheaper, group_max);
    i = j;
  }
  return front;
}

inline std::vector<Candidate> pareto_front(std::span<const Candidate> cands) {
  std::vector<Candidate> out;
  for (std::size_t i : pareto_front_indices(cands)) out.push_back(cands[i]);
  return out;
}

struct SelectionResult {
  std::size_t chosen_index = 0;
  Candidate chosen;
  std::vector<std::size_t> front;  // indices into candidates
  std::optional<double> threshold;  // CEI only
  std::vector<Candidate> candidates;
  double max_ei = 0.0;
  bool degenerate = false;  // every candidate has zero EI
};

namespace detail {

inline void finish_selection(SelectionResult& r) {
  r.chosen = r.candidates[r.chosen_index];
  r.front = pareto_front_indices(r.candidates);
  r.max_ei = 0.0;
  for (const auto& c : r.candidates) r.max_ei = std::max(r.max_ei, c.ei);
  r.degenerate = r.max_ei == 0.0;
}

inline void check_candidates(std::span<const Candidate> cands) {
  if (cands.empty()) throw UsageError("empty candidate set");
  for (const auto& c : cands) {
    if (!(c.ei >= 0.0) || !std::isfinite(c.ei) || !(c.cost_pred > 0.0) || !std::isfinite(c.cost_pred)) {
      throw NumericError("candidate needs finite ei >= 0 and cost > 0");
    }
  }
}

// argmax of ei / cost^alpha; ties go to lower cost, then lower index.
inline std::size_t argmax_scaled(std::span<const Candidate> cands, double alpha) {
  std::size_t best = 0;
  double best_score = -1.0;
  for (std::size_t i = 0; i < cands.size(); ++i) {
    const double s = alpha == 0.0 ? cands[i].ei : cands[i].ei / std::pow(cands[i].cost_pred, alpha);
    if (s > best_score || (s == best_score && cands[i].cost_pred < cands[best].cost_pred)) {
      best = i;
      best_score = s;
    }
  }
  return best;
}

}  // namespace detail

/// CEI: the cheapest candidate whose EI reaches (1 - lambda) max EI; ties
/// go to higher EI, then lower index.
inline SelectionResult cei_select(std::vector<Candidate> cands, double lambda) {
  detail::check_candidates(cands);
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw UsageError("cei_select: lambda must be in [0, 1]");
  SelectionResult r;
  r.candidates = std::move(cands);
  double max_ei = 0.0;
  for (const auto& c : r.candidates) max_ei = std::max(max_ei, c.ei);
  const double threshold = (1.0 - lambda) * max_ei;
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < r.candidates.size(); ++i) {
    const auto& c = r.candidates[i];
    if (c.ei < threshold) continue;
    if (!best) {
      best = i;
      continue;
    }
    const auto& b = r.candidates[*best];
    if (c.cost_pred < b.cost_pred || (c.cost_pred == b.cost_pred && c.ei > b.ei)) best = i;
  }
  r.chosen_index = *best;
  r.threshold = threshold;
  detail::finish_selection(r);
  return r;
}

/// Selection for the pointwise kinds: argmax score with ties to lower cost,
/// then lower index. CEI is delegated to cei_select.
inline SelectionResult select(const AcquisitionKind& kind, std::vector<Candidate> cands, double spent = 0.0) {
  if (kind.type == AcquisitionKind::Type::kCEI) return cei_select(std::move(cands), kind.lambda);
  detail::check_candidates(cands);
  SelectionResult r;
  r.candidates = std::move(cands);
  r.chosen_index = detail::argmax_scaled(r.candidates, cost_exponent(kind, spent));
  detail::finish_selection(r);
  return r;
}

struct ImpliedAlpha {
  double lower = 0.0;
  double upper = 0.0;
  double value = 0.0;  // midpoint of [lower, upper]
};

/// Grid of alpha values scanned by implied_alpha: 0 followed by 200
/// log-spaced values in [1e-3, 8].
inline std::vector<double> implied_alpha_grid() {
  std::vector<double> g{0.0};
  const int n = 200;
  for (int i = 0; i < n; ++i) {
    g.push_back(std::exp(std::log(1e-3) + (std::log(8.0) - std::log(1e-3)) * i / (n - 1)));
  }
  return g;
}

/// The exponent under which EI_alpha would have selected the same candidate:
/// the midpoint of the longest contiguous grid run (first on ties) whose
/// argmax is the chosen index.
inline std::optional<ImpliedAlpha> implied_alpha(const SelectionResult& sel) {
  const auto grid = implied_alpha_grid();
  std::optional<ImpliedAlpha> best;
  std::size_t best_len = 0;
  std::size_t run_start = 0, run_len = 0;
  for (std::size_t g = 0; g <= grid.size(); ++g) {
    const bool hit = g < grid.size() && detail::argmax_scaled(sel.candidates, grid[g]) == sel.chosen_index;
    if (hit) {
      if (run_len == 0) run_start = g;
      ++run_len;
    } else if (run_len > 0) {
      if (run_len > best_len) {
        best_len = run_len;
        const double lo = grid[run_start], hi = grid[run_start + run_len - 1];
        best = ImpliedAlpha{lo, hi, 0.5 * (lo + hi)};
      }
      run_len = 0;
    }
  }
  return best;
}

// --- proposal --------------------------------------------------------------

struct ProposalOptions {
  std::size_t candidate_count = 2048;
  std::size_t perturbations_per_point = 10;
  double perturbation_sd = 0.05;
};

/// Sobol points with a random (Cranley-Patterson) shift drawn from rng.
inline std::vector<UnitPoint> sobol_candidates(std::size_t dim, std::size_t n, std::mt19937_64& rng) {
  boost::random::sobol gen(dim);
  const double scale = 1.0 / (static_cast<double>(gen.max() - gen.min()) + 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<double> shift(dim);
  for (auto& s : shift) s = unif(rng);
  std::vector<UnitPoint> out;
  out.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    UnitPoint p{std::vector<double>(dim)};
    for (std::size_t j = 0; j < dim; ++j) {
      const double v = static_cast<double>(gen() - gen.min()) * scale + shift[j];
      p[j] = v >= 1.0 ? v - 1.0 : v;
    }
    out.push_back(std::move(p));
  }
  return out;
}

/// Candidate points: quasi-random fill plus Gaussian perturbations of each
/// history point, clipped to the cube and snapped to the space's integer grid.
inline std::vector<UnitPoint> generate_candidates(const SearchSpace& space, std::span<const UnitPoint> history,
                                                  const ProposalOptions& opt, std::mt19937_64& rng) {
  auto pts = sobol_candidates(space.size(), opt.candidate_count, rng);
  std::normal_distribution<double> noise(0.0, opt.perturbation_sd);
  for (const auto& h : history) {
    for (std::size_t r = 0; r < opt.perturbations_per_point; ++r) {
      UnitPoint p = h;
      for (auto& c : p.coords) c = std::clamp(c + noise(rng), 0.0, 1.0);
      pts.push_back(std::move(p));
    }
  }
  for (auto& p : pts) p = to_unit(space, from_unit(space, p));
  return pts;
}

/// Lower clamp on predicted cost: max(1e-6, 0.01 * smallest observed cost).
inline double cost_floor(std::span<const double> observed_costs) {
  double lo = std::numeric_limits<double>::infinity();
  for (double c : observed_costs) lo = std::min(lo, c);
  return std::isfinite(lo) ? std::max(1e-6, 0.01 * lo) : 1e-6;
}

/// Scores points with (EI, clamped predicted cost).
inline std::vector<Candidate> score_candidates(const SearchSpace& space, const GPModel& surrogate,
                                               const CostModel& cost_model, std::span<const UnitPoint> points,
                                               double f_min, double floor) {
  std::vector<Candidate> out;
  out.reserve(points.size());
  for (const auto& p : points) {
    const auto post = surrogate.posterior(p);
    const double c = std::max(cost_model.predict(from_unit(space, p)), floor);
    out.push_back({p, ei(post.mean, post.sd(), f_min), c});
  }
  return out;
}

struct ProposalInput {
  const SearchSpace* space = nullptr;
  const GPModel* surrogate = nullptr;
  const CostModel* cost_model = nullptr;
  std::span<const UnitPoint> history;
  double f_min = 0.0;
  double spent = 0.0;           // budget consumed so far (EI-cool)
  double cost_floor = 1e-6;
  // When set, candidates are exactly these points (table replay).
  const std::vector<UnitPoint>* fixed_candidates = nullptr;
};

/// One acquisition step: generate, score and select.
inline SelectionResult propose(const AcquisitionKind& kind, const ProposalInput& in,
                               const ProposalOptions& opt, std::mt19937_64& rng) {
  if (in.space == nullptr || in.surrogate == nullptr || in.cost_model == nullptr) {
    throw UsageError("propose: missing model");
  }
  if (opt.candidate_count == 0 && in.fixed_candidates == nullptr) {
    throw UsageError("propose: candidate_count must be >= 1");
  }
  const auto points = in.fixed_candidates ? *in.fixed_candidates
                                          : generate_candidates(*in.space, in.history, opt, rng);
  auto cands = score_candidates(*in.space, *in.surrogate, *in.cost_model, points, in.f_min, in.cost_floor);
  return select(kind, std::move(cands), in.spent);
}

}  // namespace costbo

#endif  // COSTBO_ACQUISITION_HPP
