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

#ifndef COSTBO_COST_HPP
#define COSTBO_COST_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include <Eigen/Dense>

#include "costbo/csv.hpp"
#include "costbo/error.hpp"
#include "costbo/space.hpp"
#include "costbo/surrogate.hpp"

namespace costbo {

struct CostSample {
  NativeConfig config;
  double cost = 1.0;
};

struct MetaFeatures {
  double n_rows = 1;
  double n_cols = 1;
  double n_classes = 0;  // 0 for regression tasks

  void validate() const {
    if (!(n_rows >= 1) || !(n_cols >= 1) || !(n_classes >= 0)) {
      throw DataError("meta-features: need n_rows >= 1, n_cols >= 1, n_classes >= 0");
    }
  }
  // Regressors appended by the task-aware transfer model.
  std::vector<double> log_features() const {
    return {std::log(n_rows), std::log(n_cols), std::log1p(n_classes)};
  }
  friend auto operator<=>(const MetaFeatures&, const MetaFeatures&) = default;
};

struct TransferTask {
  MetaFeatures meta;
  std::vector<CostSample> samples;
};

using TransferDataset = std::vector<TransferTask>;

enum class CostFamily {
  kWarpedGP,
  kLV,
  kGPLV,
  kLimitedGP3,
  kTransferTaskAware,
  kTransferNaive,
};

struct CostModelKind {
  CostFamily family = CostFamily::kLV;
  int k = 3;  // LV and GPLV base size

  static CostModelKind warped_gp() { return {CostFamily::kWarpedGP, 0}; }
  static CostModelKind lv(int k) { return {CostFamily::kLV, k}; }
  static CostModelKind gplv(int k = 3) { return {CostFamily::kGPLV, k}; }
  static CostModelKind limited_gp3() { return {CostFamily::kLimitedGP3, 3}; }
  static CostModelKind transfer_task_aware() { return {CostFamily::kTransferTaskAware, 3}; }
  static CostModelKind transfer_naive() { return {CostFamily::kTransferNaive, 3}; }

  bool is_transfer() const {
    return family == CostFamily::kTransferTaskAware || family == CostFamily::kTransferNaive;
  }

  std::string name() const {
    switch (family) {
      case CostFamily::kWarpedGP: return "warped_gp";
      case CostFamily::kLV: return "lv" + std::to_string(k);
      case CostFamily::kGPLV: return k == 3 ? "gplv" : "gplv" + std::to_string(k);
      case CostFamily::kLimitedGP3: return "limited_gp3";
      case CostFamily::kTransferTaskAware: return "transfer_task_aware";
      case CostFamily::kTransferNaive: return "transfer_naive";
    }
    return "unknown";
  }

  static CostModelKind parse(const std::string& s) {
    if (s == "warped_gp") return warped_gp();
    if (s == "lv1" || s == "lv2" || s == "lv3") return lv(s.back() - '0');
    if (s == "gplv" || s == "gplv3") return gplv(3);
    if (s == "gplv1" || s == "gplv2") return gplv(s.back() - '0');
    if (s == "limited_gp3") return limited_gp3();
    if (s == "transfer_task_aware") return transfer_task_aware();
    if (s == "transfer_naive") return transfer_naive();
    throw ConfigError("unknown cost model '" + s + "'");
  }

  friend bool operator==(const CostModelKind&, const CostModelKind&) = default;
};

/// Log-scaled cost feature of one dimension: log(x) when the dimension's
/// domain is strictly positive, x itself otherwise.
inline double cost_feature(const Dimension& d, double v) {
  return d.lower > 0.0 ? std::log(v) : v;
}

/// The same feature affinely rescaled to [0, 1] over the dimension's bounds.
inline double cost_feature_unit(const Dimension& d, double v) {
  const double lo = cost_feature(d, d.lower);
  const double hi = cost_feature(d, d.upper);
  return std::clamp((cost_feature(d, v) - lo) / (hi - lo), 0.0, 1.0);
}

namespace detail {

inline void check_samples(std::span<const CostSample> samples, std::size_t dim) {
  for (const auto& s : samples) {
    if (s.config.size() != dim) throw DataError("cost sample dimension mismatch");
    if (!(s.cost > 0.0) || !std::isfinite(s.cost)) throw DataError("cost samples must be positive and finite");
  }
}

inline double log_geometric_mean(std::span<const CostSample> samples) {
  if (samples.empty()) return 0.0;
  double s = 0.0;
  for (const auto& c : samples) s += std::log(c.cost);
  return s / static_cast<double>(samples.size());
}

struct OlsResult {
  Eigen::VectorXd beta;
  bool ridge = false;
};

// Least squares with intercept in column 0 of `design`. Falls back to a
// ridge solve (lambda = 1e-8) on rank deficiency.
inline OlsResult ols(const Eigen::MatrixXd& design, const Eigen::VectorXd& y) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  if (qr.rank() == design.cols()) return {qr.solve(y), false};
  const Eigen::MatrixXd A = design.transpose() * design +
                            1e-8 * Eigen::MatrixXd::Identity(design.cols(), design.cols());
  return {A.ldlt().solve(design.transpose() * y), true};
}

inline double r_squared(const std::vector<double>& x, const std::vector<double>& y) {
  const auto n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0.0) || !(syy > 0.0)) return 0.0;
  return std::clamp(sxy * sxy / (sxx * syy), 0.0, 1.0);
}

}  // namespace detail

/// The k dimensions whose log-scaled feature best explains log cost by
/// univariate R^2, in decreasing R^2 order (ties broken by lower index).
inline std::vector<std::size_t> select_features(const SearchSpace& space,
                                                std::span<const CostSample> samples,
                                                std::size_t k) {
  if (k > space.size()) throw ConfigError("select_features: k exceeds dimension count");
  if (samples.size() < k + 2) {
    throw DataError("select_features: need at least k + 2 = " + std::to_string(k + 2) + " samples");
  }
  detail::check_samples(samples, space.size());
  std::vector<double> logc;
  for (const auto& s : samples) logc.push_back(std::log(s.cost));
  std::vector<double> r2(space.size());
  for (std::size_t j = 0; j < space.size(); ++j) {
    std::vector<double> f;
    for (const auto& s : samples) f.push_back(cost_feature(space[j], s.config[j]));
    r2[j] = detail::r_squared(f, logc);
  }
  std::vector<std::size_t> idx(space.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return r2[a] > r2[b]; });
  idx.resize(k);
  return idx;
}

/// A fitted cost predictor. Every prediction is strictly positive and finite.
class CostModel {
 public:
  const CostModelKind& kind() const { return kind_; }
  const std::vector<std::size_t>& selected_features() const { return features_; }
  /// Intercept followed by one coefficient per selected feature (and per
  /// retained meta-feature for the task-aware model).
  const Eigen::VectorXd& coefficients() const { return beta_; }
  bool is_constant() const { return constant_; }
  bool used_ridge() const { return ridge_; }
  const std::optional<GPModel>& gp() const { return gp_; }

  double predict_log(const NativeConfig& cfg, const MetaFeatures* meta = nullptr) const {
    double v = 0.0;
    if (constant_) {
      v = log_constant_;
    } else {
      if (has_linear_) v += linear_part(cfg, meta);
      if (gp_) v += gp_->posterior(gp_input(cfg)).mean;
    }
    return std::clamp(v, -700.0, 700.0);
  }

  double predict(const NativeConfig& cfg) const { return std::exp(predict_log(cfg)); }
  double predict(const NativeConfig& cfg, const MetaFeatures& meta) const {
    return std::exp(predict_log(cfg, &meta));
  }

  /// Log-linear base prediction (LV / GPLV base); 0 when there is none.
  double linear_log(const NativeConfig& cfg, const MetaFeatures* meta = nullptr) const {
    return has_linear_ ? linear_part(cfg, meta) : (constant_ ? log_constant_ : 0.0);
  }

 private:
  friend CostModel lv_fit(const SearchSpace&, std::span<const CostSample>, std::size_t);
  friend CostModel make_constant_cost_model(const SearchSpace&, CostModelKind, std::span<const CostSample>);
  friend CostModel gp_cost_fit(const SearchSpace&, std::span<const CostSample>, CostModelKind,
                               std::mt19937_64&, const GpFitOptions&);
  friend CostModel transfer_fit(const SearchSpace&, const TransferDataset&, CostModelKind);

  double linear_part(const NativeConfig& cfg, const MetaFeatures* meta) const {
    double v = beta_(0);
    Eigen::Index c = 1;
    for (std::size_t j : features_) v += beta_(c++) * cost_feature(space_[j], cfg[j]);
    if (!meta_columns_.empty()) {
      if (meta == nullptr) throw UsageError("task-aware cost model needs meta-features to predict");
      const auto lf = meta->log_features();
      for (std::size_t m = 0; m < meta_columns_.size(); ++m) {
        v += beta_(c++) * (lf[meta_columns_[m]] - meta_means_[m]);
      }
    }
    return v;
  }

  UnitPoint gp_input(const NativeConfig& cfg) const {
    UnitPoint p{std::vector<double>(gp_dims_.size())};
    for (std::size_t i = 0; i < gp_dims_.size(); ++i) {
      p[i] = cost_feature_unit(space_[gp_dims_[i]], cfg[gp_dims_[i]]);
    }
    return p;
  }

  CostModelKind kind_;
  SearchSpace space_;
  std::vector<std::size_t> features_;
  Eigen::VectorXd beta_;
  bool has_linear_ = false;
  bool ridge_ = false;
  bool constant_ = false;
  double log_constant_ = 0.0;
  std::vector<std::size_t> meta_columns_;
  std::vector<double> meta_means_;
  std::vector<std::size_t> gp_dims_;
  std::optional<GPModel> gp_;
};

/// Geometric mean of the observed costs (1 when there are none).
inline CostModel make_constant_cost_model(const SearchSpace& space, CostModelKind kind,
                                          std::span<const CostSample> samples) {
  detail::check_samples(samples, space.size());
  CostModel m;
  m.kind_ = kind;
  m.space_ = space;
  m.constant_ = true;
  m.log_constant_ = detail::log_geometric_mean(samples);
  return m;
}

/// Low-variance model: OLS of log cost on an intercept plus the k most
/// significant log-scaled features. k is capped at the dimension count.
inline CostModel lv_fit(const SearchSpace& space, std::span<const CostSample> samples, std::size_t k) {
  if (k < 1 || k > 3) throw ConfigError("lv_fit: k must be 1, 2 or 3");
  const CostModelKind kind = CostModelKind::lv(static_cast<int>(k));
  k = std::min(k, space.size());
  if (samples.size() < k + 2) return make_constant_cost_model(space, kind, samples);
  CostModel m;
  m.kind_ = kind;
  m.space_ = space;
  m.features_ = select_features(space, samples, k);
  const auto n = static_cast<Eigen::Index>(samples.size());
  Eigen::MatrixXd design(n, static_cast<Eigen::Index>(k) + 1);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& s = samples[static_cast<std::size_t>(i)];
    design(i, 0) = 1.0;
    for (std::size_t c = 0; c < k; ++c) {
      const std::size_t j = m.features_[c];
      design(i, static_cast<Eigen::Index>(c) + 1) = cost_feature(space[j], s.config[j]);
    }
    y(i) = std::log(s.cost);
  }
  auto fit = detail::ols(design, y);
  m.beta_ = std::move(fit.beta);
  m.ridge_ = fit.ridge;
  m.has_linear_ = true;
  return m;
}

inline CostModel gp_cost_fit(const SearchSpace& space, std::span<const CostSample> samples,
                             CostModelKind kind, std::mt19937_64& rng, const GpFitOptions& opt) {
  std::size_t min_samples = 2;
  if (kind.family == CostFamily::kGPLV) min_samples = std::min<std::size_t>(kind.k, space.size()) + 2;
  if (kind.family == CostFamily::kLimitedGP3) min_samples = std::min<std::size_t>(3, space.size()) + 2;
  if (samples.size() < min_samples) return make_constant_cost_model(space, kind, samples);
  detail::check_samples(samples, space.size());

  CostModel m;
  if (kind.family == CostFamily::kGPLV) {
    m = lv_fit(space, samples, static_cast<std::size_t>(kind.k));
  } else {
    m.space_ = space;
  }
  m.kind_ = kind;
  if (kind.family == CostFamily::kLimitedGP3) {
    m.gp_dims_ = select_features(space, samples, std::min<std::size_t>(3, space.size()));
  } else {
    m.gp_dims_.resize(space.size());
    std::iota(m.gp_dims_.begin(), m.gp_dims_.end(), 0);
  }
  std::vector<UnitPoint> X;
  std::vector<double> y;
  for (const auto& s : samples) {
    X.push_back(m.gp_input(s.config));
    y.push_back(std::log(s.cost) - (m.has_linear_ ? m.linear_part(s.config, nullptr) : 0.0));
  }
  m.gp_ = gp_fit(X, y, rng, opt);
  return m;
}

/// GP on log cost over all log-scaled features; predicts exp(posterior mean).
inline CostModel warped_gp_fit(const SearchSpace& space, std::span<const CostSample> samples,
                               std::mt19937_64& rng, const GpFitOptions& opt = {}) {
  return gp_cost_fit(space, samples, CostModelKind::warped_gp(), rng, opt);
}

/// LV(k) base plus a GP on its log residuals.
inline CostModel gplv_fit(const SearchSpace& space, std::span<const CostSample> samples, std::size_t k,
                          std::mt19937_64& rng, const GpFitOptions& opt = {}) {
  return gp_cost_fit(space, samples, CostModelKind::gplv(static_cast<int>(k)), rng, opt);
}

/// GP on log cost restricted to the 3 most significant features.
inline CostModel limited_gp_fit(const SearchSpace& space, std::span<const CostSample> samples,
                                std::mt19937_64& rng, const GpFitOptions& opt = {}) {
  return gp_cost_fit(space, samples, CostModelKind::limited_gp3(), rng, opt);
}

/// Linear cost model learned across related tasks. The naive variant pools
/// every sample; the task-aware variant also regresses on centered log
/// meta-features, dropping meta columns that are constant over the pool.
inline CostModel transfer_fit(const SearchSpace& space, const TransferDataset& data, CostModelKind kind) {
  if (!kind.is_transfer()) throw UsageError("transfer_fit: kind must be a transfer model");
  std::vector<CostSample> pooled;
  std::vector<std::vector<double>> pooled_meta;
  for (const auto& task : data) {
    task.meta.validate();
    for (const auto& s : task.samples) {
      pooled.push_back(s);
      pooled_meta.push_back(task.meta.log_features());
    }
  }
  if (pooled.empty()) throw DataError("transfer_fit: no samples");
  detail::check_samples(pooled, space.size());
  const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(kind.k), space.size());

  CostModel m;
  m.kind_ = kind;
  m.space_ = space;
  if (kind.family == CostFamily::kTransferTaskAware) {
    for (std::size_t c = 0; c < 3; ++c) {
      double mean = 0.0;
      for (const auto& mf : pooled_meta) mean += mf[c];
      mean /= static_cast<double>(pooled_meta.size());
      const bool constant = std::all_of(pooled_meta.begin(), pooled_meta.end(),
                                        [&](const auto& mf) { return mf[c] == pooled_meta.front()[c]; });
      if (!constant) {
        m.meta_columns_.push_back(c);
        m.meta_means_.push_back(mean);
      }
    }
  }
  const std::size_t p = 1 + k + m.meta_columns_.size();
  if (pooled.size() < p + 1) {
    throw DataError("transfer_fit: need at least " + std::to_string(p + 1) + " pooled samples");
  }
  m.features_ = select_features(space, pooled, k);
  const auto n = static_cast<Eigen::Index>(pooled.size());
  Eigen::MatrixXd design(n, static_cast<Eigen::Index>(p));
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& s = pooled[static_cast<std::size_t>(i)];
    Eigen::Index c = 0;
    design(i, c++) = 1.0;
    for (std::size_t j : m.features_) design(i, c++) = cost_feature(space[j], s.config[j]);
    for (std::size_t q = 0; q < m.meta_columns_.size(); ++q) {
      design(i, c++) = pooled_meta[static_cast<std::size_t>(i)][m.meta_columns_[q]] - m.meta_means_[q];
    }
    y(i) = std::log(s.cost);
  }
  auto fit = detail::ols(design, y);
  m.beta_ = std::move(fit.beta);
  m.ridge_ = fit.ridge;
  m.has_linear_ = true;
  return m;
}

/// Fits any non-transfer kind.
inline CostModel fit_cost_model(CostModelKind kind, const SearchSpace& space,
                                std::span<const CostSample> samples, std::mt19937_64& rng,
                                const GpFitOptions& opt = {}) {
  switch (kind.family) {
    case CostFamily::kLV: return lv_fit(space, samples, static_cast<std::size_t>(kind.k));
    case CostFamily::kWarpedGP:
    case CostFamily::kGPLV:
    case CostFamily::kLimitedGP3: return gp_cost_fit(space, samples, kind, rng, opt);
    case CostFamily::kTransferTaskAware:
    case CostFamily::kTransferNaive: break;
  }
  throw UsageError("fit_cost_model: transfer models are fitted with transfer_fit");
}

/// Root-mean-squared error in log-cost space.
inline double cost_rmse(const CostModel& model, std::span<const CostSample> test,
                        const MetaFeatures* meta = nullptr) {
  if (test.empty()) throw DataError("cost_rmse: empty test set");
  double ss = 0.0;
  for (const auto& s : test) {
    const double e = model.predict_log(s.config, meta) - std::log(s.cost);
    ss += e * e;
  }
  return std::sqrt(ss / static_cast<double>(test.size()));
}

// --- CSV ---------------------------------------------------------------

struct CostCsv {
  std::vector<CostSample> samples;
  std::vector<std::optional<MetaFeatures>> meta;  // per row
};

/// Reads cost samples: one column per dimension (by name), then `cost`, with
/// optional `n_rows,n_cols,n_classes` columns.
inline CostCsv read_cost_csv(const std::string& path, const SearchSpace& space) {
  const auto t = csv::read_numeric(path);
  std::vector<std::ptrdiff_t> cols;
  for (const auto& d : space.dims()) {
    const auto c = t.column(d.name);
    if (c < 0) throw DataError(path + ": missing column '" + d.name + "'");
    cols.push_back(c);
  }
  const auto cost_col = t.column("cost");
  if (cost_col < 0) throw DataError(path + ": missing column 'cost'");
  const auto r = t.column("n_rows"), c = t.column("n_cols"), k = t.column("n_classes");
  const bool has_meta = r >= 0 && c >= 0 && k >= 0;
  CostCsv out;
  for (const auto& row : t.rows) {
    NativeConfig cfg{std::vector<double>(space.size())};
    for (std::size_t j = 0; j < space.size(); ++j) cfg[j] = row[static_cast<std::size_t>(cols[j])];
    to_unit(space, cfg);  // bounds check
    out.samples.push_back({cfg, row[static_cast<std::size_t>(cost_col)]});
    if (has_meta) {
      MetaFeatures mf{row[static_cast<std::size_t>(r)], row[static_cast<std::size_t>(c)],
                      row[static_cast<std::size_t>(k)]};
      mf.validate();
      out.meta.emplace_back(mf);
    } else {
      out.meta.emplace_back(std::nullopt);
    }
  }
  detail::check_samples(out.samples, space.size());
  return out;
}

/// Groups rows with identical meta-features into tasks.
inline TransferDataset to_transfer_dataset(const CostCsv& data) {
  std::map<std::tuple<double, double, double>, std::size_t> index;
  TransferDataset out;
  for (std::size_t i = 0; i < data.samples.size(); ++i) {
    if (!data.meta[i]) throw DataError("transfer data needs n_rows,n_cols,n_classes columns");
    const auto& mf = *data.meta[i];
    const auto key = std::make_tuple(mf.n_rows, mf.n_cols, mf.n_classes);
    auto it = index.find(key);
    if (it == index.end()) {
      it = index.emplace(key, out.size()).first;
      out.push_back({mf, {}});
    }
    out[it->second].samples.push_back(data.samples[i]);
  }
  return out;
}

}  // namespace costbo

#endif  // COSTBO_COST_HPP
