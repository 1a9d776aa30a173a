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

#ifndef COSTBO_SURROGATE_HPP
#define COSTBO_SURROGATE_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "costbo/error.hpp"
#include "costbo/optimize.hpp"
#include "costbo/space.hpp"

namespace costbo {

/// Matern 5/2 ARD kernel with constant mean and Gaussian noise, in
/// standardized target units.
struct KernelParams {
  double signal_variance = 1.0;
  std::vector<double> lengthscales;
  double noise_variance = 1e-4;
  double mean_constant = 0.0;

  static KernelParams defaults(std::size_t dim) {
    KernelParams p;
    p.lengthscales.assign(dim, 0.5);
    return p;
  }

  void validate() const {
    if (!(signal_variance > 0.0) || !std::isfinite(signal_variance)) {
      throw ModelError("kernel: signal_variance must be > 0");
    }
    if (!(noise_variance >= 0.0) || !std::isfinite(noise_variance)) {
      throw ModelError("kernel: noise_variance must be >= 0");
    }
    for (double l : lengthscales) {
      if (!(l > 0.0) || !std::isfinite(l)) throw ModelError("kernel: lengthscales must be > 0");
    }
    if (!std::isfinite(mean_constant)) throw ModelError("kernel: mean_constant must be finite");
  }
};

struct Posterior {
  double mean = 0.0;
  double variance = 0.0;
  double sd() const { return std::sqrt(variance); }
};

struct GpFitOptions {
  int restarts = 5;
  BoxMinimizerOptions minimizer{.max_iterations = 300, .gradient_tolerance = 1e-9, .function_tolerance = 1e-15};
  double noise_floor = 1e-6;
  double noise_ceiling = 1.0;
  double min_lengthscale = 1e-3;
  double max_lengthscale = 1e3;
  double min_signal_variance = 1e-3;
  double max_signal_variance = 1e2;
  double mean_bound = 10.0;
};

struct GpFitInfo {
  std::vector<double> initial_mlls;  // one per start; -inf when infeasible
  std::vector<double> final_mlls;
  std::size_t winner = 0;
};

namespace detail {

inline constexpr double kSqrt5 = 2.2360679774997896964;

inline double matern52(double sv, double r) {
  const double s = kSqrt5 * r;
  return sv * (1.0 + s + s * s / 3.0) * std::exp(-s);
}

// Returns an n x n matrix of squared scaled distances r^2.
inline Eigen::MatrixXd scaled_sq_dist(const Eigen::MatrixXd& X, std::span<const double> ls) {
  const Eigen::Index n = X.rows();
  Eigen::MatrixXd r2 = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    const double inv = 1.0 / ls[static_cast<std::size_t>(j)];
    for (Eigen::Index a = 0; a < n; ++a) {
      for (Eigen::Index b = a + 1; b < n; ++b) {
        const double t = (X(a, j) - X(b, j)) * inv;
        r2(a, b) += t * t;
      }
    }
  }
  return r2.selfadjointView<Eigen::Upper>();
}

inline Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& X, const KernelParams& p) {
  const Eigen::MatrixXd r2 = scaled_sq_dist(X, p.lengthscales);
  return r2.unaryExpr([&](double v) { return matern52(p.signal_variance, std::sqrt(v)); });
}

inline Eigen::MatrixXd to_matrix(std::span<const UnitPoint> pts) {
  if (pts.empty()) return {};
  const std::size_t d = pts.front().size();
  Eigen::MatrixXd X(static_cast<Eigen::Index>(pts.size()), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (pts[i].size() != d) throw DataError("gp: inconsistent point dimensions");
    for (std::size_t j = 0; j < d; ++j) X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = pts[i][j];
  }
  return X;
}

// Cholesky with escalating diagonal jitter 1e-10 .. 1e-6. Returns the jitter
// used, or nullopt if every level fails.
inline std::optional<double> factorize(Eigen::MatrixXd K, Eigen::LLT<Eigen::MatrixXd>& llt) {
  static constexpr double kJitter[] = {0.0, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6};
  for (double jitter : kJitter) {
    Eigen::MatrixXd Kj = K;
    Kj.diagonal().array() += jitter;
    llt.compute(Kj);
    if (llt.info() == Eigen::Success) {
      const auto diag = llt.matrixLLT().diagonal();
      if (diag.allFinite() && (diag.array() > 0.0).all()) return jitter;
    }
  }
  return std::nullopt;
}

// Log-parameter vector layout: [log sv, log l_1..l_d, log noise, mean].
inline Eigen::VectorXd pack(const KernelParams& p, double noise_floor) {
  const Eigen::Index d = static_cast<Eigen::Index>(p.lengthscales.size());
  Eigen::VectorXd t(d + 3);
  t(0) = std::log(p.signal_variance);
  for (Eigen::Index j = 0; j < d; ++j) t(1 + j) = std::log(p.lengthscales[static_cast<std::size_t>(j)]);
  t(d + 1) = std::log(std::max(p.noise_variance, noise_floor));
  t(d + 2) = p.mean_constant;
  return t;
}

inline KernelParams unpack(const Eigen::VectorXd& t) {
  const Eigen::Index d = t.size() - 3;
  KernelParams p;
  p.signal_variance = std::exp(t(0));
  p.lengthscales.resize(static_cast<std::size_t>(d));
  for (Eigen::Index j = 0; j < d; ++j) p.lengthscales[static_cast<std::size_t>(j)] = std::exp(t(1 + j));
  p.noise_variance = std::exp(t(d + 1));
  p.mean_constant = t(d + 2);
  return p;
}

// MLL of standardized targets and its gradient w.r.t. the packed
// log-parameters. Returns -inf if the kernel matrix cannot be factorized.
inline double mll_and_gradient(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                               const KernelParams& p, Eigen::VectorXd* grad) {
  const Eigen::Index n = X.rows();
  const Eigen::Index d = X.cols();
  const Eigen::MatrixXd r2 = scaled_sq_dist(X, p.lengthscales);
  Eigen::MatrixXd K = r2.unaryExpr([&](double v) { return matern52(p.signal_variance, std::sqrt(v)); });
  K.diagonal().array() += p.noise_variance;
  Eigen::LLT<Eigen::MatrixXd> llt;
  if (!factorize(K, llt)) return -std::numeric_limits<double>::infinity();

  const Eigen::VectorXd resid = y.array() - p.mean_constant;
  const Eigen::VectorXd alpha = llt.solve(resid);
  const double logdet = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  const double mll = -0.5 * resid.dot(alpha) - 0.5 * logdet -
                     0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);
  if (grad == nullptr) return mll;

  grad->resize(d + 3);
  const Eigen::MatrixXd W =
      alpha * alpha.transpose() - llt.solve(Eigen::MatrixXd::Identity(n, n));
  // d K / d log sv = K without noise.
  const Eigen::MatrixXd Kf = K - Eigen::MatrixXd(p.noise_variance * Eigen::MatrixXd::Identity(n, n));
  (*grad)(0) = 0.5 * W.cwiseProduct(Kf).sum();
  // d k / d log l_j = sv (5/3) (1 + sqrt5 r) exp(-sqrt5 r) (dx_j / l_j)^2.
  const Eigen::MatrixXd common = r2.unaryExpr([&](double v) {
    const double s = kSqrt5 * std::sqrt(v);
    return p.signal_variance * (5.0 / 3.0) * (1.0 + s) * std::exp(-s);
  });
  for (Eigen::Index j = 0; j < d; ++j) {
    const double inv = 1.0 / p.lengthscales[static_cast<std::size_t>(j)];
    double acc = 0.0;
    for (Eigen::Index a = 0; a < n; ++a) {
      for (Eigen::Index b = a + 1; b < n; ++b) {
        const double t = (X(a, j) - X(b, j)) * inv;
        acc += W(a, b) * common(a, b) * t * t;
      }
    }
    (*grad)(1 + j) = acc;  // 0.5 * 2 for the symmetric pair
  }
  (*grad)(d + 1) = 0.5 * p.noise_variance * W.trace();
  (*grad)(d + 2) = alpha.sum();
  return mll;
}

}  // namespace detail

/// A GP conditioned on standardized targets. Immutable once built.
class GPModel {
 public:
  GPModel() = default;

  /// Conditions on (X, y) under fixed params. Targets are standardized
  /// internally.
  static GPModel condition(std::span<const UnitPoint> X, std::span<const double> y,
                           const KernelParams& params) {
    GPModel m;
    m.init_data(X, y);
    m.set_params(params);
    return m;
  }

  std::size_t size() const { return static_cast<std::size_t>(X_.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(X_.cols()); }
  const KernelParams& params() const { return params_; }
  double target_mean() const { return target_mean_; }
  double target_std() const { return target_std_; }
  bool degenerate() const { return degenerate_; }
  double jitter() const { return jitter_; }
  const Eigen::MatrixXd& inputs() const { return X_; }
  const Eigen::VectorXd& standardized_targets() const { return y_; }
  const GpFitInfo& fit_info() const { return info_; }

  /// Posterior in native target units. Variance includes observation noise.
  Posterior posterior(const UnitPoint& x) const {
    if (x.size() != dim()) throw DataError("gp_posterior: dimension mismatch");
    Eigen::VectorXd k(X_.rows());
    for (Eigen::Index i = 0; i < X_.rows(); ++i) {
      double r2 = 0.0;
      for (Eigen::Index j = 0; j < X_.cols(); ++j) {
        const double t = (X_(i, j) - x[static_cast<std::size_t>(j)]) / params_.lengthscales[static_cast<std::size_t>(j)];
        r2 += t * t;
      }
      k(i) = detail::matern52(params_.signal_variance, std::sqrt(r2));
    }
    const double mu = params_.mean_constant + k.dot(alpha_);
    const Eigen::VectorXd v = llt_.matrixL().solve(k);
    const double var = std::max(0.0, params_.signal_variance + params_.noise_variance - v.squaredNorm());
    return {target_mean_ + target_std_ * mu, target_std_ * target_std_ * var};
  }

  std::vector<Posterior> posterior(std::span<const UnitPoint> xs) const {
    std::vector<Posterior> out;
    out.reserve(xs.size());
    for (const auto& x : xs) out.push_back(posterior(x));
    return out;
  }

  /// Exact Gaussian log marginal likelihood of the standardized targets.
  double log_marginal_likelihood() const {
    return detail::mll_and_gradient(X_, y_, params_, nullptr);
  }

  /// Gradient of the MLL w.r.t. [log sv, log lengthscales, log noise, mean].
  Eigen::VectorXd mll_gradient() const {
    Eigen::VectorXd g;
    detail::mll_and_gradient(X_, y_, params_, &g);
    return g;
  }

 private:
  friend GPModel gp_fit_impl(std::span<const UnitPoint>, std::span<const double>,
                             const GpFitOptions&, std::mt19937_64&, const KernelParams*);

  void init_data(std::span<const UnitPoint> X, std::span<const double> y) {
    if (X.empty() || X.size() != y.size()) {
      throw DataError("gp: need |X| = |y| >= 1");
    }
    for (double v : y) {
      if (!std::isfinite(v)) throw DataError("gp: non-finite target");
    }
    for (const auto& p : X) {
      for (double c : p.coords) {
        if (!std::isfinite(c)) throw DataError("gp: non-finite input");
      }
    }
    X_ = detail::to_matrix(X);
    const auto n = static_cast<double>(y.size());
    double mean = 0.0;
    for (double v : y) mean += v;
    mean /= n;
    double ss = 0.0;
    for (double v : y) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / n);
    const bool all_equal = std::all_of(y.begin(), y.end(), [&](double v) { return v == y[0]; });
    degenerate_ = all_equal || !(sd > 0.0);
    target_mean_ = mean;
    target_std_ = degenerate_ ? 1.0 : sd;
    y_.resize(static_cast<Eigen::Index>(y.size()));
    for (std::size_t i = 0; i < y.size(); ++i) {
      y_(static_cast<Eigen::Index>(i)) = (y[i] - target_mean_) / target_std_;
    }
  }

  void set_params(const KernelParams& params) {
    params.validate();
    if (params.lengthscales.size() != dim()) throw ModelError("gp: lengthscale count mismatch");
    params_ = params;
    Eigen::MatrixXd K = detail::kernel_matrix(X_, params_);
    K.diagonal().array() += params_.noise_variance;
    const auto jitter = detail::factorize(K, llt_);
    if (!jitter) throw ModelError("gp: kernel matrix not positive definite after jitter escalation");
    jitter_ = *jitter;
    alpha_ = llt_.solve(Eigen::VectorXd(y_.array() - params_.mean_constant));
  }

  Eigen::MatrixXd X_;
  Eigen::VectorXd y_;
  KernelParams params_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  Eigen::VectorXd alpha_;
  double target_mean_ = 0.0;
  double target_std_ = 1.0;
  double jitter_ = 0.0;
  bool degenerate_ = false;
  GpFitInfo info_;
};

inline GPModel gp_fit_impl(std::span<const UnitPoint> X, std::span<const double> y,
                           const GpFitOptions& opt, std::mt19937_64& rng,
                           const KernelParams* warm_start) {
  GPModel m;
  m.init_data(X, y);
  const std::size_t d = m.dim();
  const auto dd = static_cast<Eigen::Index>(d);

  Eigen::VectorXd lo(dd + 3), hi(dd + 3);
  lo(0) = std::log(opt.min_signal_variance);
  hi(0) = std::log(opt.max_signal_variance);
  lo.segment(1, dd).setConstant(std::log(opt.min_lengthscale));
  hi.segment(1, dd).setConstant(std::log(opt.max_lengthscale));
  lo(dd + 1) = std::log(opt.noise_floor);
  hi(dd + 1) = std::log(opt.noise_ceiling);
  lo(dd + 2) = -opt.mean_bound;
  hi(dd + 2) = opt.mean_bound;

  const Eigen::MatrixXd& Xm = m.X_;
  const Eigen::VectorXd& ym = m.y_;
  auto negative_mll = [&](const Eigen::VectorXd& t, Eigen::VectorXd& g) {
    const double v = detail::mll_and_gradient(Xm, ym, detail::unpack(t), &g);
    g = -g;
    return -v;
  };

  // Start 0 is the warm start (or defaults); the rest are random draws.
  const int starts = std::max(1, opt.restarts);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<Eigen::VectorXd> inits;
  inits.push_back(detail::pack(warm_start ? *warm_start : KernelParams::defaults(d), opt.noise_floor)
                      .cwiseMax(lo).cwiseMin(hi));
  for (int s = 1; s < starts; ++s) {
    Eigen::VectorXd t(dd + 3);
    t(0) = std::log(0.2) + unif(rng) * (std::log(5.0) - std::log(0.2));
    for (Eigen::Index j = 0; j < dd; ++j) t(1 + j) = std::log(0.05) + unif(rng) * (std::log(2.0) - std::log(0.05));
    t(dd + 1) = std::log(opt.noise_floor) + unif(rng) * (std::log(0.1) - std::log(opt.noise_floor));
    t(dd + 2) = 0.0;
    inits.push_back(t.cwiseMax(lo).cwiseMin(hi));
  }

  GpFitInfo info;
  Eigen::VectorXd best;
  double best_val = -std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s < inits.size(); ++s) {
    info.initial_mlls.push_back(detail::mll_and_gradient(Xm, ym, detail::unpack(inits[s]), nullptr));
    const auto r = minimize_box(negative_mll, inits[s], lo, hi, opt.minimizer);
    const double fin = std::isfinite(r.value) ? -r.value : -std::numeric_limits<double>::infinity();
    info.final_mlls.push_back(fin);
    if (fin > best_val) {
      best_val = fin;
      best = r.x;
      info.winner = s;
    }
  }
  if (!std::isfinite(best_val)) {
    throw ModelError("gp_fit: no start produced a factorizable kernel matrix");
  }
  m.set_params(detail::unpack(best));
  m.info_ = std::move(info);
  return m;
}

/// Fits kernel parameters by multi-start maximization of the log marginal
/// likelihood (bounded L-BFGS on log-parameters).
inline GPModel gp_fit(std::span<const UnitPoint> X, std::span<const double> y,
                      std::mt19937_64& rng, const GpFitOptions& opt = {},
                      const KernelParams* warm_start = nullptr) {
  return gp_fit_impl(X, y, opt, rng, warm_start);
}

inline Posterior gp_posterior(const GPModel& model, const UnitPoint& x) {
  return model.posterior(x);
}

inline double log_marginal_likelihood(const GPModel& model) {
  return model.log_marginal_likelihood();
}

}  // namespace costbo

#endif  // COSTBO_SURROGATE_HPP
