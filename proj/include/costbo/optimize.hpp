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

#ifndef COSTBO_OPTIMIZE_HPP
#define COSTBO_OPTIMIZE_HPP

#include <cmath>
#include <cstddef>
#include <deque>
#include <limits>
#include <vector>
#include <algorithm>

#include <Eigen/Dense>

namespace costbo {

struct BoxMinimizerOptions {
  int max_iterations = 100;
  int max_line_search = 30;
  int history = 8;
  double gradient_tolerance = 1e-6;   // on the projected gradient, inf-norm
  double function_tolerance = 1e-10;  // relative decrease between iterations
  double armijo = 1e-4;
};

struct BoxMinimizerResult {
  Eigen::VectorXd x;
  double value = std::numeric_limits<double>::infinity();
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
};

/// Projected limited-memory BFGS for box-constrained minimization.
///
/// `fg(x, grad)` returns f(x) and writes its gradient. Non-finite values are
/// treated as infeasible and trigger backtracking. The quasi-Newton direction
/// is computed on the free variables only; variables pinned at a bound with
/// the gradient pointing outward are held fixed for that iteration.
template <typename Objective>
BoxMinimizerResult minimize_box(Objective&& fg, Eigen::VectorXd x0,
                                const Eigen::VectorXd& lower,
                                const Eigen::VectorXd& upper,
                                const BoxMinimizerOptions& opt = {}) {
  const Eigen::Index n = x0.size();
  auto project = [&](const Eigen::VectorXd& v) {
    return Eigen::VectorXd(v.cwiseMax(lower).cwiseMin(upper));
  };

  BoxMinimizerResult res;
  Eigen::VectorXd x = project(x0);
  Eigen::VectorXd g(n);
  double f = fg(x, g);
  ++res.evaluations;
  if (!std::isfinite(f) || !g.allFinite()) {
    res.x = x;
    res.value = std::numeric_limits<double>::infinity();
    return res;
  }

  std::deque<Eigen::VectorXd> s_hist, y_hist;
  std::deque<double> rho_hist;

  for (int it = 0; it < opt.max_iterations; ++it) {
    res.iterations = it + 1;
    const Eigen::VectorXd pg = x - project(x - g);
    if (pg.lpNorm<Eigen::Infinity>() < opt.gradient_tolerance) {
      res.converged = true;
      break;
    }

    Eigen::Array<bool, Eigen::Dynamic, 1> active(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      active(i) = (x(i) <= lower(i) && g(i) > 0.0) || (x(i) >= upper(i) && g(i) < 0.0);
    }
    Eigen::VectorXd q = g;
    for (Eigen::Index i = 0; i < n; ++i) if (active(i)) q(i) = 0.0;

    // Two-loop recursion.
    const std::size_t m = s_hist.size();
    std::vector<double> a(m);
    for (std::size_t k = m; k-- > 0;) {
      a[k] = rho_hist[k] * s_hist[k].dot(q);
      q -= a[k] * y_hist[k];
    }
    if (m > 0) {
      q *= s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
    } else {
      q /= std::max(1.0, g.norm());
    }
    for (std::size_t k = 0; k < m; ++k) {
      const double b = rho_hist[k] * y_hist[k].dot(q);
      q += s_hist[k] * (a[k] - b);
    }
    Eigen::VectorXd d = -q;
    for (Eigen::Index i = 0; i < n; ++i) if (active(i)) d(i) = 0.0;
    if (!(d.dot(g) < 0.0)) {
      d = -g;
      for (Eigen::Index i = 0; i < n; ++i) if (active(i)) d(i) = 0.0;
      d /= std::max(1.0, d.norm());
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
    }

    double step = 1.0;
    Eigen::VectorXd x_new, g_new(n);
    double f_new = std::numeric_limits<double>::infinity();
    bool accepted = false;
    for (int ls = 0; ls < opt.max_line_search; ++ls) {
      x_new = project(x + step * d);
      f_new = fg(x_new, g_new);
      ++res.evaluations;
      if (std::isfinite(f_new) && g_new.allFinite() &&
          f_new <= f + opt.armijo * g.dot(x_new - x)) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;

    const Eigen::VectorXd s = x_new - x;
    const Eigen::VectorXd y = g_new - g;
    const double sy = s.dot(y);
    if (sy > 1e-10 * s.norm() * y.norm()) {
      s_hist.push_back(s);
      y_hist.push_back(y);
      rho_hist.push_back(1.0 / sy);
      if (static_cast<int>(s_hist.size()) > opt.history) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
    }
    const double decrease = f - f_new;
    x = x_new;
    g = g_new;
    f = f_new;
    if (decrease <= opt.function_tolerance * std::max({1.0, std::abs(f), std::abs(f_new)})) {
      res.converged = true;
      break;
    }
  }
  res.x = x;
  res.value = f;
  return res;
}

}  // namespace costbo

#endif  // COSTBO_OPTIMIZE_HPP
