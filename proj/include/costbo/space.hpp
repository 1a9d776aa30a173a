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

#ifndef COSTBO_SPACE_HPP
#define COSTBO_SPACE_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <random>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include <json.hpp>

#include "costbo/error.hpp"

namespace costbo {

enum class DimKind { kContinuous, kInteger };
enum class DimScale { kLinear, kLog };

struct Dimension {
  std::string name;
  DimKind kind = DimKind::kContinuous;
  double lower = 0.0;
  double upper = 1.0;
  DimScale scale = DimScale::kLinear;

  static Dimension continuous(std::string name, double lower, double upper,
                              DimScale scale = DimScale::kLinear) {
    return {std::move(name), DimKind::kContinuous, lower, upper, scale};
  }
  static Dimension integer(std::string name, double lower, double upper,
                           DimScale scale = DimScale::kLinear) {
    return {std::move(name), DimKind::kInteger, lower, upper, scale};
  }

  bool is_log() const { return scale == DimScale::kLog; }
  bool is_integer() const { return kind == DimKind::kInteger; }

  void validate() const {
    if (name.empty()) throw ConfigError("dimension with empty name");
    if (!std::isfinite(lower) || !std::isfinite(upper) || !(lower < upper)) {
      throw ConfigError("dimension '" + name + "': requires lower < upper");
    }
    if (is_log() && !(lower > 0.0)) {
      throw ConfigError("dimension '" + name + "': log scale requires lower > 0");
    }
    if (is_integer() &&
        (std::floor(lower) != lower || std::floor(upper) != upper)) {
      throw ConfigError("dimension '" + name + "': integer bounds required");
    }
  }
};

// A point of the internal unit hypercube.
struct UnitPoint {
  std::vector<double> coords;

  UnitPoint() = default;
  explicit UnitPoint(std::vector<double> c) : coords(std::move(c)) {}

  std::size_t size() const { return coords.size(); }
  double operator[](std::size_t i) const { return coords[i]; }
  double& operator[](std::size_t i) { return coords[i]; }
  friend bool operator==(const UnitPoint&, const UnitPoint&) = default;
};

// A configuration in native units (integers are stored as integral doubles).
struct NativeConfig {
  std::vector<double> values;

  NativeConfig() = default;
  explicit NativeConfig(std::vector<double> v) : values(std::move(v)) {}

  std::size_t size() const { return values.size(); }
  double operator[](std::size_t i) const { return values[i]; }
  double& operator[](std::size_t i) { return values[i]; }
  friend bool operator==(const NativeConfig&, const NativeConfig&) = default;
};

class SearchSpace {
 public:
  SearchSpace() = default;
  explicit SearchSpace(std::vector<Dimension> dims) : dims_(std::move(dims)) {
    if (dims_.empty()) throw ConfigError("search space needs at least one dimension");
    std::unordered_set<std::string> seen;
    for (const auto& d : dims_) {
      d.validate();
      if (!seen.insert(d.name).second) {
        throw ConfigError("duplicate dimension name '" + d.name + "'");
      }
    }
  }

  std::size_t size() const { return dims_.size(); }
  const Dimension& operator[](std::size_t i) const { return dims_[i]; }
  const std::vector<Dimension>& dims() const { return dims_; }

  std::size_t index_of(const std::string& name) const {
    for (std::size_t i = 0; i < dims_.size(); ++i) {
      if (dims_[i].name == name) return i;
    }
    throw ConfigError("unknown dimension '" + name + "'");
  }

 private:
  std::vector<Dimension> dims_;
};

namespace detail {

inline double unit_of(const Dimension& d, double v) {
  if (d.is_log()) {
    return (std::log(v) - std::log(d.lower)) / (std::log(d.upper) - std::log(d.lower));
  }
  return (v - d.lower) / (d.upper - d.lower);
}

inline double native_of(const Dimension& d, double u) {
  if (u == 0.0) return d.lower;
  if (u == 1.0) return d.upper;
  if (d.is_log()) {
    const double lo = std::log(d.lower);
    return std::exp(lo + u * (std::log(d.upper) - lo));
  }
  return d.lower + u * (d.upper - d.lower);
}

}  // namespace detail

/// Maps a native configuration into the unit cube. Log-scaled dimensions are
/// mapped affinely in log space.
inline UnitPoint to_unit(const SearchSpace& space, const NativeConfig& cfg) {
  if (cfg.size() != space.size()) {
    throw BoundsError("configuration has " + std::to_string(cfg.size()) +
                      " values, space has " + std::to_string(space.size()));
  }
  UnitPoint p(std::vector<double>(cfg.size()));
  for (std::size_t i = 0; i < cfg.size(); ++i) {
    const auto& d = space[i];
    const double v = cfg[i];
    if (!(v >= d.lower && v <= d.upper)) {
      throw BoundsError("dimension '" + d.name + "': value " + std::to_string(v) +
                        " outside [" + std::to_string(d.lower) + ", " +
                        std::to_string(d.upper) + "]");
    }
    p[i] = std::clamp(detail::unit_of(d, v), 0.0, 1.0);
  }
  return p;
}

/// Inverse of to_unit. Integer dimensions are rounded half-up after the map
/// and clamped to their bounds.
inline NativeConfig from_unit(const SearchSpace& space, const UnitPoint& p) {
  if (p.size() != space.size()) {
    throw BoundsError("unit point has " + std::to_string(p.size()) +
                      " coordinates, space has " + std::to_string(space.size()));
  }
  NativeConfig cfg(std::vector<double>(p.size()));
  for (std::size_t i = 0; i < p.size(); ++i) {
    const auto& d = space[i];
    const double u = p[i];
    if (!(u >= 0.0 && u <= 1.0)) {
      throw BoundsError("dimension '" + d.name + "': unit coordinate " +
                        std::to_string(u) + " outside [0, 1]");
    }
    double v = detail::native_of(d, u);
    if (d.is_integer()) v = std::floor(v + 0.5);
    cfg[i] = std::clamp(v, d.lower, d.upper);
  }
  return cfg;
}

/// n i.i.d. uniform points of the unit cube.
template <typename Rng>
std::vector<UnitPoint> sample_uniform(const SearchSpace& space, Rng& rng, std::size_t n) {
  if (n == 0) throw UsageError("sample_uniform: n must be >= 1");
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<UnitPoint> out;
  out.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    UnitPoint p(std::vector<double>(space.size()));
    for (std::size_t i = 0; i < space.size(); ++i) p[i] = unif(rng);
    out.push_back(std::move(p));
  }
  return out;
}

/// The 7-dimensional XGBoost hyperparameter space.
inline SearchSpace xgboost_space() {
  return SearchSpace({
      Dimension::integer("num_round", 1, 256, DimScale::kLog),
      Dimension::continuous("learning_rate", 0.01, 1.0, DimScale::kLog),
      Dimension::continuous("gamma", 0.0, 0.1),
      Dimension::continuous("alpha", 1e-3, 1e3, DimScale::kLog),
      Dimension::continuous("lambda", 1e-3, 1e3, DimScale::kLog),
      Dimension::continuous("subsample", 0.01, 1.0),
      Dimension::integer("max_depth", 1, 16),
  });
}

// --- serialization -------------------------------------------------------

inline nlohmann::json to_json(const SearchSpace& space) {
  nlohmann::json dims = nlohmann::json::array();
  for (const auto& d : space.dims()) {
    dims.push_back({{"name", d.name},
                    {"kind", d.is_integer() ? "integer" : "continuous"},
                    {"lower", d.lower},
                    {"upper", d.upper},
                    {"scale", d.is_log() ? "log" : "linear"}});
  }
  return {{"dimensions", dims}};
}

inline SearchSpace space_from_json(const nlohmann::json& j) {
  const auto& arr = j.contains("dimensions") ? j.at("dimensions") : j;
  if (!arr.is_array()) throw ConfigError("search space: expected an array of dimensions");
  std::vector<Dimension> dims;
  try {
    for (const auto& e : arr) {
      Dimension d;
      d.name = e.at("name").get<std::string>();
      const auto kind = e.value("kind", std::string("continuous"));
      if (kind == "continuous") {
        d.kind = DimKind::kContinuous;
      } else if (kind == "integer") {
        d.kind = DimKind::kInteger;
      } else {
        throw ConfigError("dimension '" + d.name + "': unknown kind '" + kind + "'");
      }
      d.lower = e.at("lower").get<double>();
      d.upper = e.at("upper").get<double>();
      const auto scale = e.value("scale", std::string("linear"));
      if (scale == "linear") {
        d.scale = DimScale::kLinear;
      } else if (scale == "log") {
        d.scale = DimScale::kLog;
      } else {
        throw ConfigError("dimension '" + d.name + "': unknown scale '" + scale + "'");
      }
      dims.push_back(std::move(d));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("search space: ") + e.what());
  }
  return SearchSpace(std::move(dims));
}

}  // namespace costbo

#endif  // COSTBO_SPACE_HPP
