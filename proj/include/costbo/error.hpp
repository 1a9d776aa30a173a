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

#ifndef COSTBO_ERROR_HPP
#define COSTBO_ERROR_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace costbo {

enum class ErrorKind {
  kBounds,
  kData,
  kModel,
  kNumeric,
  kConfig,
  kUsage,
  kHarness,
  kOutOfTable,
  kIo,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kBounds: return "bounds";
    case ErrorKind::kData: return "data";
    case ErrorKind::kModel: return "model";
    case ErrorKind::kNumeric: return "numeric";
    case ErrorKind::kConfig: return "config";
    case ErrorKind::kUsage: return "usage";
    case ErrorKind::kHarness: return "harness";
    case ErrorKind::kOutOfTable: return "out_of_table";
    case ErrorKind::kIo: return "io";
  }
  return "unknown";
}

// All library failures derive from Error; kind() is what the CLI reports in
// its machine-readable error record.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

#define COSTBO_DEFINE_ERROR(Name, Kind)                        \
  class Name : public Error {                                  \
   public:                                                     \
    explicit Name(const std::string& what) : Error(Kind, what) {} \
  };

COSTBO_DEFINE_ERROR(BoundsError, ErrorKind::kBounds)
COSTBO_DEFINE_ERROR(DataError, ErrorKind::kData)
COSTBO_DEFINE_ERROR(ModelError, ErrorKind::kModel)
COSTBO_DEFINE_ERROR(NumericError, ErrorKind::kNumeric)
COSTBO_DEFINE_ERROR(ConfigError, ErrorKind::kConfig)
COSTBO_DEFINE_ERROR(UsageError, ErrorKind::kUsage)
COSTBO_DEFINE_ERROR(HarnessError, ErrorKind::kHarness)
COSTBO_DEFINE_ERROR(OutOfTableError, ErrorKind::kOutOfTable)
COSTBO_DEFINE_ERROR(IoError, ErrorKind::kIo)

#undef COSTBO_DEFINE_ERROR

}  // namespace costbo

#endif  // COSTBO_ERROR_HPP
