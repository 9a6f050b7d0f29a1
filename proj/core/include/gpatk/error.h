// Copyright 2026 The GPAtk Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef GPATK_ERROR_H_
#define GPATK_ERROR_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace gpatk {

// Coarse classification of failures. The CLI maps every kind except
// kUsage to exit status 1.
enum class ErrorKind {
  kIo,
  kFormat,
  kArgument,
  kBounds,
  kBudget,
  kCapacity,
  kDivergence,
  kNumeric,
  kSingular,
  kUndefinedMetric,
  kAttack,
  kUsage,
};

std::string_view ErrorKindName(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(ErrorKindName(kind)) + ": " + message),
        kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

inline std::string_view ErrorKindName(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kIo:
      return "io error";
    case ErrorKind::kFormat:
      return "format error";
    case ErrorKind::kArgument:
      return "argument error";
    case ErrorKind::kBounds:
      return "bounds error";
    case ErrorKind::kBudget:
      return "budget error";
    case ErrorKind::kCapacity:
      return "capacity error";
    case ErrorKind::kDivergence:
      return "divergence error";
    case ErrorKind::kNumeric:
      return "numeric error";
    case ErrorKind::kSingular:
      return "singularity error";
    case ErrorKind::kUndefinedMetric:
      return "undefined metric";
    case ErrorKind::kAttack:
      return "attack error";
    case ErrorKind::kUsage:
      return "usage error";
  }
  return "error";
}

}  // namespace gpatk

#endif  // GPATK_ERROR_H_
