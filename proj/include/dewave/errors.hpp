/* Copyright 2026 The DeWave-cpp Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace dewave {

// Error categories map onto CLI exit codes (see tools/dewave.cpp).
enum class ErrorKind {
  kConfig,       // bad configuration value or unknown key
  kData,         // malformed dataset or feature file, invalid record
  kRange,        // index out of bounds
  kShape,        // tensor shape mismatch
  kState,        // missing checkpoint, missing gradient, wrong stage
  kNumeric,      // non-finite values
  kInput,        // empty or otherwise invalid argument
  kUnsupported,  // operation not available for this input mode
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

#define DEWAVE_DEFINE_ERROR(Name, Kind)                               \
  class Name : public Error {                                         \
   public:                                                            \
    explicit Name(const std::string& what) : Error(Kind, what) {}     \
  };

DEWAVE_DEFINE_ERROR(ConfigError, ErrorKind::kConfig)
DEWAVE_DEFINE_ERROR(DataError, ErrorKind::kData)
DEWAVE_DEFINE_ERROR(RangeError, ErrorKind::kRange)
DEWAVE_DEFINE_ERROR(ShapeError, ErrorKind::kShape)
DEWAVE_DEFINE_ERROR(StateError, ErrorKind::kState)
DEWAVE_DEFINE_ERROR(NumericError, ErrorKind::kNumeric)
DEWAVE_DEFINE_ERROR(InputError, ErrorKind::kInput)
DEWAVE_DEFINE_ERROR(UnsupportedError, ErrorKind::kUnsupported)

#undef DEWAVE_DEFINE_ERROR

// Thrown by slice_by_fixations when some words have no fixation at all.
class MissingWordError : public DataError {
 public:
  MissingWordError(const std::string& what, std::vector<std::size_t> missing)
      : DataError(what), missing_(std::move(missing)) {}
  const std::vector<std::size_t>& missing() const noexcept { return missing_; }

 private:
  std::vector<std::size_t> missing_;
};

}  // namespace dewave
