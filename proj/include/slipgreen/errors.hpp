// Copyright 2026 The slipgreen Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace slipgreen {

/// Coarse classification used by the command-line front end to pick an exit status.
enum class ErrorKind {
  validation,  // bad parameters, configuration or file contents
  numerical,   // singularity, resonance, step-size or solver breakdown
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

#define SLIPGREEN_DEFINE_ERROR(Name, Kind)                                          \
  class Name : public Error {                                                       \
   public:                                                                          \
    explicit Name(const std::string& what) : Error(ErrorKind::Kind, what) {} \
  }

SLIPGREEN_DEFINE_ERROR(ParameterError, validation);
SLIPGREEN_DEFINE_ERROR(ConfigurationError, validation);
SLIPGREEN_DEFINE_ERROR(OutOfChartError, validation);
SLIPGREEN_DEFINE_ERROR(FormatError, validation);
SLIPGREEN_DEFINE_ERROR(UnsupportedVersionError, validation);
SLIPGREEN_DEFINE_ERROR(SingularityError, numerical);
SLIPGREEN_DEFINE_ERROR(DegenerateDirectionError, numerical);
SLIPGREEN_DEFINE_ERROR(IllPosedError, numerical);
SLIPGREEN_DEFINE_ERROR(StepSizeError, numerical);
SLIPGREEN_DEFINE_ERROR(SolverError, numerical);

#undef SLIPGREEN_DEFINE_ERROR

}  // namespace slipgreen
