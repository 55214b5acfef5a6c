// Copyright 2026 The ropf Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace ropf {

enum class ErrorCode {
  Syntax = 1,
  UnsupportedVersion,
  MissingTable,
  Reference,
  InvalidData,
  UnsupportedCost,
  InvalidArgument,
  Infeasible,
  Numerical,
  Io,
};

/// Exception thrown by every module of the core library. The C API maps
/// `code()` one-to-one onto its public status codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace ropf
