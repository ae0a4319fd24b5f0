// Copyright (c) 2026 mcod contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace mcod {

/// Shape or argument misuse by the caller.
class ContractError : public std::invalid_argument {
 public:
  explicit ContractError(const std::string& what) : std::invalid_argument(what) {}
};

/// Non-finite value where a finite one is required.
class InvalidValueError : public std::invalid_argument {
 public:
  explicit InvalidValueError(const std::string& what) : std::invalid_argument(what) {}
};

/// Normalization of a (near-)zero vector.
class DegenerateVectorError : public std::invalid_argument {
 public:
  explicit DegenerateVectorError(const std::string& what) : std::invalid_argument(what) {}
};

/// Operation attempted on an object in the wrong state (e.g. reading an
/// uninitialized memory bank).
class StateError : public std::logic_error {
 public:
  explicit StateError(const std::string& what) : std::logic_error(what) {}
};

/// Malformed bytes in a file that was otherwise readable.
class FormatError : public std::runtime_error {
 public:
  explicit FormatError(const std::string& what) : std::runtime_error(what) {}
};

/// Underlying I/O failure (missing file, short read).
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

/// Invalid or inconsistent run configuration.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Persisted state written by an incompatible version.
class CompatibilityError : public std::runtime_error {
 public:
  explicit CompatibilityError(const std::string& what) : std::runtime_error(what) {}
};

/// Metric that is mathematically undefined for the given inputs.
class UndefinedMetricError : public std::invalid_argument {
 public:
  explicit UndefinedMetricError(const std::string& what) : std::invalid_argument(what) {}
};

}  // namespace mcod
