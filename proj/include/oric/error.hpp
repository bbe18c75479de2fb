// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace oric {

enum class ErrorKind {
  kInvalidArgument,
  kValidation,
  kParse,
  kIo,
  kUndefinedMetric,
  kTraining,
};

const char* to_string(ErrorKind kind) noexcept;

// Base for every error the library raises. The kind maps one-to-one onto the
// C API status codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class InvalidArgument : public Error {
 public:
  explicit InvalidArgument(const std::string& m) : Error(ErrorKind::kInvalidArgument, m) {}
};

class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& m) : Error(ErrorKind::kValidation, m) {}
};

class ParseError : public Error {
 public:
  explicit ParseError(const std::string& m) : Error(ErrorKind::kParse, m) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& m) : Error(ErrorKind::kIo, m) {}
};

// A metric was requested over a set with no ground truth at all.
class UndefinedMetric : public Error {
 public:
  explicit UndefinedMetric(const std::string& m) : Error(ErrorKind::kUndefinedMetric, m) {}
};

class TrainingError : public Error {
 public:
  explicit TrainingError(const std::string& m) : Error(ErrorKind::kTraining, m) {}
};

}  // namespace oric
