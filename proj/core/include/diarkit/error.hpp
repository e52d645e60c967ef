// Copyright 2026 The diarkit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace diarkit {

// Base of every error thrown by the library. The CLI maps subclasses of
// UsageError to exit status 2 and everything else to 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad input or configuration supplied by the caller.
class UsageError : public Error {
 public:
  using Error::Error;
};

// Malformed text in an input file; message carries the line number.
class ParseError : public UsageError {
 public:
  ParseError(std::size_t line, const std::string& what)
      : UsageError("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Well-formed input that violates a type invariant.
class ValidationError : public UsageError {
 public:
  using UsageError::UsageError;
};

// Inconsistent table layout (e.g. mixed embedding dimensions).
class FormatError : public UsageError {
 public:
  using UsageError::UsageError;
};

// Argument outside the mathematical domain of an operation.
class DomainError : public UsageError {
 public:
  using UsageError::UsageError;
};

class ConfigError : public UsageError {
 public:
  using UsageError::UsageError;
};

class TrainingError : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace diarkit
