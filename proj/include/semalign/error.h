// Copyright 2026 The semalign Authors.
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

#ifndef SEMALIGN_ERROR_H_
#define SEMALIGN_ERROR_H_

#include <stdexcept>
#include <string>

namespace semalign {

// Base class for all errors raised by the toolkit. kind() is a stable
// machine-readable tag used by the CLI error prefix.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(message), kind_(std::move(kind)) {}
  const std::string& kind() const { return kind_; }

 private:
  std::string kind_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& m) : Error("config", m) {}
};

class FormatError : public Error {
 public:
  explicit FormatError(const std::string& m) : Error("format", m) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& m) : Error("io", m) {}
};

class ArgumentError : public Error {
 public:
  explicit ArgumentError(const std::string& m) : Error("argument", m) {}
};

class NumericError : public Error {
 public:
  explicit NumericError(const std::string& m) : Error("numeric", m) {}
};

class LengthError : public Error {
 public:
  explicit LengthError(const std::string& m) : Error("length", m) {}
};

class TrainingError : public Error {
 public:
  explicit TrainingError(const std::string& m) : Error("training", m) {}
};

}  // namespace semalign

#endif  // SEMALIGN_ERROR_H_
