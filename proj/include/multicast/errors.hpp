// Copyright 2026 The Multicast Authors.
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

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace multicast {

// Base for every failure the library reports. `kind()` is a short stable tag
// the CLI prints in front of the message.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(what), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("parse", "line " + std::to_string(line) + ": " + what), line_(line), detail_(what) {}
  ParseError(const std::string& file, std::size_t line, const std::string& what)
      : Error("parse", file + ": line " + std::to_string(line) + ": " + what),
        line_(line),
        detail_(what) {}

  std::size_t line() const noexcept { return line_; }
  // The message without file and line.
  const std::string& detail() const noexcept { return detail_; }

 private:
  std::size_t line_;
  std::string detail_;
};

class OrderingError : public Error {
 public:
  explicit OrderingError(const std::string& what) : Error("ordering", what) {}
};

class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what) : Error("validation", what) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error("config", what) {}
};

// Violated precondition on a public call (wrong history length, bad box...).
class ContractError : public Error {
 public:
  explicit ContractError(const std::string& what) : Error("contract", what) {}
};

class DivergenceError : public Error {
 public:
  DivergenceError(int epoch, const std::string& what)
      : Error("divergence", "epoch " + std::to_string(epoch) + ": " + what), epoch_(epoch) {}

  int epoch() const noexcept { return epoch_; }

 private:
  int epoch_;
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error("io", what) {}
};

}  // namespace multicast
