/*
 * Copyright 2026 The gancst Authors.
 *
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

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace gancst {

// Base of every error raised by the library. Callers that only need a
// message can catch this; the subclasses let the CLI map failures to
// distinct diagnostics.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad hyperparameters, dimension mismatches between configured pieces,
// empty inputs where data is required.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Caller broke an operation's precondition (stale cache, shape mismatch,
// empty triplet set, shrinking a classifier head).
class UsageError : public Error {
 public:
  using Error::Error;
};

// Malformed file content. `line` is 1-based; 0 when not applicable.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(line == 0 ? what : what + " (line " + std::to_string(line) + ")"),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Structurally valid input that violates a semantic rule (split overlap,
// uncovered class, unknown config key).
class ValidationError : public Error {
 public:
  using Error::Error;
};

class MissingEmbeddingError : public Error {
 public:
  explicit MissingEmbeddingError(const std::string& class_name)
      : Error("no embedding for any token of class name '" + class_name + "'"),
        class_name_(class_name) {}
  const std::string& class_name() const { return class_name_; }

 private:
  std::string class_name_;
};

class NonFiniteError : public Error {
 public:
  NonFiniteError(const std::string& what, std::size_t step)
      : Error(what + " became non-finite at step " + std::to_string(step)),
        step_(step) {}
  std::size_t step() const { return step_; }

 private:
  std::size_t step_;
};

}  // namespace gancst
