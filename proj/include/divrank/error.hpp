/*
 * Copyright 2026 The divrank Authors.
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

#ifndef DIVRANK_ERROR_HPP
#define DIVRANK_ERROR_HPP

#include <stdexcept>
#include <string>

namespace divrank {

/// Root of the library's exception hierarchy.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller passed a value outside an operation's contract.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// An operation was applied to a state that cannot support it.
class StateError : public Error {
 public:
  using Error::Error;
};

/// Problems with input data: malformed files, inconsistent shapes, broken
/// cross-references. The CLI maps every DataError to exit code 2.
class DataError : public Error {
 public:
  using Error::Error;
};

class ParseError : public DataError {
 public:
  ParseError(std::size_t line, const std::string& what)
      : DataError("line " + std::to_string(line) + ": " + what), line_(line) {}
  explicit ParseError(const std::string& what) : DataError(what) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_ = 0;
};

class DimensionError : public DataError {
 public:
  using DataError::DataError;
};

class IntegrityError : public DataError {
 public:
  using DataError::DataError;
};

/// A non-finite value appeared during a numerical computation.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace divrank

#endif  // DIVRANK_ERROR_HPP
