/*
 * Copyright 2026 The specrf Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <stdexcept>
#include <string>

namespace specrf {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An argument lies outside the domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A landweber regularization parameter that is not of the form 1/(alpha*T).
class ScheduleError : public Error {
 public:
  using Error::Error;
};

/// Invalid or inconsistent configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Malformed input data. Carries the 1-based row and column of the bad cell.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, long row, long column)
      : Error(what), row_(row), column_(column) {}
  long row() const { return row_; }
  long column() const { return column_; }

 private:
  long row_;
  long column_;
};

/// An object cannot be built from the given parts (e.g. an activation
/// without a derivative).
class ConstructionError : public Error {
 public:
  using Error::Error;
};

/// An exact oracle was requested from an object that cannot provide one.
class UnsupportedError : public Error {
 public:
  using Error::Error;
};

/// Two objects that must describe the same thing disagree.
class ConsistencyError : public Error {
 public:
  using Error::Error;
};

/// A post-condition of the library itself failed.
class InternalError : public Error {
 public:
  using Error::Error;
};

}  // namespace specrf
