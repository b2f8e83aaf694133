// Copyright (c) the n2s Project Authors
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

#ifndef N2S_ERRORS_HPP_
#define N2S_ERRORS_HPP_

#include <cstddef>
#include <stdexcept>
#include <string>

namespace n2s {

// Root of every error thrown by the library. The CLI maps the three branches
// below onto exit codes 2 (usage), 3 (data) and 4 (numerical).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad argument or parameter value supplied by the caller.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Input data that cannot be used: unreadable files, malformed headers,
// mismatched shapes, values outside a model's support.
class DataError : public Error {
 public:
  using Error::Error;
};

class FormatError : public DataError {
 public:
  using DataError::DataError;
};

class ShapeError : public DataError {
 public:
  using DataError::DataError;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

// Zero or negative denominator in a closed-form estimator.
class SingularityError : public NumericalError {
 public:
  SingularityError(const std::string& what, std::size_t index)
      : NumericalError(what), index_(index) {}
  std::size_t index() const { return index_; }

 private:
  std::size_t index_;
};

class EstimationFailed : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// The generic canonical-parameter solver only handles T(y) = y families.
class UnsupportedModel : public Error {
 public:
  using Error::Error;
};

}  // namespace n2s

#endif  // N2S_ERRORS_HPP_
