// Copyright 2026 The Authors.
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

namespace bnsvp {

// Base of every error thrown by the library. The CLI maps ArgumentError to
// exit code 2 and everything else to exit code 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Caller passed an invalid argument or violated a precondition.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

// A file could not be opened, read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

// A file was readable but its contents do not follow the expected layout.
class FormatError : public Error {
 public:
  using Error::Error;
};

// Loaded data is well formed but inconsistent (e.g. mismatched dimensions).
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Numerical failure: non-SPD covariance, degenerate likelihoods, NaN.
class NumericError : public Error {
 public:
  using Error::Error;
};

// The representative set came out empty; lowering the epsilon percentile
// usually fixes it.
class DegenerateSelectionError : public Error {
 public:
  using Error::Error;
};

}  // namespace bnsvp
