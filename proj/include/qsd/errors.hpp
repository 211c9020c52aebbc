// Copyright 2026 The QSD Authors
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

#include <stdexcept>
#include <string>

namespace qsd {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Matrix or vector dimensions do not fit the operation.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A state vector is not unit-norm.
class NormalizationError : public Error {
 public:
  using Error::Error;
};

/// Qubit index out of range or repeated.
class IndexError : public Error {
 public:
  using Error::Error;
};

/// Scalar argument outside its admissible range.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A density matrix violates Hermiticity, unit trace or positivity.
class InvariantError : public Error {
 public:
  using Error::Error;
};

/// Parameter vector length does not match the circuit.
class ParameterCountError : public Error {
 public:
  using Error::Error;
};

/// A cost evaluation produced a non-finite value.
class EvaluationError : public Error {
 public:
  using Error::Error;
};

}  // namespace qsd
