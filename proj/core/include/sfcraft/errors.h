// Copyright 2026 The sfcraft Authors.
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

#ifndef SFCRAFT_ERRORS_H_
#define SFCRAFT_ERRORS_H_

#include <stdexcept>
#include <string>

namespace sfcraft {

// Base class for every error thrown by the library. Subclasses partition
// failures by who is at fault: the caller (UsageError), a configuration
// (ConfigError), a file on disk (FormatError), or the numerics.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UsageError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

// Non-finite values found inside a parameter set.
class CorruptionError : public Error {
 public:
  using Error::Error;
};

// Non-finite gradients, losses or TD targets during optimisation.
class TrainingError : public Error {
 public:
  using Error::Error;
};

// Singular or ill-posed linear systems in the tabular oracle.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace sfcraft

#endif  // SFCRAFT_ERRORS_H_
