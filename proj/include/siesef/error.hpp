// Copyright 2026 The siesef Authors. All Rights Reserved.
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

namespace siesef {

// Base of every error the library throws. Subclasses map onto the CLI exit
// code contract: DataError/ShapeError/ConfigError/FormatError -> 2,
// NumericError -> 3.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Tensor or layer shapes that do not line up.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// NaN/Inf produced or consumed where finite values are required.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Malformed file contents; the message names the offset or field.
class FormatError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration value or unusable combination of settings.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Bad input data (out-of-range labels, empty clouds, mismatched lengths).
class DataError : public Error {
 public:
  using Error::Error;
};

// An operation was invoked in the wrong state (e.g. backward before forward).
class StateError : public Error {
 public:
  using Error::Error;
};

}  // namespace siesef
