// Copyright 2026 The ilsrd Authors
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

namespace ilsrd {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Invalid configuration detected at construction time.
class ConfigError : public Error {
 public:
  using Error::Error;
};

class DegenerateQuaternion : public Error {
 public:
  DegenerateQuaternion() : Error("degenerate quaternion") {}
};

class IntegrationDiverged : public Error {
 public:
  IntegrationDiverged() : Error("integration diverged") {}
};

/// Tensor shape mismatch; message names the operation and both shapes.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// File format, checksum or I/O failure.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace ilsrd
