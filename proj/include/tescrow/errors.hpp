// Copyright 2026 The treaty-escrow Authors.
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

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

namespace tescrow {

class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Invalid hash-suite construction or an unknown suite name.
class SuiteError : public Error {
  public:
    using Error::Error;
};

/// Coordinate outside the grid. axis() is "latitude" or "longitude".
class BoundsError : public Error {
  public:
    BoundsError(std::string axis, const std::string& what)
        : Error(what), axis_(std::move(axis)) {}
    const std::string& axis() const noexcept { return axis_; }

  private:
    std::string axis_;
};

class InvalidKey : public Error {
  public:
    using Error::Error;
};

/// Canonical encoding violated: a field out of bounds or malformed bytes.
class EncodingError : public Error {
  public:
    using Error::Error;
};

/// Malformed JSON / text input.
class FormatError : public Error {
  public:
    using Error::Error;
};

/// Declaration rejected by the escrow builder.
class DeclarationError : public Error {
  public:
    using Error::Error;
};

class NotASite : public Error {
  public:
    using Error::Error;
};

class IsASite : public Error {
  public:
    using Error::Error;
};

/// Stored package or log failed its consistency checks. location() names the
/// first failing header field, leaf, or log entry.
class IntegrityError : public Error {
  public:
    IntegrityError(std::string location, const std::string& what)
        : Error(what), location_(std::move(location)) {}
    const std::string& location() const noexcept { return location_; }

  private:
    std::string location_;
};

/// Message not acceptable in the current session state.
class ProtocolViolation : public Error {
  public:
    using Error::Error;
};

/// Class name of the most derived tescrow error ("NotASite", ...), or
/// "Error" for anything else. Used as the machine-readable reason in service
/// and CLI output.
std::string_view error_name(const std::exception& e) noexcept;

}  // namespace tescrow
