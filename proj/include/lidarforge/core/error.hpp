// Copyright 2026 The LidarForge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace lidarforge {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid user-supplied configuration or arguments. The CLI maps it to exit status 2.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed file content. `location` is a line number for text formats and a
/// byte offset for binary ones.
class ParseError : public Error {
 public:
  enum class Unit { kLine, kByte };

  ParseError(const std::string& path, Unit unit, std::uint64_t location, const std::string& what)
      : Error(path + (unit == Unit::kLine ? ":line " : ":byte ") + std::to_string(location) + ": " +
              what),
        location_(location),
        unit_(unit) {}

  std::uint64_t location() const { return location_; }
  Unit unit() const { return unit_; }

 private:
  std::uint64_t location_;
  Unit unit_;
};

/// Scene placement could not satisfy the rules within the rejection budget.
class PlacementError : public Error {
 public:
  using Error::Error;
};

/// Registration failed on a specific frame of a sequence.
class RegistrationError : public Error {
 public:
  RegistrationError(std::size_t frame, const std::string& what)
      : Error("frame " + std::to_string(frame) + ": " + what), frame_(frame) {}

  std::size_t frame() const { return frame_; }

 private:
  std::size_t frame_;
};

}  // namespace lidarforge
