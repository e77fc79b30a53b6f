#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace llmsim {

// Base for every error raised on user-facing input (presets, configs,
// scenarios). Precondition violations on the pure cost functions throw
// std::invalid_argument instead.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent configuration; `field` names the offending key.
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& message)
      : Error(field.empty() ? message : field + ": " + message),
        field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

class UnsupportedPrecisionError : public Error {
 public:
  using Error::Error;
};

// A scenario that cannot be served: weights or KV cache do not fit.
class InfeasibleError : public Error {
 public:
  InfeasibleError(std::string constraint, double deficit_bytes,
                  const std::string& message)
      : Error(message),
        constraint_(std::move(constraint)),
        deficit_bytes_(deficit_bytes) {}

  // Stable tag of the binding constraint, e.g. "weights_capacity".
  const std::string& constraint() const noexcept { return constraint_; }
  double deficit_bytes() const noexcept { return deficit_bytes_; }

 private:
  std::string constraint_;
  double deficit_bytes_;
};

}  // namespace llmsim
