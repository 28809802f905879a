#pragma once

#include <stdexcept>
#include <string>

namespace tollrl {

// Base for every error the library throws; `kind()` names the failure class
// (e.g. "NonIntegralLength") so callers and tests can match on it.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(kind + ": " + what), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

class NetworkError : public Error {
 public:
  using Error::Error;
};

class DemandError : public Error {
 public:
  using Error::Error;
};

class SimulationError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace tollrl
