#pragma once

#include <stdexcept>
#include <string>

namespace cfgflow {

/// Shape or usage error inside the tensor/autodiff layer.
class NumericsError : public std::runtime_error {
 public:
  explicit NumericsError(const std::string& what) : std::runtime_error(what) {}
};

/// Invalid distribution construction (asymmetric or non-SPD covariance,
/// weights that do not sum to one, ...).
class DistributionError : public std::runtime_error {
 public:
  explicit DistributionError(const std::string& what) : std::runtime_error(what) {}
};

/// Invalid schedule or ladder construction.
class ScheduleError : public std::runtime_error {
 public:
  explicit ScheduleError(const std::string& what) : std::runtime_error(what) {}
};

/// Training-time failure (non-finite loss or move, rejected step).
class EngineError : public std::runtime_error {
 public:
  explicit EngineError(const std::string& what) : std::runtime_error(what) {}
};

/// Config file parse or validation error. Carries the offending line
/// when the error is tied to one.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what, int line = 0)
      : std::runtime_error(what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

}  // namespace cfgflow
