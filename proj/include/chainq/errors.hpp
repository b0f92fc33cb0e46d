#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace chainq {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid parameters: counts, fractions, probabilities, plans.
class ConfigError : public Error {
 public:
  using Error::Error;
};

class BuildError : public Error {
 public:
  using Error::Error;
};

class InsertionError : public Error {
 public:
  using Error::Error;
};

class QueryError : public Error {
 public:
  using Error::Error;
};

class AuditError : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// A detecting token that cannot be satisfied by the round's data.
class InfeasiblePlanError : public ConfigError {
 public:
  InfeasiblePlanError(const std::string& what, std::uint64_t required_detections)
      : ConfigError(what), required_detections_(required_detections) {}
  std::uint64_t required_detections() const { return required_detections_; }

 private:
  std::uint64_t required_detections_;
};

}  // namespace chainq
