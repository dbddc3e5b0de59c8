#pragma once

#include <stdexcept>
#include <string>

namespace stripres {

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& m) : std::runtime_error(m) {}
};

struct NotInvertible : std::runtime_error {
  explicit NotInvertible(const std::string& m) : std::runtime_error(m) {}
};

struct AliasingBudgetExceeded : std::runtime_error {
  explicit AliasingBudgetExceeded(const std::string& m) : std::runtime_error(m) {}
};

struct EigKernelFailure : std::runtime_error {
  explicit EigKernelFailure(const std::string& m) : std::runtime_error(m) {}
};

struct GapCollapse : std::runtime_error {
  explicit GapCollapse(const std::string& m) : std::runtime_error(m) {}
};

struct TrackingLost : std::runtime_error {
  explicit TrackingLost(const std::string& m) : std::runtime_error(m) {}
};

struct PathExitsZ : std::runtime_error {
  explicit PathExitsZ(const std::string& m) : std::runtime_error(m) {}
};

struct EigOnContour : std::runtime_error {
  explicit EigOnContour(const std::string& m) : std::runtime_error(m) {}
};

struct PoleOnContour : std::runtime_error {
  explicit PoleOnContour(const std::string& m) : std::runtime_error(m) {}
};

struct PoleTooClose : std::runtime_error {
  explicit PoleTooClose(const std::string& m) : std::runtime_error(m) {}
};

struct QuadratureNotConverged : std::runtime_error {
  explicit QuadratureNotConverged(const std::string& m) : std::runtime_error(m) {}
};

}  // namespace stripres
