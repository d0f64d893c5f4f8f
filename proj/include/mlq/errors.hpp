#pragma once

#include <stdexcept>
#include <string>

namespace mlq {

// Contract violations: a caller broke a documented precondition.
struct ContractViolation : std::invalid_argument {
  explicit ContractViolation(const std::string& msg) : std::invalid_argument(msg) {}
};

// |H_p| fell below the degeneracy threshold, i.e. the point is numerically
// inside the double-characteristic set.
struct DegenerateHamiltonField : std::runtime_error {
  explicit DegenerateHamiltonField(const std::string& msg) : std::runtime_error(msg) {}
};

struct PreparationFailure : std::runtime_error {
  explicit PreparationFailure(const std::string& msg) : std::runtime_error(msg) {}
};

struct NormalizationDegenerate : std::runtime_error {
  explicit NormalizationDegenerate(const std::string& msg) : std::runtime_error(msg) {}
};

struct CausticError : std::runtime_error {
  CausticError(const std::string& msg, double t, double x0) : std::runtime_error(msg), t(t), x0(x0) {}
  double t, x0;
};

struct CutoffPlacementError : std::runtime_error {
  explicit CutoffPlacementError(const std::string& msg) : std::runtime_error(msg) {}
};

struct GridTooCoarse : std::runtime_error {
  explicit GridTooCoarse(const std::string& msg) : std::runtime_error(msg) {}
};

struct PeriodizationError : std::runtime_error {
  explicit PeriodizationError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ConditioningError : std::runtime_error {
  explicit ConditioningError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ScenarioError : std::runtime_error {
  explicit ScenarioError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace mlq
