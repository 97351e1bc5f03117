#pragma once

#include <stdexcept>
#include <string>

namespace coopt {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes do not agree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A linear-algebra primitive could not produce a trustworthy answer.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// A data matrix lacks the column rank a regression needs.
class RankConditionError : public Error {
 public:
  RankConditionError(std::string condition, int achieved, int required)
      : Error("rank condition '" + condition + "' failed: rank " +
              std::to_string(achieved) + " < required " +
              std::to_string(required)),
        condition_(std::move(condition)),
        achieved_(achieved),
        required_(required) {}

  const std::string& condition() const { return condition_; }
  int achieved() const { return achieved_; }
  int required() const { return required_; }

 private:
  std::string condition_;
  int achieved_;
  int required_;
};

/// A simulated state left the configured bound.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

/// Malformed or inconsistent configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A standing modelling assumption does not hold for the supplied data.
class AssumptionViolation : public Error {
 public:
  using Error::Error;
};

/// An iterative procedure stalled, exhausted its budget or lost stability.
class IterationError : public Error {
 public:
  using Error::Error;
};

/// Wraps a failure inside a learning pipeline with the stage and agent.
class StageError : public Error {
 public:
  enum class Kind { kConfig, kRank, kIteration };

  StageError(std::string stage, int agent, Kind kind, const std::string& what)
      : Error("stage '" + stage + "' failed for agent " +
              std::to_string(agent) + ": " + what),
        stage_(std::move(stage)),
        agent_(agent),
        kind_(kind) {}

  const std::string& stage() const { return stage_; }
  int agent() const { return agent_; }
  Kind kind() const { return kind_; }

 private:
  std::string stage_;
  int agent_;
  Kind kind_;
};

}  // namespace coopt
