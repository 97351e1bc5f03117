#pragma once

#include <functional>
#include <string>

#include "coopt/config.hpp"
#include "coopt/errors.hpp"
#include "coopt/learned.hpp"

namespace coopt {

/// Runs @p body and rethrows library failures as StageError tagged with
/// @p stage and the 1-based agent number.
template <typename Body>
auto with_stage(const char* stage, int agent, Body&& body) -> decltype(body()) {
  try {
    return body();
  } catch (const StageError&) {
    throw;
  } catch (const RankConditionError& e) {
    throw StageError(stage, agent, StageError::Kind::kRank, e.what());
  } catch (const ConfigError& e) {
    throw StageError(stage, agent, StageError::Kind::kConfig, e.what());
  } catch (const AssumptionViolation& e) {
    throw StageError(stage, agent, StageError::Kind::kConfig, e.what());
  } catch (const DimensionError& e) {
    throw StageError(stage, agent, StageError::Kind::kConfig, e.what());
  } catch (const Error& e) {
    throw StageError(stage, agent, StageError::Kind::kIteration, e.what());
  }
}

/// [C, S] of a follower; the only model data the learners touch.
Mat output_map(const FollowerModel& f);

/// Behavior-policy log on [0, last + 1].
TrajectoryLog behavior_log(const ExperimentConfig& config, int last);

/// Shared driver: simulate, choose the window through @p satisfied (or use
/// the configured tf), then learn each agent under config.exec.
LearnedGains run_pipeline(const ExperimentConfig& config,
                          const std::function<bool(const TrajectoryLog&, int,
                                                   int)>& satisfied,
                          const std::function<AgentLearning(
                              const TrajectoryLog&, int, int)>& learn);

}  // namespace coopt
