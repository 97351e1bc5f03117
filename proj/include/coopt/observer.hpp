#pragma once

#include <vector>

#include "coopt/plant.hpp"

namespace coopt {

/// One synchronous update of every follower's estimates of (E, F, v).
/// The leader is node 0 and contributes the true E, F and current v.
ObserverState observer_step(const Topology& graph, const LeaderModel& leader,
                            const Vec& v, const ObserverState& state);

/// Estimation error norms (2-norm) of one follower.
struct ObserverError {
  double E = 0.0;
  double F = 0.0;
  double zeta = 0.0;
};

std::vector<ObserverError> observer_errors(const ObserverState& state,
                                           const LeaderModel& leader,
                                           const Vec& v);

/// Observer state of every follower at instant t of a log.
ObserverState observer_at(const TrajectoryLog& log, int t);

}  // namespace coopt
