#include "coopt/pipeline.hpp"

#include <sstream>

#include "coopt/observer.hpp"

namespace coopt {

Mat output_map(const FollowerModel& f) {
  Mat Cbar(f.ny(), f.n() + f.m());
  Cbar << f.C, f.S;
  return Cbar;
}

TrajectoryLog behavior_log(const ExperimentConfig& config, int last) {
  return simulate_behavior(config.mas, config.ic, config.K0, config.noise,
                           last, config.divergence_bound);
}

std::vector<ControllerGains> LearnedGains::controller() const {
  std::vector<ControllerGains> g;
  for (const auto& a : agents) g.push_back({a.K, a.T});
  return g;
}

LearnedGains run_pipeline(
    const ExperimentConfig& config,
    const std::function<bool(const TrajectoryLog&, int, int)>& satisfied,
    const std::function<AgentLearning(const TrajectoryLog&, int, int)>&
        learn) {
  const auto& lo = config.learning;
  const int N = config.mas.N();
  const int last = lo.tf >= 0 ? lo.tf : lo.tf_max;
  if (last <= lo.t0) {
    throw StageError("data-collection", 0, StageError::Kind::kConfig,
                     "data window must end after t0");
  }
  const TrajectoryLog full = with_stage(
      "behavior-simulation", 0, [&] { return behavior_log(config, last); });

  int tf = lo.tf;
  if (tf < 0) {
    // Samples arrive one instant at a time; stop at the first tf at which
    // every agent's regression is excited.
    for (int cand = lo.t0 + 1; cand <= lo.tf_max && tf < 0; ++cand) {
      bool all = true;
      for (int k = 0; k < N && all; ++k) all = satisfied(full, k, cand);
      if (all) tf = cand;
    }
    if (tf < 0) {
      std::ostringstream os;
      os << "rank conditions not met on [" << lo.t0 << ", " << lo.tf_max
         << "]";
      throw StageError("data-collection", 0, StageError::Kind::kRank,
                       os.str());
    }
  }

  LearnedGains out;
  out.algorithm = lo.algorithm;
  out.scheme = lo.scheme;
  out.t0 = lo.t0;
  out.tf = tf;
  out.behavior = full.truncated(tf);
  out.agents.resize(N);
  parallel_for(N, config.exec, [&](int k) {
    out.agents[k] = learn(out.behavior, k, tf);
  });
  return out;
}

}  // namespace coopt
