#pragma once

#include <limits>
#include <vector>

#include "coopt/config.hpp"
#include "coopt/oracle.hpp"
#include "coopt/plant.hpp"
#include "coopt/regulator.hpp"

namespace coopt {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// One step k of a stabilizing phase.
struct StabRecord {
  int k = 0;
  double gamma = 0.0;  ///< gamma^k
  Mat K;               ///< K^k
  Mat P;               ///< value matrix for (K^k, gamma^k)
  Mat H;               ///< Q-function kernel (Q-learning only)
  Mat K_next;          ///< K^{k+1}
  double alpha = 0.0;  ///< alpha^{k+1}
  /// Upper bounds on alpha^{k+1}; NaN when the scheme does not apply.
  double bound_1 = kNaN, bound_2 = kNaN;
  double bound_A = kNaN, bound_B = kNaN, bound_C = kNaN;
};

/// One step j of an optimal phase (gamma = 1).
struct OptRecord {
  int j = 0;
  Mat K;  ///< K^j
  Mat P;  ///< P^j
  Mat H;  ///< H^j (Q-learning only)
};

/// Everything learned for one follower.
struct AgentLearning {
  // Stabilizing phase.
  Mat K_stab;
  int stab_final_index = 0;
  CoefficientLedger ledger;
  std::vector<StabRecord> stab;
  // Optimal phase.
  std::vector<OptRecord> opt;
  Mat P, H;  ///< last evaluation P^j (and H^j)
  Mat K;     ///< K^{j+1}, the learned feedback gain
  // Regulator.
  RegulatorBasis basis;
  RegulatorProblem problem;
  ChiResult chi;
  Mat X, U, T;
};

struct LearnedGains {
  Algorithm algorithm = Algorithm::kOffPolicy;
  Scheme scheme = Scheme::k2;
  int t0 = 0;
  int tf = 0;
  TrajectoryLog behavior;
  std::vector<AgentLearning> agents;

  std::vector<ControllerGains> controller() const;
};

}  // namespace coopt
