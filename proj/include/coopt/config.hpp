#pragma once

#include <string>
#include <vector>

#include "coopt/matkit.hpp"
#include "coopt/parallel.hpp"
#include "coopt/plant.hpp"

namespace coopt {

enum class Algorithm { kOffPolicy = 1, kQLearning = 2 };

/// Step-size schemes. 1 and 2 belong to the off-policy algorithm, A, B and C
/// to Q-learning.
enum class Scheme { k1, k2, kA, kB, kC };

const char* to_string(Scheme s);
/// Parses "1", "2", "A", "B", "C" (case-insensitive); throws ConfigError.
Scheme parse_scheme(const std::string& s);
bool scheme_matches(Algorithm alg, Scheme s);

struct LearningOptions {
  Algorithm algorithm = Algorithm::kOffPolicy;
  Scheme scheme = Scheme::k2;
  int t0 = 85;
  /// Last sample instant of the data window; negative selects the smallest
  /// value that satisfies the algorithm's rank conditions.
  int tf = -1;
  int tf_max = 400;
  double alpha0 = 1e-4;
  std::vector<double> beta_sequence;
  double a = 0.5;
  double lambda_bar = 1.0;
  double eps1 = 1e-4;
  double eps2 = 1e-4;
  double kappa_c = 1.0;
  double alpha_max = 10.0;
  double rank_tol = kRankTol;
  int stab_max_iters = 10000;
  int opt_max_iters = 1000;
  int chi_max_iters = 200000;
};

struct ExperimentConfig {
  MasModel mas;
  InitialConditions ic;
  std::vector<Mat> Q, R, K0;
  NoiseSpec noise;
  LearningOptions learning;
  int closed_loop_horizon = 400;
  double divergence_bound = kDivergenceBound;
  Execution exec = Execution::kSerial;
};

}  // namespace coopt
