#pragma once

#include <utility>
#include <vector>

#include "coopt/config.hpp"
#include "coopt/learned.hpp"
#include "coopt/plant.hpp"
#include "coopt/regulator.hpp"

namespace coopt {

/// Stacked data of one follower over transition rows t = t0 .. tf-1, with one
/// entry per shift l = 0..h where x~_l(t) = x(t) - X_l zeta(t).
/// Row layouts: vecv for quadratic blocks, Kronecker (a kron b) with b the
/// fast index for bilinear blocks, so that b' L a = vec(L) . (a kron b).
struct RegressionBundle {
  int n = 0, m = 0, nv = 0, h = 0;
  int t0 = 0, tf = 0, rows = 0;

  std::vector<Mat> xt;       ///< x~_l(t), rows x n
  std::vector<Mat> xt_next;  ///< x~_l(t+1), rows x n
  Mat u;                     ///< rows x m
  Mat zeta;                  ///< rows x nv

  std::vector<Mat> theta;  ///< vecv(x~(t+1)) - vecv(x~(t))
  std::vector<Mat> Gx;     ///< vecv(x~)
  std::vector<Mat> Gxx;    ///< x~ kron x~
  std::vector<Mat> Gux;    ///< u kron x~
  std::vector<Mat> Gzx;    ///< zeta kron x~
  Mat Gu;                  ///< vecv(u)
  Mat Gz;                  ///< vecv(zeta)
  Mat Gzu;                 ///< zeta kron u
};

/// Builds the bundle for follower @p agent (0-based) from a behavior log.
/// Requires the log to cover instant tf.
RegressionBundle build_regression_bundle(const TrajectoryLog& log, int agent,
                                         const RegulatorBasis& basis, int t0,
                                         int tf,
                                         Execution exec = Execution::kSerial);

struct RankCheck {
  int achieved = 0;
  int required = 0;
  bool ok() const { return achieved >= required; }
};

/// Excitation test of the off-policy regression, minimum over shifts l:
/// rank [Gxx, Gu, Gz, Gux, Gzx, Gzu] >= (n+m+nv)(n+m+nv+1)/2.
RankCheck check_rank_offpolicy(const RegressionBundle& b,
                               double tol = kRankTol);

/// Unknowns of the off-policy regression for one shift l.
struct StabSolution {
  Mat P, L1, L2, L3, L4, L5;
};

/// Regressor and right-hand side for gain K at scale gamma.
std::pair<Mat, Vec> offpolicy_regressor(const RegressionBundle& b, int l,
                                        const Mat& K, double gamma,
                                        const Mat& Q, const Mat& R);

/// Solves the regression; symmetric unknowns are symmetrized.
/// gamma = 1 gives the optimal-phase evaluation.
StabSolution solve_stab_regression(const RegressionBundle& b, int l,
                                   const Mat& K, double gamma, const Mat& Q,
                                   const Mat& R, double tol = kRankTol);

/// K = gamma^2 (R + gamma^2 L2)^{-1} L1'.
Mat update_gain_stab(const Mat& L1, const Mat& L2, double gamma, const Mat& R);

/// First beta in @p sequence whose evaluation of K0 at beta + alpha0 is
/// positive definite. Throws IterationError when the sequence is exhausted.
double determine_beta0(const RegressionBundle& b, const Mat& K0, double alpha0,
                       const std::vector<double>& sequence, const Mat& Q,
                       const Mat& R, double tol = kRankTol);

/// Bound from the pseudo-solution: K_next evaluated at the old gamma.
double scheme1_alpha_bound(const RegressionBundle& b, const Mat& K_next,
                           double gamma, const Mat& Q, const Mat& R,
                           double alpha_max, double tol = kRankTol);

/// Bound from the current value matrix P^k.
double scheme2_alpha_bound(const Mat& P, const Mat& Qbar_next, double gamma,
                           double alpha_max);

struct StabPhaseResult {
  Mat K;
  int final_index = 0;
  CoefficientLedger ledger;
  std::vector<StabRecord> history;
};

/// Stabilizing off-policy iteration until gamma >= lambda_bar.
StabPhaseResult stabilizing_phase(const RegressionBundle& b, const Mat& K0,
                                  const Mat& Q, const Mat& R,
                                  const LearningOptions& opt);

struct OptPhaseResult {
  Mat P;   ///< P^j at termination
  Mat K;   ///< K^{j+1}
  Mat L1;  ///< L1^j
  std::vector<Mat> L3;  ///< L3_l^j, l = 0..h
  int final_j = 0;
  std::vector<OptRecord> history;
};

/// Off-policy policy iteration with gamma = 1 from a stabilizing K0 until
/// ||P^j - P^{j-1}||_2 <= eps1.
OptPhaseResult optimal_phase(const RegressionBundle& b, const Mat& K0,
                             const Mat& Q, const Mat& R,
                             const LearningOptions& opt);

/// Whole off-policy pipeline for one follower using only the log, the
/// output map Cbar = [C, S], the state dimension and the cost weights.
AgentLearning learn_agent_offpolicy(const TrajectoryLog& log, int agent,
                                    const Mat& Cbar, int n, const Mat& Q,
                                    const Mat& R, const Mat& K0,
                                    const LearningOptions& opt, int tf);

/// Simulates the behavior policy, picks the data window and learns every
/// follower. Stage failures surface as StageError.
LearnedGains run_algorithm1(const ExperimentConfig& config);

}  // namespace coopt
