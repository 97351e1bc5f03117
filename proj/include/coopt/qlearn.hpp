#pragma once

#include <vector>

#include "coopt/config.hpp"
#include "coopt/learned.hpp"
#include "coopt/offpolicy.hpp"

namespace coopt {

/// Data of the Q-learning regressions over rows t = t0 .. tf-1 (shift l = 0).
struct QRegression {
  int n = 0, m = 0;
  int t0 = 0, tf = 0, rows = 0;
  Mat x;       ///< x(t), rows x n
  Mat x_next;  ///< x(t+1), rows x n
  Mat u;       ///< rows x m
  Mat GZ;      ///< vecv([x(t); u(t)])
};

QRegression build_q_regression(const TrajectoryLog& log, int agent, int t0,
                               int tf);

/// rank(GZ) >= (n+m)(n+m+1)/2.
RankCheck check_rank_qfunction(const QRegression& q, double tol = kRankTol);

/// Regulator-data test, minimum over l = 1..h:
/// rank [Gzx_l, Gzu, Gz] >= (n+m) nv + nv(nv+1)/2.
RankCheck check_rank_qregulator(const RegressionBundle& b,
                                double tol = kRankTol);

/// vecv rows of z(t+1) = [x(t+1); -K x(t+1)].
Mat successor_rows(const QRegression& q, const Mat& K);

/// Q-function kernel of gain K at scale gamma from
/// (GZ - gamma^2 Gz(K)) vecs(H) = GZ vecs(Q_R).
Mat solve_H(const QRegression& q, const Mat& K, double gamma, const Mat& Q,
            const Mat& R, double tol = kRankTol);

/// K = H22^{-1} H21. Throws NumericalError if H22 is not positive definite.
Mat update_gain_from_H(const Mat& H, int n);

/// P = [I, -K'] H [I; -K].
Mat p_from_h(const Mat& H, const Mat& K);

/// blockdiag(Q, R).
Mat q_r(const Mat& Q, const Mat& R);

double determine_beta0_q(const QRegression& q, const Mat& K0, double alpha0,
                         const std::vector<double>& sequence, const Mat& Q,
                         const Mat& R, double tol = kRankTol);

/// Monotone bound on P recovered from H^k.
double schemeA_alpha_bound(const Mat& H, const Mat& K, const Mat& Qbar_next,
                           double gamma, double alpha_max);

/// Bound from the pseudo-solution: K_next evaluated at the old gamma.
double schemeB_alpha_bound(const QRegression& q, const Mat& K_next,
                           double gamma, const Mat& Q, const Mat& R,
                           double alpha_max, double tol = kRankTol);

/// Bound from the current kernel H^k.
double schemeC_alpha_bound(const Mat& H, double gamma, const Mat& Q,
                           const Mat& R, double alpha_max);

StabPhaseResult stabilizing_phase_q(const QRegression& q, const Mat& K0,
                                    const Mat& Q, const Mat& R,
                                    const LearningOptions& opt);

struct QOptPhaseResult {
  Mat H;  ///< H^j at termination
  Mat P;  ///< P^j recovered from H^j
  Mat K;  ///< K^{j+1}
  Mat K_eval;  ///< K^j
  int final_j = 0;
  std::vector<OptRecord> history;
};

QOptPhaseResult optimal_phase_q(const QRegression& q, const Mat& K0,
                                const Mat& Q, const Mat& R,
                                const LearningOptions& opt);

/// Regulator unknowns of shift l.
struct RegulatorLs {
  Mat L3, L4, L5;
};

/// Solves [2 Gzx_l, 2 Gzu, Gz] [vec L3; vec L4; vecs L5] = hbar with hbar
/// assembled from the learned H, the gain K it evaluates and P.
RegulatorLs solve_regulator_Ls(const RegressionBundle& b, int l, const Mat& H,
                               const Mat& K, const Mat& P, const Mat& Q,
                               const Mat& R, double tol = kRankTol);

AgentLearning learn_agent_qlearning(const TrajectoryLog& log, int agent,
                                    const Mat& Cbar, int n, const Mat& Q,
                                    const Mat& R, const Mat& K0,
                                    const LearningOptions& opt, int tf);

LearnedGains run_algorithm2(const ExperimentConfig& config);

}  // namespace coopt
