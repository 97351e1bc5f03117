#pragma once

#include <utility>
#include <vector>

#include "coopt/matkit.hpp"

namespace coopt {

/// Unique solution of P = Acl' P Acl + Q by the Kronecker linear system.
/// Performs no stability check; throws NumericalError only if the system is
/// singular (some eigenvalue pair of Acl multiplies to 1).
Mat stein_solve(const Mat& Acl, const Mat& Q);

/// Discrete Lyapunov solve. Throws NumericalError when rho(Acl) >= 1.
Mat dlyap(const Mat& Acl, const Mat& Q);

/// Stabilizing solution of the Riccati equation and its gain.
struct AreSolution {
  Mat P;
  Mat K;
};

struct ClassicPiResult {
  AreSolution solution;
  std::vector<Mat> P;  ///< P^0, P^1, ...
  std::vector<Mat> K;  ///< K^0, K^1, ...
};

/// Policy iteration from a stabilizing K0:
/// P^j = (A-BK^j)' P^j (A-BK^j) + Q + K^j' R K^j,
/// K^{j+1} = (R + B'P^j B)^{-1} B'P^j A.
/// Stops when ||P^j - P^{j-1}||_2 <= eps.
ClassicPiResult classic_pi(const Mat& A, const Mat& B, const Mat& Q,
                           const Mat& R, const Mat& K0, double eps,
                           int max_iters = 1000);

/// Coefficients scaling the virtual closed loop gamma (A - B K).
struct CoefficientLedger {
  double beta = 0.0;
  std::vector<double> alpha;  ///< alpha^0, alpha^1, ...

  /// beta + sum_{m <= k} alpha^m.
  double gamma(int k) const;
  double gamma() const { return gamma(static_cast<int>(alpha.size()) - 1); }
};

/// Step-size rule for the model-based stabilizing iteration.
enum class ModelStepRule {
  kExactRho,       ///< alpha = a (1/rho(A - B K^{k+1}) - gamma^k)
  kPseudoSolution, ///< bound from the Lyapunov solution of K^{k+1} at gamma^k
  kMonotone,       ///< bound from the current solution P^k
};

struct StabilizingPiOptions {
  std::vector<double> beta_sequence{0.5};
  double alpha0 = 1e-4;
  ModelStepRule rule = ModelStepRule::kExactRho;
  double a = 0.5;
  double lambda_bar = 1.0;
  double alpha_max = 10.0;
  int max_iters = 10000;
};

struct StabilizingPiStep {
  int k = 0;
  double gamma = 0.0;  ///< gamma^k used to evaluate K^k
  Mat K;               ///< K^k
  Mat P;               ///< solution for (K^k, gamma^k)
};

struct StabilizingPiResult {
  Mat K;  ///< K^{k+1} at termination
  int final_index = 0;
  CoefficientLedger ledger;
  std::vector<StabilizingPiStep> history;
};

/// Model-based stabilizing policy iteration from an arbitrary gain K0.
StabilizingPiResult stabilizing_pi_model_based(const Mat& A, const Mat& B,
                                               const Mat& Q, const Mat& R,
                                               const Mat& K0,
                                               const StabilizingPiOptions& opt);

/// Upper bound gamma (sqrt(sigma_min(W) / sigma_max(P - W) + 1) - 1) on the
/// next step size; returns alpha_max when sigma_max(P - W) is negligible.
double alpha_upper_bound(double gamma, const Mat& W, const Mat& P,
                         double alpha_max);

/// Reference Riccati solution: stabilizing iteration from K = 0 followed by
/// classic policy iteration to 1e-12.
AreSolution dare(const Mat& A, const Mat& B, const Mat& Q, const Mat& R);

/// Residual of P = A'PA - A'PB (R + B'PB)^{-1} B'PA + Q, 2-norm.
double are_residual(const Mat& A, const Mat& B, const Mat& Q, const Mat& R,
                    const Mat& P);

/// Minimum-norm solution of A X + B U = X E, C X + S U + F = 0.
/// Throws AssumptionViolation if the rank test fails at some eigenvalue of E.
std::pair<Mat, Mat> regulator_direct_solve(const Mat& A, const Mat& B,
                                           const Mat& C, const Mat& S,
                                           const Mat& E, const Mat& F);

/// Residual norms ||AX + BU - XE||_2 + ||CX + SU + F||_2.
double regulator_residual(const Mat& A, const Mat& B, const Mat& C,
                          const Mat& S, const Mat& E, const Mat& F,
                          const Mat& X, const Mat& U);

/// Q-function kernel [[g^2 A'PA + Q, g^2 A'PB], [g^2 B'PA, g^2 B'PB + R]].
Mat h_from_p(const Mat& P, const Mat& A, const Mat& B, const Mat& Q,
             const Mat& R, double gamma);

}  // namespace coopt
