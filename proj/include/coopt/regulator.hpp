#pragma once

#include <vector>

#include "coopt/matkit.hpp"

namespace coopt {

/// Candidate pairs (X_l, U_l), l = 0..h. Pair 0 is zero, pair 1 is the
/// estimate built from an observed F, pairs 2..h span the kernel of
/// I kron [C, S].
struct RegulatorBasis {
  int n = 0, m = 0, nv = 0;
  std::vector<Mat> X;
  std::vector<Mat> U;

  int h() const { return static_cast<int>(X.size()) - 1; }
};

/// @p Cbar is [C, S]; @p F_obs is the follower's estimate of F.
/// Throws AssumptionViolation if Cbar lacks full row rank.
RegulatorBasis build_basis(const Mat& Cbar, const Mat& F_obs, int n,
                           double tol = kRankTol);

/// Stacked linear problem Omega chi = eta with its gradient step kappa.
/// chi = [delta_2 .. delta_h, vec([X; U])].
struct RegulatorProblem {
  Mat Omega;
  Vec eta;
  double kappa = 0.0;
  int n = 0, m = 0, nv = 0, h = 0;
};

/// Model-based assembly with an arbitrary weighting M (n x n).
RegulatorProblem assemble_model_based(const Mat& M, const Mat& A, const Mat& B,
                                      const Mat& E,
                                      const RegulatorBasis& basis);

/// Data-driven assembly from L3_l = A'P pi_l (entries 1..h of @p L3; entry 0
/// ignored) and L1 = A'PB, which replaces M Ups(X_l, U_l) by -L3_l - L1 U_l.
RegulatorProblem assemble_data_driven(const std::vector<Mat>& L3,
                                      const Mat& L1,
                                      const RegulatorBasis& basis);

/// kappa = c / rho(Omega' Omega). Throws NumericalError for a zero Omega.
double choose_kappa(const Mat& Omega, double c = 1.0);

struct ChiRecord {
  int n = 0;
  double residual = 0.0;   ///< ||Omega chi^n - eta||
  double chi_delta = 0.0;  ///< ||chi^n - chi^{n-1}||
};

struct ChiResult {
  Vec chi;
  Mat X, U;
  int iterations = 0;
  std::vector<ChiRecord> history;
  std::vector<Vec> iterates;  ///< kept only when requested
};

/// Gradient iteration chi+ = chi - kappa Omega'(Omega chi - eta) from chi0
/// (zero if empty) until ||chi+ - chi|| <= eps. Throws IterationError when
/// max_iters is exceeded.
ChiResult iterate_chi(const RegulatorProblem& problem, double eps,
                      int max_iters = 200000, const Vec& chi0 = Vec(),
                      bool keep_iterates = false);

/// (X, U) block of a chi vector.
std::pair<Mat, Mat> split_chi(const RegulatorProblem& problem, const Vec& chi);

/// T = U + K X.
Mat feedforward_gain(const Mat& U, const Mat& K, const Mat& X);

}  // namespace coopt
