#include "coopt/oracle.hpp"

#include <cmath>
#include <complex>
#include <sstream>

#include "coopt/errors.hpp"

namespace coopt {

Mat stein_solve(const Mat& Acl, const Mat& Q) {
  const int n = static_cast<int>(Acl.rows());
  if (Acl.cols() != n || Q.rows() != n || Q.cols() != n) {
    throw DimensionError("stein_solve: shape mismatch");
  }
  const Mat At = Acl.transpose();
  const Mat L = Mat::Identity(n * n, n * n) - kron(At, At);
  Eigen::FullPivLU<Mat> lu(L);
  if (!lu.isInvertible()) {
    throw NumericalError("stein_solve: singular Kronecker system");
  }
  const Vec p = lu.solve(vec(symmetrize(Q)));
  return symmetrize(unvec(p, n, n));
}

Mat dlyap(const Mat& Acl, const Mat& Q) {
  const double rho = spectral_radius(Acl);
  if (!(rho < 1.0)) {
    std::ostringstream os;
    os << "dlyap: no solution, rho(Acl) = " << rho << " >= 1";
    throw NumericalError(os.str());
  }
  return stein_solve(Acl, Q);
}

ClassicPiResult classic_pi(const Mat& A, const Mat& B, const Mat& Q,
                           const Mat& R, const Mat& K0, double eps,
                           int max_iters) {
  const double rho0 = spectral_radius(A - B * K0);
  if (!(rho0 < 1.0)) {
    std::ostringstream os;
    os << "classic_pi: initial gain is not stabilizing (rho = " << rho0
       << ")";
    throw IterationError(os.str());
  }
  ClassicPiResult out;
  Mat K = K0;
  for (int j = 0; j < max_iters; ++j) {
    const Mat P = dlyap(A - B * K, Q + K.transpose() * R * K);
    out.K.push_back(K);
    out.P.push_back(P);
    K = (R + B.transpose() * P * B).ldlt().solve(B.transpose() * P * A);
    if (j > 0 && norm2(P - out.P[j - 1]) <= eps) {
      out.K.push_back(K);
      out.solution = {P, K};
      return out;
    }
  }
  throw IterationError("classic_pi: no convergence within iteration budget");
}

double CoefficientLedger::gamma(int k) const {
  double g = beta;
  for (int m = 0; m <= k && m < static_cast<int>(alpha.size()); ++m) {
    g += alpha[m];
  }
  return g;
}

double alpha_upper_bound(double gamma, const Mat& W, const Mat& P,
                         double alpha_max) {
  const double num = sigma_min(W);
  const double den = sigma_max(P - W);
  if (den <= 1e-14 * std::max(1.0, norm2(P))) return alpha_max;
  return std::min(alpha_max, gamma * (std::sqrt(num / den + 1.0) - 1.0));
}

StabilizingPiResult stabilizing_pi_model_based(
    const Mat& A, const Mat& B, const Mat& Q, const Mat& R, const Mat& K0,
    const StabilizingPiOptions& opt) {
  const auto evaluate = [&](const Mat& K, double g) {
    return stein_solve(g * (A - B * K), Q + K.transpose() * R * K);
  };

  StabilizingPiResult out;
  bool accepted = false;
  for (double beta : opt.beta_sequence) {
    const double g = beta + opt.alpha0;
    try {
      if (is_positive_definite(evaluate(K0, g))) {
        out.ledger.beta = beta;
        accepted = true;
        break;
      }
    } catch (const NumericalError&) {
    }
  }
  if (!accepted) {
    throw IterationError("stabilizing_pi: beta sequence exhausted");
  }
  out.ledger.alpha.push_back(opt.alpha0);

  Mat K = K0;
  for (int k = 0; k < opt.max_iters; ++k) {
    const double g = out.ledger.gamma(k);
    const Mat P = evaluate(K, g);
    out.history.push_back({k, g, K, P});
    const Mat K_next = g * g *
                       (R + g * g * B.transpose() * P * B)
                           .ldlt()
                           .solve(B.transpose() * P * A);
    const Mat Qn = Q + K_next.transpose() * R * K_next;
    double bound = 0.0;
    switch (opt.rule) {
      case ModelStepRule::kExactRho: {
        const double rho = spectral_radius(A - B * K_next);
        bound = rho > 0.0 ? 1.0 / rho - g : opt.alpha_max;
        break;
      }
      case ModelStepRule::kPseudoSolution:
        bound = alpha_upper_bound(g, Qn, evaluate(K_next, g), opt.alpha_max);
        break;
      case ModelStepRule::kMonotone:
        bound = alpha_upper_bound(g, Qn, P, opt.alpha_max);
        break;
    }
    const double alpha = opt.a * bound;
    if (!(alpha > 0.0)) {
      throw IterationError("stabilizing_pi: non-positive step size");
    }
    out.ledger.alpha.push_back(alpha);
    K = K_next;
    if (out.ledger.gamma(k + 1) >= opt.lambda_bar) {
      out.K = K;
      out.final_index = k + 1;
      return out;
    }
  }
  throw IterationError("stabilizing_pi: iteration budget exhausted");
}

AreSolution dare(const Mat& A, const Mat& B, const Mat& Q, const Mat& R) {
  StabilizingPiOptions opt;
  opt.beta_sequence.clear();
  const double rho = spectral_radius(A);
  // Any gamma below 1/rho(A) makes the zero gain admissible.
  for (double b = 0.5; b > 1e-12; b *= 0.5) {
    if (rho == 0.0 || (b + opt.alpha0) * rho < 1.0) {
      opt.beta_sequence.push_back(b);
    }
  }
  const Mat K0 = Mat::Zero(B.cols(), A.rows());
  const auto stab = stabilizing_pi_model_based(A, B, Q, R, K0, opt);
  const Mat P0 = dlyap(A - B * stab.K, Q + stab.K.transpose() * R * stab.K);
  const double eps = 1e-12 * std::max(1.0, norm2(P0));
  return classic_pi(A, B, Q, R, stab.K, eps).solution;
}

double are_residual(const Mat& A, const Mat& B, const Mat& Q, const Mat& R,
                    const Mat& P) {
  const Mat BtPA = B.transpose() * P * A;
  const Mat rhs = A.transpose() * P * A -
                  BtPA.transpose() *
                      (R + B.transpose() * P * B).ldlt().solve(BtPA) +
                  Q;
  return norm2(P - rhs);
}

std::pair<Mat, Mat> regulator_direct_solve(const Mat& A, const Mat& B,
                                           const Mat& C, const Mat& S,
                                           const Mat& E, const Mat& F) {
  using CMat = Eigen::MatrixXcd;
  const int n = static_cast<int>(A.rows());
  const int m = static_cast<int>(B.cols());
  const int ny = static_cast<int>(C.rows());
  const int nv = static_cast<int>(E.rows());

  Eigen::EigenSolver<Mat> es(E, false);
  for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k) {
    const std::complex<double> lam = es.eigenvalues()(k);
    CMat M(n + ny, n + m);
    M.topLeftCorner(n, n) =
        A.cast<std::complex<double>>() - lam * CMat::Identity(n, n);
    M.topRightCorner(n, m) = B.cast<std::complex<double>>();
    M.bottomLeftCorner(ny, n) = C.cast<std::complex<double>>();
    M.bottomRightCorner(ny, m) = S.cast<std::complex<double>>();
    Eigen::JacobiSVD<CMat> svd(M);
    const auto& s = svd.singularValues();
    int r = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i) {
      if (s(i) > kRankTol * std::max(1.0, s(0))) ++r;
    }
    if (r < n + ny) {
      std::ostringstream os;
      os << "regulator equations unsolvable: rank test fails at eigenvalue "
         << lam << " of E (rank " << r << " < " << n + ny << ")";
      throw AssumptionViolation(os.str());
    }
  }

  const Mat In = Mat::Identity(n, n);
  const Mat Iv = Mat::Identity(nv, nv);
  Mat L(n * nv + ny * nv, n * nv + m * nv);
  L << kron(Iv, A) - kron(E.transpose(), In), kron(Iv, B), kron(Iv, C),
      kron(Iv, S);
  Vec rhs = Vec::Zero(L.rows());
  rhs.tail(ny * nv) = -vec(F);
  const Vec z = min_norm_least_squares(L, rhs);
  Mat X = unvec(z.head(n * nv), n, nv);
  Mat U = unvec(z.tail(m * nv), m, nv);
  const double res = regulator_residual(A, B, C, S, E, F, X, U);
  if (res > 1e-9 * std::max(1.0, F.norm())) {
    std::ostringstream os;
    os << "regulator_direct_solve: residual " << res << " too large";
    throw NumericalError(os.str());
  }
  return {X, U};
}

double regulator_residual(const Mat& A, const Mat& B, const Mat& C,
                          const Mat& S, const Mat& E, const Mat& F,
                          const Mat& X, const Mat& U) {
  return norm2(A * X + B * U - X * E) + norm2(C * X + S * U + F);
}

Mat h_from_p(const Mat& P, const Mat& A, const Mat& B, const Mat& Q,
             const Mat& R, double gamma) {
  const int n = static_cast<int>(A.rows());
  const int m = static_cast<int>(B.cols());
  const double g2 = gamma * gamma;
  Mat H(n + m, n + m);
  H.topLeftCorner(n, n) = g2 * A.transpose() * P * A + Q;
  H.topRightCorner(n, m) = g2 * A.transpose() * P * B;
  H.bottomLeftCorner(m, n) = H.topRightCorner(n, m).transpose();
  H.bottomRightCorner(m, m) = g2 * B.transpose() * P * B + R;
  return symmetrize(H);
}

}  // namespace coopt
