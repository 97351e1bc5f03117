#include "coopt/oracle.hpp"

#include <random>

#include <gtest/gtest.h>

#include "coopt/errors.hpp"
#include "testing.hpp"

namespace coopt {
namespace {

using testing::gaussian;
using testing::bundled_follower;

Mat scalar(double a) { return Mat::Constant(1, 1, a); }

// Truncated series sum_k (A')^k Q A^k, independent of the Kronecker solve.
Mat lyap_series(const Mat& A, const Mat& Q) {
  Mat P = Mat::Zero(Q.rows(), Q.cols());
  Mat Ak = Mat::Identity(A.rows(), A.cols());
  for (int k = 0; k < 5000; ++k) {
    const Mat term = Ak.transpose() * Q * Ak;
    P += term;
    if (term.norm() < 1e-18) break;
    Ak = A * Ak;
  }
  return P;
}

TEST(Dlyap, Examples) {
  EXPECT_MAT_NEAR(dlyap(Mat::Zero(2, 2), Mat::Identity(2, 2)),
                  Mat::Identity(2, 2), 0.0);
  EXPECT_NEAR(dlyap(scalar(0.5), scalar(1.0))(0, 0), 4.0 / 3.0, 1e-14);
  EXPECT_THROW(dlyap(scalar(1.0), scalar(1.0)), NumericalError);
  EXPECT_THROW(dlyap(scalar(-1.5), scalar(1.0)), NumericalError);
}

TEST(Dlyap, RandomSchurResidualAndSeries) {
  std::mt19937 rng(11);
  for (int draw = 0; draw < 20; ++draw) {
    const Mat A = testing::random_with_radius(rng, 4, 0.9);
    const Mat Q = testing::random_spd(rng, 4);
    const Mat P = dlyap(A, Q);
    EXPECT_LE((P - A.transpose() * P * A - Q).norm(), 1e-10 * P.norm());
    EXPECT_MAT_NEAR(P, lyap_series(A, Q), 1e-8 * P.norm());
    EXPECT_TRUE(is_positive_definite(P));
  }
}

TEST(ClassicPi, SchurStartAndMonotone) {
  const Mat A = 0.5 * testing::rotation(0.4);
  Mat B(2, 1);
  B << 0, 1;
  const Mat Q = Mat::Identity(2, 2), R = scalar(1.0);
  const auto r = classic_pi(A, B, Q, R, Mat::Zero(1, 2), 1e-12);
  EXPECT_MAT_NEAR(r.P[0], dlyap(A, Q), 1e-12);
  for (std::size_t j = 0; j + 1 < r.P.size(); ++j) {
    EXPECT_GE(min_eigenvalue(r.P[j] - r.P[j + 1]), -1e-10);
  }
  EXPECT_LE(are_residual(A, B, Q, R, r.solution.P), 1e-8);
}

TEST(ClassicPi, RejectsNonStabilizingStart) {
  const auto f = bundled_follower(1);
  EXPECT_THROW(classic_pi(f.A, f.B, Mat::Identity(2, 2), scalar(1.0),
                          Mat::Zero(1, 2), 1e-8),
               IterationError);
}

TEST(ClassicPi, FollowerOneGainErrorDecays) {
  const auto f = bundled_follower(1);
  const Mat Q = Mat::Identity(2, 2), R = scalar(1.0);
  const auto star = dare(f.A, f.B, Q, R);
  StabilizingPiOptions opt;
  const auto stab =
      stabilizing_pi_model_based(f.A, f.B, Q, R, Mat::Zero(1, 2), opt);
  const auto r = classic_pi(f.A, f.B, Q, R, stab.K, 1e-12);
  EXPECT_MAT_NEAR(r.solution.K, star.K, 1e-9);
  double prev = (r.K[0] - star.K).norm();
  for (std::size_t j = 1; j < r.K.size(); ++j) {
    const double now = (r.K[j] - star.K).norm();
    EXPECT_LE(now, prev + 1e-12);
    prev = now;
  }
}

TEST(Dare, FollowersSatisfyRiccati) {
  for (int i = 1; i <= 4; ++i) {
    const auto f = bundled_follower(i);
    const auto s = dare(f.A, f.B, Mat::Identity(2, 2), scalar(1.0));
    EXPECT_LE(are_residual(f.A, f.B, Mat::Identity(2, 2), scalar(1.0), s.P),
              1e-8);
    EXPECT_TRUE(is_positive_definite(s.P));
    EXPECT_LT(spectral_radius(f.A - f.B * s.K), 1.0);
  }
}

TEST(StabilizingPi, SchurPlantZeroStart) {
  const Mat A = 0.6 * testing::rotation(1.0);
  Mat B(2, 1);
  B << 1, 1;
  const auto r = stabilizing_pi_model_based(A, B, Mat::Identity(2, 2),
                                            scalar(1.0), Mat::Zero(1, 2), {});
  EXPECT_GE(r.ledger.gamma(), 1.0);
  for (const auto& step : r.history) {
    EXPECT_LT(step.gamma * spectral_radius(A - B * step.K), 1.0);
  }
}

TEST(StabilizingPi, FollowerOneCrossesOneWithMonotoneGamma) {
  const auto f = bundled_follower(1);
  StabilizingPiOptions opt;
  opt.a = 0.5;
  const auto r = stabilizing_pi_model_based(f.A, f.B, Mat::Identity(2, 2),
                                            scalar(1.0), Mat::Zero(1, 2), opt);
  EXPECT_LT(spectral_radius(f.A - f.B * r.K), 1.0);
  EXPECT_GE(r.ledger.gamma(), 1.0);
  for (std::size_t k = 1; k < r.history.size(); ++k) {
    EXPECT_GT(r.history[k].gamma, r.history[k - 1].gamma);
  }
  for (double a : r.ledger.alpha) EXPECT_GT(a, 0.0);
}

TEST(StabilizingPi, PrescribedMarginHalvesRadius) {
  const auto f = bundled_follower(1);
  StabilizingPiOptions opt;
  opt.lambda_bar = 2.0;
  const auto r = stabilizing_pi_model_based(f.A, f.B, Mat::Identity(2, 2),
                                            scalar(1.0), Mat::Zero(1, 2), opt);
  EXPECT_LT(spectral_radius(f.A - f.B * r.K), 0.5);
}

TEST(StabilizingPi, AllRulesStabilize) {
  for (auto rule : {ModelStepRule::kExactRho, ModelStepRule::kPseudoSolution,
                    ModelStepRule::kMonotone}) {
    for (int i = 1; i <= 4; ++i) {
      const auto f = bundled_follower(i);
      StabilizingPiOptions opt;
      opt.rule = rule;
      const auto r = stabilizing_pi_model_based(
          f.A, f.B, Mat::Identity(2, 2), scalar(1.0), Mat::Zero(1, 2), opt);
      EXPECT_LT(spectral_radius(f.A - f.B * r.K), 1.0)
          << "rule " << static_cast<int>(rule) << " agent " << i;
    }
  }
}

TEST(StabilizingPi, ExhaustedBetaSequenceThrows) {
  const auto f = bundled_follower(1);
  StabilizingPiOptions opt;
  opt.beta_sequence = {1.5, 2.0};
  EXPECT_THROW(stabilizing_pi_model_based(f.A, f.B, Mat::Identity(2, 2),
                                          scalar(1.0), Mat::Zero(1, 2), opt),
               IterationError);
}

TEST(RegulatorDirectSolve, Examples) {
  const auto f = bundled_follower(1);
  const Mat E = testing::rotation(0.3);
  const auto [X0, U0] =
      regulator_direct_solve(f.A, f.B, f.C, f.S, E, Mat::Zero(1, 2));
  EXPECT_MAT_NEAR(X0, Mat::Zero(2, 2), 1e-14);
  EXPECT_MAT_NEAR(U0, Mat::Zero(1, 2), 1e-14);

  for (int i = 1; i <= 4; ++i) {
    const auto g = bundled_follower(i);
    const auto [X, U] =
        regulator_direct_solve(g.A, g.B, g.C, g.S, E, testing::bundled_F());
    EXPECT_LE(regulator_residual(g.A, g.B, g.C, g.S, E, testing::bundled_F(), X, U),
              1e-10);
  }
}

TEST(RegulatorDirectSolve, RankViolationThrows) {
  // A = E, B = 0, S = 0: the rank test fails at every eigenvalue of E.
  const Mat E = testing::rotation(0.3);
  Mat C(1, 2);
  C << 1, 0;
  EXPECT_THROW(regulator_direct_solve(E, Mat::Zero(2, 1), C, Mat::Zero(1, 1), E,
                                      testing::bundled_F()),
               AssumptionViolation);
}

TEST(HFromP, Examples) {
  std::mt19937 rng(12);
  const Mat Q = testing::random_spd(rng, 2), R = testing::random_spd(rng, 1);
  const Mat A = gaussian(rng, 2, 2), B = gaussian(rng, 2, 1);
  Mat QR = Mat::Zero(3, 3);
  QR.topLeftCorner(2, 2) = Q;
  QR.bottomRightCorner(1, 1) = R;
  EXPECT_MAT_NEAR(h_from_p(Mat::Zero(2, 2), A, B, Q, R, 0.7), QR, 0.0);

  const Mat P = testing::random_spd(rng, 2);
  const Mat H = h_from_p(P, A, B, Q, R, 1.0);
  EXPECT_MAT_NEAR(H, H.transpose(), 1e-14);
  const Mat K_h = H.bottomRightCorner(1, 1).ldlt().solve(H.bottomLeftCorner(1, 2));
  const Mat K_pi = (R + B.transpose() * P * B).ldlt().solve(B.transpose() * P * A);
  EXPECT_MAT_NEAR(K_h, K_pi, 1e-12);
}

TEST(HFromP, ClosedLoopIdentity) {
  std::mt19937 rng(13);
  for (int draw = 0; draw < 20; ++draw) {
    const Mat A = gaussian(rng, 3, 3), B = gaussian(rng, 3, 2);
    const Mat Q = testing::random_spd(rng, 3), R = testing::random_spd(rng, 2);
    const Mat P = testing::random_symmetric(rng, 3);
    const Mat K = gaussian(rng, 2, 3);
    const double g = 0.3 + 0.1 * draw;
    Mat IK(5, 3);
    IK << Mat::Identity(3, 3), -K;
    const Mat lhs = IK.transpose() * h_from_p(P, A, B, Q, R, g) * IK;
    const Mat rhs = g * g * (A - B * K).transpose() * P * (A - B * K) + Q +
                    K.transpose() * R * K;
    EXPECT_MAT_NEAR(lhs, rhs, 1e-10 * (1.0 + rhs.norm()));
  }
}

TEST(HFromP, MatchesQLearningKernel) {
  const auto& learned = testing::bundled_alg2();
  const auto& o = testing::bundled_oracle();
  for (std::size_t k = 0; k < o.size(); ++k) {
    EXPECT_MAT_NEAR(learned.agents[k].H, o[k].H, 1e-6);
  }
}

}  // namespace
}  // namespace coopt
