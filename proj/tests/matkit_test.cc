#include "coopt/matkit.hpp"

#include <random>

#include <gtest/gtest.h>

#include "coopt/errors.hpp"
#include "testing.hpp"

namespace coopt {
namespace {

using testing::gaussian;

Vec v_of(std::initializer_list<double> xs) {
  Vec v(xs.size());
  int i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

TEST(Vecs, IdentityAndDoubling) {
  EXPECT_MAT_NEAR(vecs(Mat::Identity(2, 2)), v_of({1, 0, 1}), 0.0);
  Mat S(2, 2);
  S << 1, 2, 2, 3;
  EXPECT_MAT_NEAR(vecs(S), v_of({1, 4, 3}), 0.0);
}

TEST(Vecs, RejectsBadShapes) {
  Mat asym(2, 2);
  asym << 1, 2, 0, 3;
  EXPECT_THROW(vecs(asym), DimensionError);
  EXPECT_THROW(vecs(Mat::Zero(2, 3)), DimensionError);
}

TEST(Vecs, RoundTrip) {
  std::mt19937 rng(1);
  for (int a = 1; a <= 4; ++a) {
    const Mat S = testing::random_symmetric(rng, a);
    EXPECT_MAT_NEAR(unvecs(vecs(S), a), S, 1e-15);
  }
}

TEST(Vecv, Expansion) {
  EXPECT_MAT_NEAR(vecv(v_of({1, 0})), v_of({1, 0, 0}), 0.0);
  EXPECT_MAT_NEAR(vecv(v_of({2, 3})), v_of({4, 6, 9}), 0.0);
}

TEST(Vecv, QuadraticFormIdentityAgainstBruteForce) {
  std::mt19937 rng(2);
  for (int draw = 0; draw < 100; ++draw) {
    const Mat S = testing::random_symmetric(rng, 3);
    const Vec x = gaussian(rng, 3, 1);
    double brute = 0.0;
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) brute += x(i) * S(i, j) * x(j);
    }
    EXPECT_NEAR(vecs(S).dot(vecv(x)), brute, 1e-12 * (1.0 + std::abs(brute)));
  }
}

TEST(Vec, ColumnStackingAndKronPairing) {
  Mat M(2, 3);
  M << 1, 2, 3, 4, 5, 6;
  EXPECT_MAT_NEAR(vec(M), v_of({1, 4, 2, 5, 3, 6}), 0.0);
  EXPECT_MAT_NEAR(unvec(vec(M), 2, 3), M, 0.0);
  // b' L a = vec(L) . (a kron b).
  std::mt19937 rng(3);
  const Mat L = gaussian(rng, 3, 2);
  const Vec a = gaussian(rng, 2, 1);
  const Vec b = gaussian(rng, 3, 1);
  const Vec ab = kron(a, b);
  EXPECT_NEAR(b.dot(L * a), vec(L).dot(ab), 1e-12);
}

TEST(SpectralRadius, KnownValues) {
  EXPECT_NEAR(spectral_radius(Mat::Identity(2, 2)), 1.0, 1e-15);
  // lambda^2 + 0.2 lambda + 1 has complex roots of modulus 1.
  EXPECT_NEAR(spectral_radius(testing::bundled_follower(1).A), 1.0, 1e-12);
  EXPECT_NEAR(spectral_radius(testing::rotation(0.3)), 1.0, 1e-12);
  Mat bad = Mat::Identity(2, 2);
  bad(0, 1) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(spectral_radius(bad), NumericalError);
}

TEST(LeastSquares, SmallCases) {
  EXPECT_MAT_NEAR(min_norm_least_squares(Mat::Identity(3, 3), v_of({1, 2, 3})),
                  v_of({1, 2, 3}), 1e-14);
  Mat Phi(2, 1);
  Phi << 1, 1;
  EXPECT_MAT_NEAR(min_norm_least_squares(Phi, v_of({2, 2})), v_of({2}), 1e-14);
  // Underdetermined: minimum-norm picks the symmetric split.
  Mat wide(1, 2);
  wide << 1, 1;
  EXPECT_MAT_NEAR(min_norm_least_squares(wide, v_of({2})), v_of({1, 1}), 1e-14);
}

TEST(LeastSquares, MatchesNormalEquationsAndOrthogonality) {
  std::mt19937 rng(4);
  for (int draw = 0; draw < 20; ++draw) {
    const Mat Phi = gaussian(rng, 30, 6);
    const Vec y = gaussian(rng, 30, 1);
    const Vec x = min_norm_least_squares(Phi, y);
    const Vec normal = (Phi.transpose() * Phi).ldlt().solve(Phi.transpose() * y);
    EXPECT_MAT_NEAR(x, normal, 1e-10);
    EXPECT_LE((Phi.transpose() * (Phi * x - y)).norm(), 1e-10);
    EXPECT_MAT_NEAR(full_rank_least_squares(Phi, y, "test"), normal, 1e-10);
  }
}

TEST(LeastSquares, FullRankVariantNamesCondition) {
  Mat Phi(3, 2);
  Phi << 1, 2, 2, 4, 3, 6;
  try {
    full_rank_least_squares(Phi, Vec::Ones(3), "toy excitation");
    FAIL() << "expected RankConditionError";
  } catch (const RankConditionError& e) {
    EXPECT_EQ(e.condition(), "toy excitation");
    EXPECT_EQ(e.achieved(), 1);
    EXPECT_EQ(e.required(), 2);
  }
}

TEST(Rank, BasicsAndInvariance) {
  EXPECT_EQ(rank_with_tol(Mat::Zero(2, 2)), 0);
  EXPECT_EQ(rank_with_tol(Mat::Identity(5, 5)), 5);
  std::mt19937 rng(5);
  const Mat M = gaussian(rng, 6, 3) * gaussian(rng, 3, 5);  // rank 3
  EXPECT_EQ(rank_with_tol(M), 3);
  Eigen::PermutationMatrix<Eigen::Dynamic> perm(6);
  perm.setIdentity();
  std::shuffle(perm.indices().data(), perm.indices().data() + 6, rng);
  EXPECT_EQ(rank_with_tol(perm * M), 3);
  const Mat Qo = gaussian(rng, 5, 5).householderQr().householderQ();
  EXPECT_EQ(rank_with_tol(M * Qo), 3);
}

TEST(NullSpace, Examples) {
  EXPECT_TRUE(null_space_basis(Mat::Identity(2, 2)).empty());
  Mat row(1, 2);
  row << 1, 0;
  const auto k = null_space_basis(row);
  ASSERT_EQ(k.size(), 1u);
  EXPECT_NEAR(std::abs(k[0](1)), 1.0, 1e-14);
  EXPECT_NEAR(k[0](0), 0.0, 1e-14);

  Mat cbar(1, 3);
  cbar << 1, 0, 1;
  const Mat big = kron(Mat::Identity(2, 2), cbar);
  const auto basis = null_space_basis(big);
  ASSERT_EQ(basis.size(), 4u);
  for (std::size_t i = 0; i < basis.size(); ++i) {
    EXPECT_LE((big * basis[i]).norm(), 1e-14);
    for (std::size_t j = 0; j < basis.size(); ++j) {
      EXPECT_NEAR(basis[i].dot(basis[j]), i == j ? 1.0 : 0.0, 1e-14);
    }
  }
}

TEST(Definiteness, Examples) {
  EXPECT_TRUE(is_positive_definite(Mat::Identity(2, 2)));
  Mat D = Mat::Zero(2, 2);
  D.diagonal() << 1, -1e-3;
  EXPECT_FALSE(is_positive_definite(D, 0.0));
  EXPECT_NEAR(min_eigenvalue(D), -1e-3, 1e-15);
}

}  // namespace
}  // namespace coopt
