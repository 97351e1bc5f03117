#pragma once

#include <vector>

#include <Eigen/Dense>

namespace coopt {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

/// Default relative tolerance for numerical rank decisions.
inline constexpr double kRankTol = 1e-8;

/// Half-vectorization with doubled off-diagonals:
/// [S11, 2 S12, ..., 2 S1a, S22, 2 S23, ..., Saa].
/// Throws DimensionError if @p S is not square or not symmetric.
Vec vecs(const Mat& S);

/// Inverse of vecs for an a-by-a symmetric matrix.
Mat unvecs(const Vec& v, int a);

/// Quadratic monomials [v1^2, v1 v2, ..., v1 va, v2^2, ..., va^2], ordered so
/// that x' S x == vecs(S).dot(vecv(x)).
Vec vecv(const Vec& v);

/// Column-stacking vectorization.
Vec vec(const Mat& M);

/// Inverse of vec.
Mat unvec(const Vec& v, int rows, int cols);

/// Kronecker product.
Mat kron(const Mat& A, const Mat& B);

/// (M + M') / 2.
Mat symmetrize(const Mat& M);

/// Largest eigenvalue modulus.
double spectral_radius(const Mat& M);

double sigma_max(const Mat& M);
double sigma_min(const Mat& M);

/// Spectral (induced 2-) norm.
inline double norm2(const Mat& M) { return sigma_max(M); }

/// Minimizer of ||Phi x - y|| with minimum norm, via complete orthogonal
/// decomposition.
Vec min_norm_least_squares(const Mat& Phi, const Vec& y);

/// Least squares that insists on full column rank. On failure throws
/// RankConditionError carrying @p condition.
Vec full_rank_least_squares(const Mat& Phi, const Vec& y,
                            const char* condition, double tol = kRankTol);

/// Number of singular values above tol * sigma_max.
int rank_with_tol(const Mat& M, double tol = kRankTol);

/// Orthonormal basis of the numerical kernel of @p M, ordered by the right
/// singular vector index.
std::vector<Vec> null_space_basis(const Mat& M, double tol = kRankTol);

/// True iff the smallest eigenvalue of the symmetric part exceeds @p tol.
bool is_positive_definite(const Mat& S, double tol = 0.0);

/// Smallest eigenvalue of the symmetric part.
double min_eigenvalue(const Mat& S);

}  // namespace coopt
