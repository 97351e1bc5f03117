#include "coopt/matkit.hpp"

#include <cmath>
#include <sstream>

#include "coopt/errors.hpp"

namespace coopt {
namespace {

void require_square(const Mat& M, const char* what) {
  if (M.rows() != M.cols() || M.rows() == 0) {
    std::ostringstream os;
    os << what << ": expected a non-empty square matrix, got " << M.rows()
       << "x" << M.cols();
    throw DimensionError(os.str());
  }
}

}  // namespace

Vec vecs(const Mat& S) {
  require_square(S, "vecs");
  const double scale = std::max(1.0, S.cwiseAbs().maxCoeff());
  if ((S - S.transpose()).cwiseAbs().maxCoeff() > 1e-8 * scale) {
    throw DimensionError("vecs: matrix is not symmetric");
  }
  const int a = static_cast<int>(S.rows());
  Vec out(a * (a + 1) / 2);
  int k = 0;
  for (int i = 0; i < a; ++i) {
    out(k++) = S(i, i);
    for (int j = i + 1; j < a; ++j) {
      out(k++) = S(i, j) + S(j, i);
    }
  }
  return out;
}

Mat unvecs(const Vec& v, int a) {
  if (v.size() != a * (a + 1) / 2) {
    throw DimensionError("unvecs: length does not match a(a+1)/2");
  }
  Mat S(a, a);
  int k = 0;
  for (int i = 0; i < a; ++i) {
    S(i, i) = v(k++);
    for (int j = i + 1; j < a; ++j) {
      S(i, j) = S(j, i) = 0.5 * v(k++);
    }
  }
  return S;
}

Vec vecv(const Vec& v) {
  const int a = static_cast<int>(v.size());
  Vec out(a * (a + 1) / 2);
  int k = 0;
  for (int i = 0; i < a; ++i) {
    for (int j = i; j < a; ++j) {
      out(k++) = v(i) * v(j);
    }
  }
  return out;
}

Vec vec(const Mat& M) {
  return Eigen::Map<const Vec>(M.data(), M.size());
}

Mat unvec(const Vec& v, int rows, int cols) {
  if (v.size() != rows * cols) {
    throw DimensionError("unvec: length does not match rows*cols");
  }
  return Eigen::Map<const Mat>(v.data(), rows, cols);
}

Mat kron(const Mat& A, const Mat& B) {
  Mat K(A.rows() * B.rows(), A.cols() * B.cols());
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    for (Eigen::Index j = 0; j < A.cols(); ++j) {
      K.block(i * B.rows(), j * B.cols(), B.rows(), B.cols()) = A(i, j) * B;
    }
  }
  return K;
}

Mat symmetrize(const Mat& M) {
  require_square(M, "symmetrize");
  return 0.5 * (M + M.transpose());
}

double spectral_radius(const Mat& M) {
  require_square(M, "spectral_radius");
  if (!M.allFinite()) {
    std::ostringstream os;
    os << "spectral_radius: non-finite entries (||M||_F = " << M.norm() << ")";
    throw NumericalError(os.str());
  }
  Eigen::EigenSolver<Mat> es(M, false);
  if (es.info() != Eigen::Success) {
    std::ostringstream os;
    os << "spectral_radius: eigen-solver failed (||M||_F = " << M.norm()
       << ")";
    throw NumericalError(os.str());
  }
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

double sigma_max(const Mat& M) {
  if (M.size() == 0) return 0.0;
  Eigen::JacobiSVD<Mat> svd(M);
  return svd.singularValues()(0);
}

double sigma_min(const Mat& M) {
  if (M.size() == 0) return 0.0;
  Eigen::JacobiSVD<Mat> svd(M);
  return svd.singularValues()(svd.singularValues().size() - 1);
}

Vec min_norm_least_squares(const Mat& Phi, const Vec& y) {
  if (Phi.rows() != y.size()) {
    throw DimensionError("least squares: row count does not match rhs");
  }
  Eigen::CompleteOrthogonalDecomposition<Mat> cod(Phi);
  return cod.solve(y);
}

Vec full_rank_least_squares(const Mat& Phi, const Vec& y,
                            const char* condition, double tol) {
  const int r = rank_with_tol(Phi, tol);
  if (r < Phi.cols()) {
    throw RankConditionError(condition, r, static_cast<int>(Phi.cols()));
  }
  return Phi.colPivHouseholderQr().solve(y);
}

int rank_with_tol(const Mat& M, double tol) {
  if (M.size() == 0) return 0;
  Eigen::JacobiSVD<Mat> svd(M);
  const Vec& s = svd.singularValues();
  if (s(0) == 0.0) return 0;
  int r = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > tol * s(0)) ++r;
  }
  return r;
}

std::vector<Vec> null_space_basis(const Mat& M, double tol) {
  std::vector<Vec> basis;
  if (M.cols() == 0) return basis;
  Eigen::JacobiSVD<Mat> svd(M, Eigen::ComputeFullV);
  const int r = rank_with_tol(M, tol);
  for (Eigen::Index k = r; k < M.cols(); ++k) {
    basis.push_back(svd.matrixV().col(k));
  }
  return basis;
}

double min_eigenvalue(const Mat& S) {
  require_square(S, "min_eigenvalue");
  Eigen::SelfAdjointEigenSolver<Mat> es(symmetrize(S),
                                        Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

bool is_positive_definite(const Mat& S, double tol) {
  return min_eigenvalue(S) > tol;
}

}  // namespace coopt
