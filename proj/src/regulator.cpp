#include "coopt/regulator.hpp"

#include <sstream>

#include "coopt/errors.hpp"

namespace coopt {

RegulatorBasis build_basis(const Mat& Cbar, const Mat& F_obs, int n,
                           double tol) {
  const int ny = static_cast<int>(Cbar.rows());
  const int nm = static_cast<int>(Cbar.cols());
  const int nv = static_cast<int>(F_obs.cols());
  if (F_obs.rows() != ny || nm <= n) {
    throw DimensionError("build_basis: shape mismatch");
  }
  if (rank_with_tol(Cbar, tol) < ny) {
    throw AssumptionViolation("build_basis: [C, S] lacks full row rank");
  }
  RegulatorBasis b;
  b.n = n;
  b.m = nm - n;
  b.nv = nv;
  b.X.push_back(Mat::Zero(n, nv));
  b.U.push_back(Mat::Zero(b.m, nv));

  const Mat W1 =
      -Cbar.transpose() * (Cbar * Cbar.transpose()).ldlt().solve(F_obs);
  b.X.push_back(W1.topRows(n));
  b.U.push_back(W1.bottomRows(b.m));

  const Mat big = kron(Mat::Identity(nv, nv), Cbar);
  for (const Vec& w : null_space_basis(big, tol)) {
    const Mat W = unvec(w, nm, nv);
    b.X.push_back(W.topRows(n));
    b.U.push_back(W.bottomRows(b.m));
  }
  return b;
}

namespace {

// Shared layout; top(l) returns the n x nv top-block entry for pair l >= 2.
template <typename Top>
RegulatorProblem assemble(const RegulatorBasis& b, Top&& top,
                          const Mat& top_eta) {
  const int n = b.n, m = b.m, nv = b.nv, h = b.h();
  const int rows = (2 * n + m) * nv;
  const int cols = (h - 1) + (n + m) * nv;
  RegulatorProblem p;
  p.n = n;
  p.m = m;
  p.nv = nv;
  p.h = h;
  p.Omega = Mat::Zero(rows, cols);
  for (int l = 2; l <= h; ++l) {
    Mat W(n + m, nv);
    W << b.X[l], b.U[l];
    p.Omega.col(l - 2).head(n * nv) = vec(top(l));
    p.Omega.col(l - 2).tail((n + m) * nv) = vec(W);
  }
  p.Omega.bottomRightCorner((n + m) * nv, (n + m) * nv) =
      -Mat::Identity((n + m) * nv, (n + m) * nv);
  Mat W1(n + m, nv);
  W1 << b.X[1], b.U[1];
  p.eta.resize(rows);
  p.eta << vec(top_eta), -vec(W1);
  return p;
}

}  // namespace

RegulatorProblem assemble_model_based(const Mat& M, const Mat& A, const Mat& B,
                                      const Mat& E,
                                      const RegulatorBasis& basis) {
  const auto ups = [&](int l) {
    return Mat(basis.X[l] * E - A * basis.X[l] - B * basis.U[l]);
  };
  return assemble(
      basis, [&](int l) { return Mat(M * ups(l)); }, Mat(-M * ups(1)));
}

RegulatorProblem assemble_data_driven(const std::vector<Mat>& L3,
                                      const Mat& L1,
                                      const RegulatorBasis& basis) {
  if (static_cast<int>(L3.size()) < basis.h() + 1) {
    throw DimensionError("assemble_data_driven: missing L3 entries");
  }
  return assemble(
      basis, [&](int l) { return Mat(-L3[l] - L1 * basis.U[l]); },
      Mat(L3[1] + L1 * basis.U[1]));
}

double choose_kappa(const Mat& Omega, double c) {
  const double s = sigma_max(Omega);
  if (s == 0.0) throw NumericalError("choose_kappa: Omega is zero");
  return c / (s * s);
}

std::pair<Mat, Mat> split_chi(const RegulatorProblem& p, const Vec& chi) {
  const Mat W = unvec(chi.tail((p.n + p.m) * p.nv), p.n + p.m, p.nv);
  return {W.topRows(p.n), W.bottomRows(p.m)};
}

ChiResult iterate_chi(const RegulatorProblem& p, double eps, int max_iters,
                      const Vec& chi0, bool keep_iterates) {
  if (!(p.kappa > 0.0)) throw NumericalError("iterate_chi: kappa not set");
  ChiResult r;
  Vec chi = chi0.size() ? chi0 : Vec::Zero(p.Omega.cols());
  if (keep_iterates) r.iterates.push_back(chi);
  r.history.push_back({0, (p.Omega * chi - p.eta).norm(), 0.0});
  for (int it = 1; it <= max_iters; ++it) {
    const Vec next = chi - p.kappa * p.Omega.transpose() * (p.Omega * chi - p.eta);
    const double delta = (next - chi).norm();
    chi = next;
    if (keep_iterates) r.iterates.push_back(chi);
    r.history.push_back({it, (p.Omega * chi - p.eta).norm(), delta});
    if (delta <= eps) {
      r.chi = chi;
      r.iterations = it;
      std::tie(r.X, r.U) = split_chi(p, chi);
      return r;
    }
  }
  std::ostringstream os;
  os << "iterate_chi: no convergence after " << max_iters
     << " iterations (residual " << r.history.back().residual << ")";
  throw IterationError(os.str());
}

Mat feedforward_gain(const Mat& U, const Mat& K, const Mat& X) {
  return U + K * X;
}

}  // namespace coopt
