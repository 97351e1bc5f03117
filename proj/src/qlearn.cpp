#include "coopt/qlearn.hpp"

#include "coopt/errors.hpp"
#include "coopt/pipeline.hpp"

namespace coopt {
namespace {

constexpr const char* kQFunctionRank = "Q-function excitation";
constexpr const char* kQRegulatorRank = "Q-learning regulator excitation";

int tri(int a) { return a * (a + 1) / 2; }

}  // namespace

QRegression build_q_regression(const TrajectoryLog& log, int agent, int t0,
                               int tf) {
  if (t0 < 0 || tf <= t0) throw DimensionError("q regression: need t0 < tf");
  if (tf >= log.steps()) throw DimensionError("q regression: log too short");
  QRegression q;
  q.n = static_cast<int>(log.x[agent][0].size());
  q.m = static_cast<int>(log.u[agent][0].size());
  q.t0 = t0;
  q.tf = tf;
  q.rows = tf - t0;
  q.x.resize(q.rows, q.n);
  q.x_next.resize(q.rows, q.n);
  q.u.resize(q.rows, q.m);
  q.GZ.resize(q.rows, tri(q.n + q.m));
  for (int r = 0; r < q.rows; ++r) {
    const int t = t0 + r;
    q.x.row(r) = log.x[agent][t].transpose();
    q.x_next.row(r) = log.x[agent][t + 1].transpose();
    q.u.row(r) = log.u[agent][t].transpose();
    Vec Z(q.n + q.m);
    Z << log.x[agent][t], log.u[agent][t];
    q.GZ.row(r) = vecv(Z).transpose();
  }
  return q;
}

RankCheck check_rank_qfunction(const QRegression& q, double tol) {
  return {rank_with_tol(q.GZ, tol), tri(q.n + q.m)};
}

RankCheck check_rank_qregulator(const RegressionBundle& b, double tol) {
  RankCheck rc;
  rc.required = (b.n + b.m) * b.nv + tri(b.nv);
  rc.achieved = -1;
  for (int l = 1; l <= b.h; ++l) {
    Mat G(b.rows, b.nv * b.n + b.nv * b.m + tri(b.nv));
    G << b.Gzx[l], b.Gzu, b.Gz;
    const int r = rank_with_tol(G, tol);
    rc.achieved = rc.achieved < 0 ? r : std::min(rc.achieved, r);
  }
  return rc;
}

Mat successor_rows(const QRegression& q, const Mat& K) {
  Mat G(q.rows, tri(q.n + q.m));
  for (int r = 0; r < q.rows; ++r) {
    const Vec x1 = q.x_next.row(r).transpose();
    Vec z(q.n + q.m);
    z << x1, -K * x1;
    G.row(r) = vecv(z).transpose();
  }
  return G;
}

Mat q_r(const Mat& Q, const Mat& R) {
  Mat QR = Mat::Zero(Q.rows() + R.rows(), Q.cols() + R.cols());
  QR.topLeftCorner(Q.rows(), Q.cols()) = Q;
  QR.bottomRightCorner(R.rows(), R.cols()) = R;
  return QR;
}

Mat solve_H(const QRegression& q, const Mat& K, double gamma, const Mat& Q,
            const Mat& R, double tol) {
  if (K.rows() != q.m || K.cols() != q.n) {
    throw DimensionError("solve_H: K must be m x n");
  }
  const Mat Xi = q.GZ - gamma * gamma * successor_rows(q, K);
  const Vec phi = q.GZ * vecs(q_r(Q, R));
  const Vec h = full_rank_least_squares(Xi, phi, kQFunctionRank, tol);
  return unvecs(h, q.n + q.m);
}

Mat update_gain_from_H(const Mat& H, int n) {
  const int m = static_cast<int>(H.rows()) - n;
  const Mat H22 = H.bottomRightCorner(m, m);
  if (!is_positive_definite(H22)) {
    throw NumericalError("update_gain_from_H: H22 is not positive definite");
  }
  return H22.ldlt().solve(H.bottomLeftCorner(m, n));
}

Mat p_from_h(const Mat& H, const Mat& K) {
  const int n = static_cast<int>(K.cols());
  Mat G(H.rows(), n);
  G << Mat::Identity(n, n), -K;
  return symmetrize(G.transpose() * H * G);
}

double determine_beta0_q(const QRegression& q, const Mat& K0, double alpha0,
                         const std::vector<double>& sequence, const Mat& Q,
                         const Mat& R, double tol) {
  for (double beta : sequence) {
    if (is_positive_definite(solve_H(q, K0, beta + alpha0, Q, R, tol))) {
      return beta;
    }
  }
  throw IterationError(
      "beta search exhausted: no candidate gives a positive definite "
      "Q-function kernel (sequence floor too high)");
}

double schemeA_alpha_bound(const Mat& H, const Mat& K, const Mat& Qbar_next,
                           double gamma, double alpha_max) {
  return alpha_upper_bound(gamma, Qbar_next, p_from_h(H, K), alpha_max);
}

double schemeB_alpha_bound(const QRegression& q, const Mat& K_next,
                           double gamma, const Mat& Q, const Mat& R,
                           double alpha_max, double tol) {
  const Mat H_hat = solve_H(q, K_next, gamma, Q, R, tol);
  return alpha_upper_bound(gamma, q_r(Q, R), H_hat, alpha_max);
}

double schemeC_alpha_bound(const Mat& H, double gamma, const Mat& Q,
                           const Mat& R, double alpha_max) {
  return alpha_upper_bound(gamma, q_r(Q, R), H, alpha_max);
}

StabPhaseResult stabilizing_phase_q(const QRegression& q, const Mat& K0,
                                    const Mat& Q, const Mat& R,
                                    const LearningOptions& opt) {
  if (opt.scheme != Scheme::kA && opt.scheme != Scheme::kB &&
      opt.scheme != Scheme::kC) {
    throw ConfigError("Q-learning stabilizing phase takes scheme A, B or C");
  }
  StabPhaseResult out;
  out.ledger.beta =
      determine_beta0_q(q, K0, opt.alpha0, opt.beta_sequence, Q, R, opt.rank_tol);
  out.ledger.alpha.push_back(opt.alpha0);
  Mat K = K0;
  for (int k = 0; k < opt.stab_max_iters; ++k) {
    const double g = out.ledger.gamma(k);
    StabRecord rec;
    rec.k = k;
    rec.gamma = g;
    rec.K = K;
    rec.H = solve_H(q, K, g, Q, R, opt.rank_tol);
    rec.P = p_from_h(rec.H, K);
    rec.K_next = update_gain_from_H(rec.H, q.n);
    const Mat Qn = Q + rec.K_next.transpose() * R * rec.K_next;
    rec.bound_A = schemeA_alpha_bound(rec.H, K, Qn, g, opt.alpha_max);
    rec.bound_B = schemeB_alpha_bound(q, rec.K_next, g, Q, R, opt.alpha_max,
                                      opt.rank_tol);
    rec.bound_C = schemeC_alpha_bound(rec.H, g, Q, R, opt.alpha_max);
    const double bound = opt.scheme == Scheme::kA   ? rec.bound_A
                         : opt.scheme == Scheme::kB ? rec.bound_B
                                                    : rec.bound_C;
    rec.alpha = opt.a * bound;
    out.history.push_back(rec);
    if (!(rec.alpha > 0.0)) {
      throw IterationError("stabilizing phase stalled: step size <= 0");
    }
    out.ledger.alpha.push_back(rec.alpha);
    K = rec.K_next;
    if (out.ledger.gamma(k + 1) >= opt.lambda_bar) {
      out.K = K;
      out.final_index = k + 1;
      return out;
    }
  }
  throw IterationError("stabilizing phase: iteration budget exhausted");
}

QOptPhaseResult optimal_phase_q(const QRegression& q, const Mat& K0,
                                const Mat& Q, const Mat& R,
                                const LearningOptions& opt) {
  QOptPhaseResult out;
  Mat K = K0;
  for (int j = 0; j < opt.opt_max_iters; ++j) {
    const Mat H = solve_H(q, K, 1.0, Q, R, opt.rank_tol);
    if (!H.allFinite() || !is_positive_definite(H)) {
      throw IterationError("optimal phase lost stabilization at j = " +
                           std::to_string(j));
    }
    const Mat P = p_from_h(H, K);
    out.history.push_back({j, K, P, H});
    const Mat K_next = update_gain_from_H(H, q.n);
    if (j > 0 && norm2(H - out.history[j - 1].H) <= opt.eps1) {
      out.H = H;
      out.P = P;
      out.K = K_next;
      out.K_eval = K;
      out.final_j = j;
      return out;
    }
    K = K_next;
  }
  throw IterationError("optimal phase: no convergence within budget");
}

RegulatorLs solve_regulator_Ls(const RegressionBundle& b, int l, const Mat& H,
                               const Mat& K, const Mat& P, const Mat& Q,
                               const Mat& R, double tol) {
  const int n = b.n, m = b.m, nv = b.nv;
  const Mat H12 = H.topRightCorner(n, m);
  const Mat L2 = symmetrize(H.bottomRightCorner(m, m) - R);
  const Mat Qbar = symmetrize(Q + K.transpose() * R * K);
  const Mat Gwx =
      b.Gux[l] + b.Gxx[l] * kron(K.transpose(), Mat::Identity(n, n));
  Mat GKx(b.rows, tri(m));
  for (int r = 0; r < b.rows; ++r) {
    GKx.row(r) = vecv(K * b.xt[l].row(r).transpose()).transpose();
  }
  const Vec hbar = b.theta[l] * vecs(symmetrize(P)) - 2.0 * Gwx * vec(H12) -
                   (b.Gu - GKx) * vecs(L2) + b.Gx[l] * vecs(Qbar);
  Mat Phi(b.rows, n * nv + m * nv + tri(nv));
  Phi << 2.0 * b.Gzx[l], 2.0 * b.Gzu, b.Gz;
  const Vec s = full_rank_least_squares(Phi, hbar, kQRegulatorRank, tol);
  RegulatorLs out;
  out.L3 = unvec(s.head(n * nv), n, nv);
  out.L4 = unvec(s.segment(n * nv, m * nv), m, nv);
  out.L5 = unvecs(s.tail(tri(nv)), nv);
  return out;
}

AgentLearning learn_agent_qlearning(const TrajectoryLog& log, int agent,
                                    const Mat& Cbar, int n, const Mat& Q,
                                    const Mat& R, const Mat& K0,
                                    const LearningOptions& opt, int tf) {
  const int id = agent + 1;
  AgentLearning a;
  a.basis = with_stage("regulator-basis", id, [&] {
    return build_basis(Cbar, log.F_hat[agent][opt.t0], n, opt.rank_tol);
  });
  const auto q = with_stage("data-collection", id, [&] {
    auto qr = build_q_regression(log, agent, opt.t0, tf);
    const RankCheck rc = check_rank_qfunction(qr, opt.rank_tol);
    if (!rc.ok()) throw RankConditionError(kQFunctionRank, rc.achieved, rc.required);
    return qr;
  });
  const RegressionBundle b = with_stage("data-collection", id, [&] {
    auto bundle = build_regression_bundle(log, agent, a.basis, opt.t0, tf);
    const RankCheck rc = check_rank_qregulator(bundle, opt.rank_tol);
    if (!rc.ok()) throw RankConditionError(kQRegulatorRank, rc.achieved, rc.required);
    return bundle;
  });

  const auto stab = with_stage("stabilizing-phase", id, [&] {
    return stabilizing_phase_q(q, K0, Q, R, opt);
  });
  a.K_stab = stab.K;
  a.stab_final_index = stab.final_index;
  a.ledger = stab.ledger;
  a.stab = stab.history;

  const auto best = with_stage("optimal-phase", id, [&] {
    return optimal_phase_q(q, stab.K, Q, R, opt);
  });
  a.opt = best.history;
  a.H = best.H;
  a.P = best.P;
  a.K = best.K;

  with_stage("regulator", id, [&] {
    std::vector<Mat> L3(b.h + 1, Mat::Zero(b.n, b.nv));
    for (int l = 1; l <= b.h; ++l) {
      L3[l] = solve_regulator_Ls(b, l, best.H, best.K_eval, best.P, Q, R,
                                 opt.rank_tol)
                  .L3;
    }
    a.problem =
        assemble_data_driven(L3, best.H.topRightCorner(b.n, b.m), a.basis);
    a.problem.kappa = choose_kappa(a.problem.Omega, opt.kappa_c);
    a.chi = iterate_chi(a.problem, opt.eps2, opt.chi_max_iters);
  });
  a.X = a.chi.X;
  a.U = a.chi.U;
  a.T = feedforward_gain(a.U, a.K, a.X);
  return a;
}

LearnedGains run_algorithm2(const ExperimentConfig& config) {
  ExperimentConfig c = config;
  c.learning.algorithm = Algorithm::kQLearning;
  const auto& lo = c.learning;
  std::vector<Mat> Cbar;
  for (const auto& f : c.mas.followers) Cbar.push_back(output_map(f));
  return run_pipeline(
      c,
      [&](const TrajectoryLog& log, int k, int tf) {
        if (!check_rank_qfunction(build_q_regression(log, k, lo.t0, tf),
                                  lo.rank_tol)
                 .ok()) {
          return false;
        }
        const auto basis = build_basis(Cbar[k], log.F_hat[k][lo.t0],
                                       c.mas.followers[k].n(), lo.rank_tol);
        return check_rank_qregulator(
                   build_regression_bundle(log, k, basis, lo.t0, tf),
                   lo.rank_tol)
            .ok();
      },
      [&](const TrajectoryLog& log, int k, int tf) {
        return learn_agent_qlearning(log, k, Cbar[k], c.mas.followers[k].n(),
                                     c.Q[k], c.R[k], c.K0[k], lo, tf);
      });
}

}  // namespace coopt
