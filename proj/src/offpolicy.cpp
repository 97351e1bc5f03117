#include "coopt/offpolicy.hpp"

#include <sstream>

#include "coopt/errors.hpp"
#include "coopt/pipeline.hpp"

namespace coopt {
namespace {

constexpr const char* kOffPolicyRank = "off-policy excitation";

int tri(int a) { return a * (a + 1) / 2; }

Vec kronv(const Vec& a, const Vec& b) { return kron(a, b); }

}  // namespace

RegressionBundle build_regression_bundle(const TrajectoryLog& log, int agent,
                                         const RegulatorBasis& basis, int t0,
                                         int tf, Execution exec) {
  if (t0 < 0 || tf <= t0) throw DimensionError("bundle: need t0 < tf");
  if (tf >= log.steps()) {
    std::ostringstream os;
    os << "bundle: log ends at " << log.steps() - 1 << ", need instant " << tf;
    throw DimensionError(os.str());
  }
  RegressionBundle b;
  b.n = basis.n;
  b.m = basis.m;
  b.nv = basis.nv;
  b.h = basis.h();
  b.t0 = t0;
  b.tf = tf;
  b.rows = tf - t0;
  const int n = b.n, m = b.m, nv = b.nv, rows = b.rows;

  b.u.resize(rows, m);
  b.zeta.resize(rows, nv);
  b.Gu.resize(rows, tri(m));
  b.Gz.resize(rows, tri(nv));
  b.Gzu.resize(rows, nv * m);
  for (int l = 0; l <= b.h; ++l) {
    b.xt.emplace_back(rows, n);
    b.xt_next.emplace_back(rows, n);
    b.theta.emplace_back(rows, tri(n));
    b.Gx.emplace_back(rows, tri(n));
    b.Gxx.emplace_back(rows, n * n);
    b.Gux.emplace_back(rows, m * n);
    b.Gzx.emplace_back(rows, nv * n);
  }

  parallel_for(rows, exec, [&](int r) {
    const int t = t0 + r;
    const Vec& x = log.x[agent][t];
    const Vec& x1 = log.x[agent][t + 1];
    const Vec& u = log.u[agent][t];
    const Vec& z = log.zeta[agent][t];
    const Vec& z1 = log.zeta[agent][t + 1];
    b.u.row(r) = u.transpose();
    b.zeta.row(r) = z.transpose();
    b.Gu.row(r) = vecv(u).transpose();
    b.Gz.row(r) = vecv(z).transpose();
    b.Gzu.row(r) = kronv(z, u).transpose();
    for (int l = 0; l <= b.h; ++l) {
      const Vec xt = x - basis.X[l] * z;
      const Vec xn = x1 - basis.X[l] * z1;
      b.xt[l].row(r) = xt.transpose();
      b.xt_next[l].row(r) = xn.transpose();
      b.Gx[l].row(r) = vecv(xt).transpose();
      b.theta[l].row(r) = (vecv(xn) - vecv(xt)).transpose();
      b.Gxx[l].row(r) = kronv(xt, xt).transpose();
      b.Gux[l].row(r) = kronv(u, xt).transpose();
      b.Gzx[l].row(r) = kronv(z, xt).transpose();
    }
  });
  return b;
}

RankCheck check_rank_offpolicy(const RegressionBundle& b, double tol) {
  RankCheck rc;
  const int s = b.n + b.m + b.nv;
  rc.required = tri(s);
  rc.achieved = -1;
  for (int l = 0; l <= b.h; ++l) {
    Mat G(b.rows, b.n * b.n + tri(b.m) + tri(b.nv) + b.m * b.n +
                      b.nv * b.n + b.nv * b.m);
    G << b.Gxx[l], b.Gu, b.Gz, b.Gux[l], b.Gzx[l], b.Gzu;
    const int r = rank_with_tol(G, tol);
    rc.achieved = rc.achieved < 0 ? r : std::min(rc.achieved, r);
  }
  return rc;
}

std::pair<Mat, Vec> offpolicy_regressor(const RegressionBundle& b, int l,
                                        const Mat& K, double gamma,
                                        const Mat& Q, const Mat& R) {
  const int n = b.n, m = b.m, nv = b.nv;
  if (K.rows() != m || K.cols() != n) {
    throw DimensionError("offpolicy_regressor: K must be m x n");
  }
  const double gi2 = 1.0 / (gamma * gamma);
  // (u + K x~) kron x~ = (u kron x~) + (K kron I)(x~ kron x~).
  const Mat Gwx = b.Gux[l] + b.Gxx[l] * kron(K.transpose(), Mat::Identity(n, n));
  Mat GKx(b.rows, tri(m));
  for (int r = 0; r < b.rows; ++r) {
    GKx.row(r) = vecv(K * b.xt[l].row(r).transpose()).transpose();
  }
  const int cols = tri(n) + n * m + tri(m) + n * nv + m * nv + tri(nv);
  Mat Phi(b.rows, cols);
  Phi << b.theta[l] - (gi2 - 1.0) * b.Gx[l], -2.0 * Gwx, GKx - b.Gu,
      -2.0 * b.Gzx[l], -2.0 * b.Gzu, -b.Gz;
  const Mat Qbar = Q + K.transpose() * R * K;
  const Vec psi = -gi2 * b.Gx[l] * vecs(symmetrize(Qbar));
  return {Phi, psi};
}

StabSolution solve_stab_regression(const RegressionBundle& b, int l,
                                   const Mat& K, double gamma, const Mat& Q,
                                   const Mat& R, double tol) {
  const auto [Phi, psi] = offpolicy_regressor(b, l, K, gamma, Q, R);
  const Vec s = full_rank_least_squares(Phi, psi, kOffPolicyRank, tol);
  const int n = b.n, m = b.m, nv = b.nv;
  StabSolution out;
  int o = 0;
  out.P = unvecs(s.segment(o, tri(n)), n);
  o += tri(n);
  out.L1 = unvec(s.segment(o, n * m), n, m);
  o += n * m;
  out.L2 = unvecs(s.segment(o, tri(m)), m);
  o += tri(m);
  out.L3 = unvec(s.segment(o, n * nv), n, nv);
  o += n * nv;
  out.L4 = unvec(s.segment(o, m * nv), m, nv);
  o += m * nv;
  out.L5 = unvecs(s.segment(o, tri(nv)), nv);
  return out;
}

Mat update_gain_stab(const Mat& L1, const Mat& L2, double gamma,
                     const Mat& R) {
  const double g2 = gamma * gamma;
  return g2 * (R + g2 * L2).ldlt().solve(L1.transpose());
}

double determine_beta0(const RegressionBundle& b, const Mat& K0, double alpha0,
                       const std::vector<double>& sequence, const Mat& Q,
                       const Mat& R, double tol) {
  for (double beta : sequence) {
    const auto s = solve_stab_regression(b, 0, K0, beta + alpha0, Q, R, tol);
    if (is_positive_definite(s.P)) return beta;
  }
  throw IterationError(
      "beta search exhausted: no candidate gives a positive definite "
      "evaluation (sequence floor too high)");
}

double scheme1_alpha_bound(const RegressionBundle& b, const Mat& K_next,
                           double gamma, const Mat& Q, const Mat& R,
                           double alpha_max, double tol) {
  const Mat P_hat = solve_stab_regression(b, 0, K_next, gamma, Q, R, tol).P;
  const Mat Qn = Q + K_next.transpose() * R * K_next;
  return alpha_upper_bound(gamma, Qn, P_hat, alpha_max);
}

double scheme2_alpha_bound(const Mat& P, const Mat& Qbar_next, double gamma,
                           double alpha_max) {
  return alpha_upper_bound(gamma, Qbar_next, P, alpha_max);
}

StabPhaseResult stabilizing_phase(const RegressionBundle& b, const Mat& K0,
                                  const Mat& Q, const Mat& R,
                                  const LearningOptions& opt) {
  if (opt.scheme != Scheme::k1 && opt.scheme != Scheme::k2) {
    throw ConfigError("off-policy stabilizing phase takes scheme 1 or 2");
  }
  StabPhaseResult out;
  out.ledger.beta = determine_beta0(b, K0, opt.alpha0, opt.beta_sequence, Q,
                                    R, opt.rank_tol);
  out.ledger.alpha.push_back(opt.alpha0);
  Mat K = K0;
  for (int k = 0; k < opt.stab_max_iters; ++k) {
    const double g = out.ledger.gamma(k);
    const auto s = solve_stab_regression(b, 0, K, g, Q, R, opt.rank_tol);
    StabRecord rec;
    rec.k = k;
    rec.gamma = g;
    rec.K = K;
    rec.P = s.P;
    rec.K_next = update_gain_stab(s.L1, s.L2, g, R);
    const Mat Qn = Q + rec.K_next.transpose() * R * rec.K_next;
    rec.bound_1 =
        scheme1_alpha_bound(b, rec.K_next, g, Q, R, opt.alpha_max, opt.rank_tol);
    rec.bound_2 = scheme2_alpha_bound(s.P, Qn, g, opt.alpha_max);
    rec.alpha =
        opt.a * (opt.scheme == Scheme::k1 ? rec.bound_1 : rec.bound_2);
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

OptPhaseResult optimal_phase(const RegressionBundle& b, const Mat& K0,
                             const Mat& Q, const Mat& R,
                             const LearningOptions& opt) {
  OptPhaseResult out;
  Mat K = K0;
  for (int j = 0; j < opt.opt_max_iters; ++j) {
    const auto s = solve_stab_regression(b, 0, K, 1.0, Q, R, opt.rank_tol);
    if (!s.P.allFinite() || !is_positive_definite(s.P)) {
      throw IterationError("optimal phase lost stabilization at j = " +
                           std::to_string(j));
    }
    out.history.push_back({j, K, s.P, Mat()});
    const Mat K_next = update_gain_stab(s.L1, s.L2, 1.0, R);
    if (j > 0 && norm2(s.P - out.history[j - 1].P) <= opt.eps1) {
      out.P = s.P;
      out.K = K_next;
      out.L1 = s.L1;
      out.final_j = j;
      out.L3.assign(b.h + 1, Mat());
      out.L3[0] = s.L3;
      for (int l = 1; l <= b.h; ++l) {
        out.L3[l] = solve_stab_regression(b, l, K, 1.0, Q, R, opt.rank_tol).L3;
      }
      return out;
    }
    K = K_next;
  }
  throw IterationError("optimal phase: no convergence within budget");
}

AgentLearning learn_agent_offpolicy(const TrajectoryLog& log, int agent,
                                    const Mat& Cbar, int n, const Mat& Q,
                                    const Mat& R, const Mat& K0,
                                    const LearningOptions& opt, int tf) {
  const int id = agent + 1;
  AgentLearning a;
  a.basis = with_stage("regulator-basis", id, [&] {
    return build_basis(Cbar, log.F_hat[agent][opt.t0], n, opt.rank_tol);
  });
  const RegressionBundle b = with_stage("data-collection", id, [&] {
    auto bundle = build_regression_bundle(log, agent, a.basis, opt.t0, tf);
    const RankCheck rc = check_rank_offpolicy(bundle, opt.rank_tol);
    if (!rc.ok()) throw RankConditionError(kOffPolicyRank, rc.achieved, rc.required);
    return bundle;
  });
  const auto stab = with_stage("stabilizing-phase", id, [&] {
    return stabilizing_phase(b, K0, Q, R, opt);
  });
  a.K_stab = stab.K;
  a.stab_final_index = stab.final_index;
  a.ledger = stab.ledger;
  a.stab = stab.history;

  const auto best = with_stage("optimal-phase", id, [&] {
    return optimal_phase(b, stab.K, Q, R, opt);
  });
  a.opt = best.history;
  a.P = best.P;
  a.K = best.K;

  with_stage("regulator", id, [&] {
    a.problem = assemble_data_driven(best.L3, best.L1, a.basis);
    a.problem.kappa = choose_kappa(a.problem.Omega, opt.kappa_c);
    a.chi = iterate_chi(a.problem, opt.eps2, opt.chi_max_iters);
  });
  a.X = a.chi.X;
  a.U = a.chi.U;
  a.T = feedforward_gain(a.U, a.K, a.X);
  return a;
}

LearnedGains run_algorithm1(const ExperimentConfig& config) {
  ExperimentConfig c = config;
  c.learning.algorithm = Algorithm::kOffPolicy;
  const auto& lo = c.learning;
  std::vector<Mat> Cbar;
  for (const auto& f : c.mas.followers) Cbar.push_back(output_map(f));
  return run_pipeline(
      c,
      [&](const TrajectoryLog& log, int k, int tf) {
        const auto basis = build_basis(Cbar[k], log.F_hat[k][lo.t0],
                                       c.mas.followers[k].n(), lo.rank_tol);
        return check_rank_offpolicy(
                   build_regression_bundle(log, k, basis, lo.t0, tf),
                   lo.rank_tol)
            .ok();
      },
      [&](const TrajectoryLog& log, int k, int tf) {
        return learn_agent_offpolicy(log, k, Cbar[k], c.mas.followers[k].n(),
                                     c.Q[k], c.R[k], c.K0[k], lo, tf);
      });
}

}  // namespace coopt
