#include "coopt/observer.hpp"

namespace coopt {

ObserverState observer_step(const Topology& graph, const LeaderModel& leader,
                            const Vec& v, const ObserverState& state) {
  const int N = graph.followers();
  ObserverState next = state;
  for (int i = 1; i <= N; ++i) {
    const int k = i - 1;
    Mat dE = Mat::Zero(state.E[k].rows(), state.E[k].cols());
    Mat dF = Mat::Zero(state.F[k].rows(), state.F[k].cols());
    Vec dz = Vec::Zero(state.zeta[k].size());
    for (int j = 0; j <= N; ++j) {
      const double a = graph.a(i, j);
      if (a == 0.0) continue;
      const Mat& Ej = j == 0 ? leader.E : state.E[j - 1];
      const Mat& Fj = j == 0 ? leader.F : state.F[j - 1];
      const Vec& zj = j == 0 ? v : state.zeta[j - 1];
      dE += a * (Ej - state.E[k]);
      dF += a * (Fj - state.F[k]);
      dz += a * (zj - state.zeta[k]);
    }
    const double mu = graph.mu(i);
    next.E[k] = state.E[k] + mu * dE;
    next.F[k] = state.F[k] + mu * dF;
    next.zeta[k] = state.E[k] * (state.zeta[k] + mu * dz);
  }
  return next;
}

std::vector<ObserverError> observer_errors(const ObserverState& state,
                                           const LeaderModel& leader,
                                           const Vec& v) {
  std::vector<ObserverError> out(state.E.size());
  for (std::size_t k = 0; k < state.E.size(); ++k) {
    out[k].E = norm2(state.E[k] - leader.E);
    out[k].F = norm2(state.F[k] - leader.F);
    out[k].zeta = (state.zeta[k] - v).norm();
  }
  return out;
}

ObserverState observer_at(const TrajectoryLog& log, int t) {
  ObserverState s;
  for (int k = 0; k < log.agents(); ++k) {
    s.E.push_back(log.E_hat[k][t]);
    s.F.push_back(log.F_hat[k][t]);
    s.zeta.push_back(log.zeta[k][t]);
  }
  return s;
}

}  // namespace coopt
