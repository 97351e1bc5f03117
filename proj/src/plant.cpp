#include "coopt/plant.hpp"

#include <cmath>
#include <queue>
#include <sstream>

#include "coopt/csv.hpp"
#include "coopt/errors.hpp"
#include "coopt/observer.hpp"

namespace coopt {

void FollowerModel::validate() const {
  const auto n = A.rows();
  if (n == 0 || A.cols() != n) throw DimensionError("follower: A not square");
  if (B.rows() != n || B.cols() == 0) {
    throw DimensionError("follower: B must be n x m with m > 0");
  }
  if (C.cols() != n || C.rows() == 0) throw DimensionError("follower: C");
  if (S.rows() != C.rows() || S.cols() != B.cols()) {
    throw DimensionError("follower: S must be ny x m");
  }
}

void LeaderModel::validate() const {
  if (E.rows() == 0 || E.cols() != E.rows()) {
    throw DimensionError("leader: E not square");
  }
  if (F.cols() != E.rows() || F.rows() == 0) {
    throw DimensionError("leader: F must be ny x nv");
  }
}

Topology::Topology(int followers, const std::vector<Edge>& edges)
    : n_(followers), adj_(Mat::Zero(followers + 1, followers + 1)) {
  for (const auto& e : edges) {
    if (e.to < 1 || e.to > n_ || e.from < 0 || e.from > n_ || e.to == e.from) {
      std::ostringstream os;
      os << "topology: invalid edge " << e.from << " -> " << e.to;
      throw DimensionError(os.str());
    }
    if (!(e.weight >= 0.0)) throw DimensionError("topology: negative weight");
    adj_(e.to, e.from) = e.weight;
  }
}

double Topology::d(int i) const {
  double s = 0.0;
  for (int j = 1; j <= n_; ++j) s += adj_(i, j);
  return s;
}

double Topology::mu(int i) const { return 1.0 / (1.0 + d(i) + adj_(i, 0)); }

Mat Topology::H() const {
  Mat h = Mat::Zero(n_, n_);
  for (int i = 1; i <= n_; ++i) {
    for (int j = 1; j <= n_; ++j) {
      if (i != j) h(i - 1, j - 1) = -adj_(i, j);
    }
    h(i - 1, i - 1) = d(i) + adj_(i, 0);
  }
  return h;
}

Mat Topology::H_mu() const {
  Vec mus(n_);
  for (int i = 1; i <= n_; ++i) mus(i - 1) = mu(i);
  return Mat::Identity(n_, n_) - mus.asDiagonal() * H();
}

bool Topology::has_spanning_tree() const {
  std::vector<bool> seen(n_ + 1, false);
  std::queue<int> q;
  q.push(0);
  seen[0] = true;
  while (!q.empty()) {
    const int j = q.front();
    q.pop();
    for (int i = 1; i <= n_; ++i) {
      if (!seen[i] && adj_(i, j) > 0.0) {
        seen[i] = true;
        q.push(i);
      }
    }
  }
  for (bool s : seen) {
    if (!s) return false;
  }
  return true;
}

InitialConditions InitialConditions::zeros(const MasModel& mas) {
  InitialConditions ic;
  const int nv = mas.leader.nv();
  ic.v0 = Vec::Zero(nv);
  for (const auto& f : mas.followers) {
    ic.x0.push_back(Vec::Zero(f.n()));
    ic.zeta0.push_back(Vec::Zero(nv));
    ic.E0.push_back(Mat::Zero(nv, nv));
    ic.F0.push_back(Mat::Zero(mas.leader.ny(), nv));
  }
  return ic;
}

TrajectoryLog TrajectoryLog::truncated(int last) const {
  TrajectoryLog out;
  const auto cut = [last](const auto& series) {
    using S = std::decay_t<decltype(series)>;
    return S(series.begin(), series.begin() + last + 1);
  };
  out.v = cut(v);
  for (int k = 0; k < agents(); ++k) {
    out.x.push_back(cut(x[k]));
    out.u.push_back(cut(u[k]));
    out.zeta.push_back(cut(zeta[k]));
    out.e.push_back(cut(e[k]));
    out.noise.push_back(cut(noise[k]));
    out.E_hat.push_back(cut(E_hat[k]));
    out.F_hat.push_back(cut(F_hat[k]));
  }
  return out;
}

std::pair<Vec, Vec> follower_step(const FollowerModel& model, const Vec& x,
                                  const Vec& u) {
  if (x.size() != model.n() || u.size() != model.m()) {
    throw DimensionError("follower_step: state or input size mismatch");
  }
  return {model.A * x + model.B * u, model.C * x + model.S * u};
}

std::pair<Vec, Vec> leader_step(const LeaderModel& model, const Vec& v) {
  if (v.size() != model.nv()) {
    throw DimensionError("leader_step: state size mismatch");
  }
  return {model.E * v, -model.F * v};
}

Vec tracking_error(const FollowerModel& follower, const Mat& F, const Vec& x,
                   const Vec& u, const Vec& v) {
  return follower.C * x + follower.S * u + F * v;
}

double exploration_noise(int t, const NoiseSpec& spec) {
  double s = 0.0;
  for (const auto& term : spec.terms) {
    const double arg = term.frequency * t;
    s += term.amplitude * (term.cosine ? std::cos(arg) : std::sin(arg));
  }
  return s;
}

SimState initial_state(const InitialConditions& ic) {
  SimState s;
  s.v = ic.v0;
  s.x = ic.x0;
  s.observer.E = ic.E0;
  s.observer.F = ic.F0;
  s.observer.zeta = ic.zeta0;
  return s;
}

SimState final_state(const TrajectoryLog& log) {
  const int t = log.steps() - 1;
  SimState s;
  s.v = log.v[t];
  for (int k = 0; k < log.agents(); ++k) s.x.push_back(log.x[k][t]);
  s.observer = observer_at(log, t);
  return s;
}

namespace {

// Shared time loop: policy(k, x, zeta, t) returns the input of agent k and
// noise(t) the additive exploration term recorded in the log.
template <typename Policy, typename Noise>
TrajectoryLog run(const MasModel& mas, const SimState& start, int last,
                  double bound, Policy&& policy, Noise&& noise) {
  const int N = mas.N();
  if (static_cast<int>(start.x.size()) != N) {
    throw DimensionError("simulation: initial state count != followers");
  }
  TrajectoryLog log;
  log.x.resize(N);
  log.u.resize(N);
  log.zeta.resize(N);
  log.e.resize(N);
  log.noise.resize(N);
  log.E_hat.resize(N);
  log.F_hat.resize(N);

  Vec v = start.v;
  std::vector<Vec> x = start.x;
  ObserverState obs = start.observer;
  for (int t = 0; t <= last; ++t) {
    log.v.push_back(v);
    std::vector<Vec> u(N);
    for (int k = 0; k < N; ++k) {
      const auto& f = mas.followers[k];
      if (!(x[k].norm() <= bound)) {
        std::ostringstream os;
        os << "state of agent " << k + 1 << " diverged at t = " << t
           << " (||x|| = " << x[k].norm() << ")";
        throw DivergenceError(os.str());
      }
      const double nz = noise(t);
      u[k] = policy(k, x[k], obs.zeta[k]) + Vec::Constant(f.m(), nz);
      log.x[k].push_back(x[k]);
      log.u[k].push_back(u[k]);
      log.zeta[k].push_back(obs.zeta[k]);
      log.e[k].push_back(tracking_error(f, mas.leader.F, x[k], u[k], v));
      log.noise[k].push_back(Vec::Constant(f.m(), nz));
      log.E_hat[k].push_back(obs.E[k]);
      log.F_hat[k].push_back(obs.F[k]);
    }
    if (t == last) break;
    for (int k = 0; k < N; ++k) {
      x[k] = follower_step(mas.followers[k], x[k], u[k]).first;
    }
    obs = observer_step(mas.graph, mas.leader, v, obs);
    v = leader_step(mas.leader, v).first;
  }
  return log;
}

}  // namespace

TrajectoryLog simulate_behavior(const MasModel& mas,
                                const InitialConditions& ic,
                                const std::vector<Mat>& K0,
                                const NoiseSpec& noise, int t_end,
                                double divergence_bound) {
  if (static_cast<int>(K0.size()) != mas.N()) {
    throw DimensionError("simulate_behavior: one initial gain per follower");
  }
  for (int k = 0; k < mas.N(); ++k) {
    const auto& f = mas.followers[k];
    if (K0[k].rows() != f.m() || K0[k].cols() != f.n()) {
      throw DimensionError("simulate_behavior: K0 must be m x n");
    }
  }
  if (t_end < 0) throw DimensionError("simulate_behavior: t_end < 0");
  return run(
      mas, initial_state(ic), t_end + 1, divergence_bound,
      [&](int k, const Vec& x, const Vec&) -> Vec { return -K0[k] * x; },
      [&](int t) { return exploration_noise(t, noise); });
}

TrajectoryLog simulate_closed_loop(const MasModel& mas, const SimState& start,
                                   const std::vector<ControllerGains>& gains,
                                   int horizon, double divergence_bound) {
  if (static_cast<int>(gains.size()) != mas.N()) {
    throw DimensionError("simulate_closed_loop: one gain pair per follower");
  }
  for (int k = 0; k < mas.N(); ++k) {
    const auto& f = mas.followers[k];
    const double rho = spectral_radius(f.A - f.B * gains[k].K);
    if (!(rho < 1.0)) {
      std::ostringstream os;
      os << "closed loop of agent " << k + 1
         << " is not Schur: rho(A - B K) = " << rho;
      throw AssumptionViolation(os.str());
    }
  }
  return run(
      mas, start, horizon, divergence_bound,
      [&](int k, const Vec& x, const Vec& zeta) -> Vec {
        return -gains[k].K * x + gains[k].T * zeta;
      },
      [](int) { return 0.0; });
}

double max_abs_error(const TrajectoryLog& log, int t) {
  double m = 0.0;
  for (int k = 0; k < log.agents(); ++k) {
    m = std::max(m, log.e[k][t].cwiseAbs().maxCoeff());
  }
  return m;
}

void write_log_csv(const TrajectoryLog& log, const std::string& path,
                   int time_offset) {
  const int N = log.agents();
  std::vector<std::string> header{"t"};
  const auto agent_cols = [&](const char* name, const auto& series) {
    for (int k = 0; k < N; ++k) {
      for (int j = 0; j < series[k][0].size(); ++j) {
        header.push_back("agent" + std::to_string(k + 1) + "." + name +
                         std::to_string(j + 1));
      }
    }
  };
  agent_cols("x", log.x);
  agent_cols("u", log.u);
  for (int j = 0; j < log.v[0].size(); ++j) {
    header.push_back("v" + std::to_string(j + 1));
  }
  agent_cols("zeta", log.zeta);
  agent_cols("e", log.e);

  CsvWriter csv(path, header);
  for (int t = 0; t < log.steps(); ++t) {
    std::vector<double> row{static_cast<double>(t + time_offset)};
    const auto push = [&row](const Vec& v) {
      for (int j = 0; j < v.size(); ++j) row.push_back(v(j));
    };
    for (int k = 0; k < N; ++k) push(log.x[k][t]);
    for (int k = 0; k < N; ++k) push(log.u[k][t]);
    push(log.v[t]);
    for (int k = 0; k < N; ++k) push(log.zeta[k][t]);
    for (int k = 0; k < N; ++k) push(log.e[k][t]);
    csv.row(row);
  }
}

}  // namespace coopt
