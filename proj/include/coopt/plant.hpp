#pragma once

#include <string>
#include <utility>
#include <vector>

#include "coopt/matkit.hpp"
#include "coopt/parallel.hpp"

namespace coopt {

/// Follower dynamics x+ = A x + B u with regulated output y = C x + S u.
struct FollowerModel {
  Mat A, B, C, S;

  int n() const { return static_cast<int>(A.rows()); }
  int m() const { return static_cast<int>(B.cols()); }
  int ny() const { return static_cast<int>(C.rows()); }

  /// Throws DimensionError on inconsistent shapes.
  void validate() const;
};

/// Exosystem v+ = E v with reference y_d = -F v.
struct LeaderModel {
  Mat E, F;

  int nv() const { return static_cast<int>(E.rows()); }
  int ny() const { return static_cast<int>(F.rows()); }

  void validate() const;
};

/// One directed communication link: agent @p to listens to agent @p from.
/// Node 0 is the leader.
struct Edge {
  int to = 0;
  int from = 0;
  double weight = 1.0;
};

/// Weighted digraph over the leader (node 0) and N followers.
class Topology {
 public:
  Topology() = default;
  Topology(int followers, const std::vector<Edge>& edges);

  int followers() const { return n_; }
  /// a_ij for i, j in [0, N]; row 0 is identically zero.
  double a(int i, int j) const { return adj_(i, j); }
  const Mat& adjacency() const { return adj_; }
  /// Sum of follower-neighbour weights of follower i.
  double d(int i) const;
  /// 1 / (1 + d_i + a_i0).
  double mu(int i) const;
  /// Laplacian over followers plus diag(a_10, ..., a_N0).
  Mat H() const;
  /// I - diag(mu) H; drives the estimation errors of E and F.
  Mat H_mu() const;
  /// True iff every follower is reachable from the leader.
  bool has_spanning_tree() const;

 private:
  int n_ = 0;
  Mat adj_;
};

struct MasModel {
  LeaderModel leader;
  std::vector<FollowerModel> followers;
  Topology graph;

  int N() const { return static_cast<int>(followers.size()); }
};

/// One sinusoid amplitude * sin(frequency t) or amplitude * cos(frequency t).
struct Sinusoid {
  double amplitude = 0.0;
  double frequency = 0.0;
  bool cosine = false;
};

/// Exploration noise shared by every input channel of every agent.
struct NoiseSpec {
  std::vector<Sinusoid> terms;
};

/// Initial values of plant, leader and observer states.
struct InitialConditions {
  Vec v0;
  std::vector<Vec> x0;
  std::vector<Vec> zeta0;
  std::vector<Mat> E0;
  std::vector<Mat> F0;

  /// Zero observer states and zero plant states for the given model.
  static InitialConditions zeros(const MasModel& mas);
};

/// Observer estimates held by every follower at one instant.
struct ObserverState {
  std::vector<Mat> E;
  std::vector<Mat> F;
  std::vector<Vec> zeta;
};

/// Full time-indexed record of a run. Entry t of every series belongs to the
/// same instant; x[i][t] is follower i's state at time t.
struct TrajectoryLog {
  std::vector<Vec> v;
  std::vector<std::vector<Vec>> x, u, zeta, e, noise;
  std::vector<std::vector<Mat>> E_hat, F_hat;

  int steps() const { return static_cast<int>(v.size()); }
  int agents() const { return static_cast<int>(x.size()); }

  /// Keeps instants [0, last].
  TrajectoryLog truncated(int last) const;
};

/// Returns x+ = A x + B u and y = C x + S u.
std::pair<Vec, Vec> follower_step(const FollowerModel& model, const Vec& x,
                                  const Vec& u);

/// Returns v+ = E v and y_d = -F v.
std::pair<Vec, Vec> leader_step(const LeaderModel& model, const Vec& v);

/// e = C x + S u + F v.
Vec tracking_error(const FollowerModel& follower, const Mat& F, const Vec& x,
                   const Vec& u, const Vec& v);

/// Scalar noise sample at integer time @p t.
double exploration_noise(int t, const NoiseSpec& spec);

/// Simulation guard: a state norm above this aborts with DivergenceError.
inline constexpr double kDivergenceBound = 1e12;

/// Runs u_i = -K0_i x_i + n(t) on [0, t_end + 1] together with the leader
/// and the distributed observer.
TrajectoryLog simulate_behavior(const MasModel& mas,
                                const InitialConditions& ic,
                                const std::vector<Mat>& K0,
                                const NoiseSpec& noise, int t_end,
                                double divergence_bound = kDivergenceBound);

/// Per-agent feedback/feedforward pair for u = -K x + T zeta.
struct ControllerGains {
  Mat K;
  Mat T;
};

/// Plant, leader and observer state from which a closed-loop run starts.
struct SimState {
  Vec v;
  std::vector<Vec> x;
  ObserverState observer;
};

SimState initial_state(const InitialConditions& ic);

/// State at the last instant of a log.
SimState final_state(const TrajectoryLog& log);

/// Closed-loop run for @p horizon steps (horizon + 1 logged instants).
/// Refuses gains whose closed loop A - B K is not Schur.
TrajectoryLog simulate_closed_loop(const MasModel& mas, const SimState& start,
                                   const std::vector<ControllerGains>& gains,
                                   int horizon,
                                   double divergence_bound = kDivergenceBound);

/// Largest |e_i(t)| over agents at instant t.
double max_abs_error(const TrajectoryLog& log, int t);

/// Writes one row per instant; @p time_offset is added to the t column.
void write_log_csv(const TrajectoryLog& log, const std::string& path,
                   int time_offset = 0);

}  // namespace coopt
