#include "coopt/observer.hpp"

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "testing.hpp"

namespace coopt {
namespace {

TEST(ObserverStep, TruthIsFixedPoint) {
  const auto& c = testing::bundled();
  Vec v(2);
  v << 3, 3;
  ObserverState s;
  for (int k = 0; k < c.mas.N(); ++k) {
    s.E.push_back(c.mas.leader.E);
    s.F.push_back(c.mas.leader.F);
    s.zeta.push_back(v);
  }
  for (int t = 0; t < 20; ++t) {
    s = observer_step(c.mas.graph, c.mas.leader, v, s);
    v = c.mas.leader.E * v;
    for (const auto& e : observer_errors(s, c.mas.leader, v)) {
      EXPECT_LE(e.E, 1e-15);
      EXPECT_LE(e.F, 1e-15);
      EXPECT_LE(e.zeta, 1e-13);
    }
  }
}

TEST(ObserverStep, SinglePinnedFollowerHalvesError) {
  const LeaderModel leader{testing::rotation(0.3), testing::bundled_F()};
  const Topology g(1, {{1, 0, 1.0}});
  ASSERT_DOUBLE_EQ(g.mu(1), 0.5);
  ObserverState s{{Mat::Zero(2, 2)}, {Mat::Zero(1, 2)}, {Vec::Zero(2)}};
  Vec v = Vec::Ones(2);
  double prev = observer_errors(s, leader, v)[0].E;
  for (int t = 0; t < 10; ++t) {
    s = observer_step(g, leader, v, s);
    v = leader.E * v;
    const double now = observer_errors(s, leader, v)[0].E;
    EXPECT_NEAR(now, 0.5 * prev, 1e-14);
    prev = now;
  }
}

TEST(ObserverStep, BundledSetupConvergedAtWindowStart) {
  const auto& c = testing::bundled();
  const auto log = simulate_behavior(c.mas, c.ic, c.K0, c.noise, 90);
  const auto errs = observer_errors(observer_at(log, 85), c.mas.leader, log.v[85]);
  for (const auto& e : errs) {
    EXPECT_LE(e.zeta, 1e-6);
    EXPECT_LE(e.E, 1e-6);
    EXPECT_LE(e.F, 1e-6);
  }
}

TEST(ObserverStep, FErrorFollowsConsensusMatrix) {
  // F~(t+1) = (H^mu kron I) F~(t), built independently from a_ij and mu_i.
  const auto& c = testing::bundled();
  const int N = c.mas.N();
  Mat Hmu = Mat::Identity(N, N);
  for (int i = 1; i <= N; ++i) {
    double deg = 0.0;
    for (int j = 0; j <= N; ++j) deg += c.mas.graph.a(i, j);
    const double mu = 1.0 / (1.0 + deg);
    Hmu(i - 1, i - 1) -= mu * deg;
    for (int j = 1; j <= N; ++j) Hmu(i - 1, j - 1) += mu * c.mas.graph.a(i, j);
  }
  EXPECT_MAT_NEAR(Hmu, c.mas.graph.H_mu(), 1e-15);

  const auto log = simulate_behavior(c.mas, c.ic, c.K0, c.noise, 40);
  const Mat& F = c.mas.leader.F;
  for (int t = 0; t < 40; ++t) {
    for (int i = 0; i < N; ++i) {
      Mat predicted = Mat::Zero(F.rows(), F.cols());
      for (int j = 0; j < N; ++j) {
        predicted += Hmu(i, j) * (log.F_hat[j][t] - F);
      }
      EXPECT_MAT_NEAR(log.F_hat[i][t + 1] - F, predicted, 1e-14);
    }
  }

  // Envelope |lambda_max(H^mu)|^t with the initial error as constant.
  const double lam = spectral_radius(Hmu);
  double c0 = 0.0;
  for (int i = 0; i < N; ++i) c0 += (log.F_hat[i][0] - F).squaredNorm();
  c0 = std::sqrt(c0);
  for (int t = 1; t <= 40; ++t) {
    for (int i = 0; i < N; ++i) {
      // Nilpotent part of a chain adds a polynomial factor t^(N-1).
      EXPECT_LE((log.F_hat[i][t] - F).norm(),
                c0 * std::pow(t + 1.0, N - 1) * std::pow(lam, t) + 1e-14);
    }
  }
}

TEST(ObserverStep, RandomInitialConditionsConverge) {
  const auto& c = testing::bundled();
  std::mt19937 rng(7);
  for (int draw = 0; draw < 10; ++draw) {
    auto ic = c.ic;
    for (int k = 0; k < c.mas.N(); ++k) {
      ic.zeta0[k] = testing::gaussian(rng, 2, 1, 5.0);
      ic.E0[k] = testing::gaussian(rng, 2, 2, 2.0);
      ic.F0[k] = testing::gaussian(rng, 1, 2, 2.0);
    }
    const auto log = simulate_behavior(c.mas, ic, c.K0, NoiseSpec{}, 150);
    for (const auto& e : observer_errors(observer_at(log, 150), c.mas.leader,
                                         log.v[150])) {
      EXPECT_LE(e.zeta, 1e-8);
    }
  }
}

TEST(ObserverErrors, NonIncreasingAfterTransient) {
  const auto& c = testing::bundled();
  const auto log = simulate_behavior(c.mas, c.ic, c.K0, c.noise, 120);
  for (int t = 20; t < 120; ++t) {
    const auto now = observer_errors(observer_at(log, t), c.mas.leader, log.v[t]);
    const auto next =
        observer_errors(observer_at(log, t + 1), c.mas.leader, log.v[t + 1]);
    for (int k = 0; k < c.mas.N(); ++k) {
      EXPECT_LE(next[k].E, now[k].E + 1e-15);
      EXPECT_LE(next[k].F, now[k].F + 1e-15);
    }
  }
}

}  // namespace
}  // namespace coopt
