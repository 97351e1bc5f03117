#include "coopt/parallel.hpp"

#include <atomic>
#include <stdexcept>
#include <string>

#include <gtest/gtest.h>

#include "coopt/offpolicy.hpp"
#include "coopt/pipeline.hpp"
#include "testing.hpp"

namespace coopt {
namespace {

TEST(ParallelFor, VisitsEveryIndexOnce) {
  for (Execution exec : {Execution::kSerial, Execution::kOpenMP}) {
    std::vector<int> hits(1000, 0);
    parallel_for(1000, exec, [&](int i) { ++hits[i]; });
    for (int h : hits) EXPECT_EQ(h, 1);
  }
  int calls = 0;
  parallel_for(0, Execution::kOpenMP, [&](int) { ++calls; });
  EXPECT_EQ(calls, 0);
}

TEST(ParallelFor, RethrowsLowestFailingIndex) {
  for (Execution exec : {Execution::kSerial, Execution::kOpenMP}) {
    std::atomic<int> ran{0};
    try {
      parallel_for(64, exec, [&](int i) {
        ++ran;
        if (i == 40 || i == 7 || i == 63) {
          throw std::runtime_error(std::to_string(i));
        }
      });
      FAIL() << "expected an exception";
    } catch (const std::runtime_error& e) {
      EXPECT_STREQ(e.what(), "7");
    }
    // Every index still runs, so later failures never mask earlier ones.
    EXPECT_EQ(ran.load(), 64);
  }
}

TEST(Parallel, BundleIsBitIdentical) {
  const auto& g = testing::bundled_alg1();
  const auto log = behavior_log(testing::bundled(), 300);
  for (int k = 0; k < 4; ++k) {
    const auto s = build_regression_bundle(log, k, g.agents[k].basis, 85, 300,
                                           Execution::kSerial);
    const auto p = build_regression_bundle(log, k, g.agents[k].basis, 85, 300,
                                           Execution::kOpenMP);
    for (int l = 0; l <= s.h; ++l) {
      EXPECT_EQ(s.theta[l], p.theta[l]);
      EXPECT_EQ(s.Gxx[l], p.Gxx[l]);
      EXPECT_EQ(s.Gux[l], p.Gux[l]);
      EXPECT_EQ(s.Gzx[l], p.Gzx[l]);
    }
    EXPECT_EQ(s.Gu, p.Gu);
    EXPECT_EQ(s.Gz, p.Gz);
    EXPECT_EQ(s.Gzu, p.Gzu);
  }
}

void expect_same_learning(const LearnedGains& a, const LearnedGains& b) {
  ASSERT_EQ(a.tf, b.tf);
  ASSERT_EQ(a.agents.size(), b.agents.size());
  for (std::size_t k = 0; k < a.agents.size(); ++k) {
    EXPECT_EQ(a.agents[k].K_stab, b.agents[k].K_stab);
    EXPECT_EQ(a.agents[k].K, b.agents[k].K);
    EXPECT_EQ(a.agents[k].P, b.agents[k].P);
    EXPECT_EQ(a.agents[k].X, b.agents[k].X);
    EXPECT_EQ(a.agents[k].U, b.agents[k].U);
    EXPECT_EQ(a.agents[k].T, b.agents[k].T);
    EXPECT_EQ(a.agents[k].ledger.alpha, b.agents[k].ledger.alpha);
  }
}

TEST(Parallel, LearningIsBitIdentical) {
  for (Algorithm alg : {Algorithm::kOffPolicy, Algorithm::kQLearning}) {
    auto c = testing::bundled_with(
        alg, alg == Algorithm::kOffPolicy ? Scheme::k2 : Scheme::kA, 0.5);
    c.exec = Execution::kSerial;
    const auto serial = run_learning(c);
    c.exec = Execution::kOpenMP;
    const auto omp = run_learning(c);
    expect_same_learning(serial, omp);
  }
}

}  // namespace
}  // namespace coopt
