#include <gtest/gtest.h>

#include <cmath>

#include "mtcc/verification.hpp"

using namespace mtcc;

TEST(Verification, RelativeError) {
  EXPECT_EQ(relative_error(0, 0), 0.0);
  EXPECT_NEAR(relative_error(1.0, 1.1), 0.1 / 1.1, 1e-15);
  EXPECT_DOUBLE_EQ(relative_error(-2.0, 2.0), 2.0);
}

TEST(Verification, Spearman) {
  const std::vector<double> x{1, 2, 3, 4, 5};
  const std::vector<double> up{2, 4, 8, 16, 32}, down{5, 4, 3, 2, 1};
  EXPECT_DOUBLE_EQ(spearman(x, up), 1.0);
  EXPECT_DOUBLE_EQ(spearman(x, down), -1.0);
  // Average ranks for ties: ranks of y are 1, 2.5, 2.5, 4, 5.
  const std::vector<double> tied{1, 2, 2, 3, 4};
  EXPECT_NEAR(spearman(x, tied), 0.9746794344808963, 1e-12);
}

TEST(Verification, FiniteHorizonByHand) {
  // One state, two actions with rewards 1 and 2, horizon 2, gamma 0.5:
  // V_0 = 2 + 0.5 * 2 = 3; Q_0(a=0) = 1 + 0.5 * 2 = 2.
  FiniteMdp mdp;
  mdp.states = 1;
  mdp.actions = 2;
  mdp.transition = {1.0, 1.0};
  mdp.reward = {1.0, 2.0};
  mdp.initial = {1.0};
  const auto sol = solve_finite_horizon(mdp, 2, 0.5);
  EXPECT_DOUBLE_EQ(sol.v[0][0], 3.0);
  EXPECT_DOUBLE_EQ(sol.q[0][0], 2.0);
  EXPECT_DOUBLE_EQ(sol.v[2][0], 0.0);
  EXPECT_EQ(sol.greedy[0][0], 1);
  const std::vector<double> uniform{0.5, 0.5};
  EXPECT_DOUBLE_EQ(enumerate_return(mdp, uniform, 2, 0.5), 1.5 + 0.5 * 1.5);
  // J_pi - J* = -0.5 - 0.5 * 0.5.
  EXPECT_DOUBLE_EQ(enumerate_cumulative_advantage(mdp, uniform, 2, 0.5, sol), -0.75);
}

TEST(Verification, RandomMdpIsStochastic) {
  const auto mdp = FiniteMdp::random(5, 2, 3);
  for (int s = 0; s < 5; ++s)
    for (int a = 0; a < 2; ++a) {
      double sum = 0;
      for (int s2 = 0; s2 < 5; ++s2) sum += mdp.p(s, a, s2);
      EXPECT_NEAR(sum, 1.0, 1e-12);
    }
}

TEST(Verification, EquationChecksPass) {
  for (const auto& r : check_equations(11, 1000)) EXPECT_TRUE(r.pass) << r.name << " " << r.detail;
}

TEST(Verification, IdentityAndAssemblyPass) {
  const auto a = check_advantage_identity(2);
  EXPECT_TRUE(a.pass) << a.detail;
  EXPECT_LT(a.value, 1e-9);
  const auto b = check_return_assembly(2);
  EXPECT_TRUE(b.pass) << b.detail;
  EXPECT_LT(b.value, 1e-12);
}

TEST(Verification, ReconstructionAndReplayPass) {
  for (const auto& r : check_reconstruction(4)) EXPECT_TRUE(r.pass) << r.name << " " << r.detail;
  for (const auto& r : check_rbper(4, 20000)) EXPECT_TRUE(r.pass) << r.name << " " << r.detail;
}
