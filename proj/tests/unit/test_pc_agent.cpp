#include <gtest/gtest.h>

#include <cmath>

#include "mtcc/pc_agent.hpp"

using namespace mtcc;

namespace {

PcLearningConfig small_pc() {
  PcLearningConfig c;
  c.hidden = {8, 8};
  c.batch = 4;
  c.buffer = 100;
  return c;
}

std::vector<double> random_state(int n, Rng& rng) {
  std::vector<double> s(n);
  for (auto& v : s) v = rng.uniform(-1, 1);
  return s;
}

void zero(nn::Network& n) {
  for (auto& v : n.params()) v = 0.0;
}

}  // namespace

TEST(PcAgent, StateLayout) {
  EXPECT_EQ(pc_state_width(6), 11);
  EXPECT_EQ(oracle_state_width(), 4);
  PlatoonConfig cfg;
  AugmentedPCState s{{3.0, -1.0, 1.5, -3.0}, {3, 0, 0, 0, 0, -1.5}, 2};
  const auto f = pc_features(s, cfg, 6);
  ASSERT_EQ(f.size(), 11u);
  EXPECT_DOUBLE_EQ(f[0], 0.2);
  EXPECT_DOUBLE_EQ(f[1], -0.1);
  EXPECT_DOUBLE_EQ(f[2], 0.5);
  EXPECT_DOUBLE_EQ(f[3], -1.0);
  EXPECT_DOUBLE_EQ(f[4], 1.0);
  EXPECT_DOUBLE_EQ(f[9], -0.5);
  EXPECT_DOUBLE_EQ(f[10], 2.0 / 6.0);
  s.delay = 7;
  EXPECT_THROW(pc_features(s, cfg, 6), std::invalid_argument);
  s.delay = 1;
  s.own_history.pop_back();
  EXPECT_THROW(pc_features(s, cfg, 6), std::invalid_argument);
}

TEST(PcAgent, ActDeterministicAndBounded) {
  DdpgLearner l(11, small_pc(), 3.0, 5);
  Rng rng(1);
  for (int n = 0; n < 200; ++n) {
    const auto s = random_state(11, rng);
    EXPECT_EQ(l.act(s), l.act(s));
    const double a = l.act_explore(s, 10.0, rng);
    EXPECT_LE(std::abs(a), 3.0);
  }
  // Same seed, same learner.
  DdpgLearner m(11, small_pc(), 3.0, 5);
  EXPECT_TRUE(m.actor() == l.actor());
}

TEST(PcAgent, ZeroActorOutputsZero) {
  DdpgLearner l(4, small_pc(), 3.0, 2);
  nn::Network actor = l.actor();
  zero(actor);
  l.set_networks(actor, l.critic());
  EXPECT_EQ(l.act(std::vector<double>{0.3, 0.1, -0.2, 0.9}), 0.0);
}

TEST(PcAgent, FixedPointGivesNoUpdate) {
  // Zero critic and zero reward: Q = y = 0 for every sample.
  DdpgLearner l(4, small_pc(), 3.0, 3);
  nn::Network critic = l.critic();
  zero(critic);
  l.set_networks(l.actor(), critic);
  Rng rng(2);
  std::vector<PcTransition> trs;
  for (int i = 0; i < 4; ++i) trs.push_back({random_state(4, rng), rng.uniform(-3, 3), 0.0, random_state(4, rng)});
  std::vector<const PcTransition*> batch;
  for (auto& t : trs) batch.push_back(&t);
  const nn::Network actor_before = l.actor();
  const auto st = l.train_batch(batch);
  EXPECT_TRUE(st.applied);
  EXPECT_EQ(st.critic_loss, 0.0);
  for (double v : l.critic().params()) EXPECT_EQ(v, 0.0);
  EXPECT_TRUE(l.actor() == actor_before);
}

TEST(PcAgent, LastIntervalStillBootstraps) {
  // Critic reduced to its output bias c: Q = c everywhere, so the TD target
  // of any transition is r + gamma c and the loss is 0.5 (c - r - gamma c)^2.
  auto cfg = small_pc();
  DdpgLearner l(4, cfg, 3.0, 4);
  nn::Network critic = l.critic();
  zero(critic);
  critic.params().back() = 2.0;
  l.set_networks(l.actor(), critic);
  Rng rng(3);
  PcTransition tr{random_state(4, rng), 1.0, -0.5, random_state(4, rng)};
  const PcTransition* one = &tr;
  const auto st = l.train_batch(std::span(&one, 1));
  const double err = 2.0 - (-0.5 + cfg.gamma * 2.0);
  EXPECT_NEAR(st.critic_loss, 0.5 * err * err, 1e-15);
}

TEST(PcAgent, AdvantageAtPolicyActionIsZero) {
  DdpgLearner oracle(4, small_pc(), 3.0, 8);
  PlatoonConfig cfg;
  Rng rng(6);
  for (int n = 0; n < 100; ++n) {
    const DrivingStatus x{rng.uniform(-5, 5), rng.uniform(-2, 2), rng.uniform(-3, 3), rng.uniform(-3, 3)};
    const auto f = oracle_features(x, cfg);
    EXPECT_EQ(advantage(oracle, x, oracle.act(f), cfg), 0.0);
    const double a = rng.uniform(-3, 3);
    EXPECT_EQ(advantage(oracle, x, a, cfg), oracle.q_value(f, a) - oracle.q_value(f, oracle.act(f)));
  }
}

TEST(PcAgent, LearnsOneStepTarget) {
  // Reward -(a - 1)^2 with gamma 0: the actor should move towards a = 1.
  auto cfg = small_pc();
  cfg.gamma = 0.0;
  cfg.batch = 32;
  cfg.actor_lr = 1e-3;
  cfg.critic_lr = 1e-2;
  DdpgLearner l(2, cfg, 3.0, 11);
  Rng rng(12);
  for (int n = 0; n < 500; ++n) {
    const auto s = random_state(2, rng);
    const double a = rng.uniform(-3, 3);
    l.store({s, a, -(a - 1) * (a - 1), s}, 0);
  }
  for (int n = 0; n < 1500; ++n) l.train_step(rng);
  EXPECT_NEAR(l.act(std::vector<double>{0.2, -0.4}), 1.0, 0.2);
}

TEST(PcAgent, ExplorationSchedule) {
  PcLearningConfig c;
  EXPECT_DOUBLE_EQ(exploration_sigma(c, 3.0, 0.0), 1.5);
  EXPECT_DOUBLE_EQ(exploration_sigma(c, 3.0, 1.0), 0.15);
  EXPECT_DOUBLE_EQ(exploration_sigma(c, 3.0, 2.0), 0.15);
}
