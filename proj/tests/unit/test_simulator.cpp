#include <gtest/gtest.h>

#include <cmath>

#include "mtcc/cam_queue.hpp"
#include "mtcc/simulator.hpp"
#include "stats.hpp"

using namespace mtcc;

namespace {

Settings tiny(int K = 6, int T = 4) {
  Settings s = desk_settings();
  s.run.control_intervals = K;
  s.run.comm_intervals = T;
  s.pc.hidden = {8, 8};
  s.finalize();
  return s;
}

}  // namespace

TEST(Simulator, EventOrder) {
  const Settings cfg = tiny(2, 3);
  Agents ag = make_agents(cfg, true, 1);
  EpisodeOptions o;
  o.rra_mode = RraMode::Scripted;
  o.script = [](int i, int k, int t) { return (i + k + t) % 12; };
  o.pc_script = [](int f, int k) { return 0.1 * (f - k); };
  o.log_events = true;
  Rng rng(1);
  const auto r = run_episode(cfg, ag, o, rng);
  const std::vector<std::string> want{"decide 0", "comm 0 0", "comm 0 1", "comm 0 2", "control 0",
                                      "decide 1", "comm 1 0", "comm 1 1", "comm 1 2", "control 1"};
  EXPECT_EQ(r.events, want);
  EXPECT_EQ(r.v2i_sums.size(), 6u);
}

TEST(Simulator, DeterministicGivenSeed) {
  const Settings cfg = tiny();
  auto run = [&] {
    Agents ag = make_agents(cfg, true, 3);
    EpisodeOptions o;
    o.rra_mode = RraMode::EpsilonGreedy;
    o.epsilon = 0.5;
    o.pc_train = true;
    o.pc_sigma = 0.5;
    o.store_pc = true;
    o.trace = true;
    o.env_key = 42;
    Rng rng(7);
    return run_episode(cfg, ag, o, rng);
  };
  const auto a = run(), b = run();
  EXPECT_EQ(a.metrics.rra_return, b.metrics.rra_return);
  EXPECT_EQ(a.metrics.pc_performance, b.metrics.pc_performance);
  ASSERT_EQ(a.trace.size(), b.trace.size());
  for (std::size_t n = 0; n < a.trace.size(); ++n) {
    // comm rows carry no action, NaN on both sides
    const double x = a.trace[n].a, y = b.trace[n].a;
    EXPECT_TRUE(x == y || (std::isnan(x) && std::isnan(y))) << n;
    const double u = a.trace[n].m, w = b.trace[n].m;
    EXPECT_TRUE(u == w || (std::isnan(u) && std::isnan(w))) << n;
  }
}

TEST(Simulator, RandomModeIsUniform) {
  const Settings cfg = tiny(20, 10);
  Agents ag = make_agents(cfg, true, 1);
  EpisodeOptions o;
  o.rra_mode = RraMode::Random;
  o.trace = true;
  Rng rng(9);
  std::vector<long> counts(12, 0);
  for (int e = 0; e < 5; ++e) {
    o.env_key = e;
    for (const auto& row : run_episode(cfg, ag, o, rng).trace) {
      if (row.kind != "rra") continue;
      int p = 0;
      while (cfg.radio.power_levels_dbm[p] != row.power_dbm) ++p;
      ++counts[(row.m + 1) * 4 + p];
    }
  }
  EXPECT_GT(chi_square_uniform_p(counts), 0.01);
}

TEST(Simulator, DelayFollowsQueueAtBoundary) {
  const Settings cfg = tiny(30, 5);
  Agents ag = make_agents(cfg, true, 2);
  EpisodeOptions o;
  o.rra_mode = RraMode::Random;
  o.trace = true;
  Rng rng(3);
  const auto r = run_episode(cfg, ag, o, rng);
  const int F = 3;
  std::vector<std::vector<double>> q_end(F, std::vector<double>(30, 0.0));
  std::vector<std::vector<int>> tau(F + 1, std::vector<int>(30, 0));
  for (const auto& row : r.trace) {
    if (row.kind == "rra" && row.t == 4) q_end[row.i][row.k] = row.q;
    if (row.kind == "pc") tau[row.i][row.k] = row.tau;
  }
  int checked = 0;
  for (int k = 1; k < 30; ++k)
    for (int f = 0; f < F; ++f) {
      EXPECT_EQ(tau[f + 1][k], std::min(observation_delay(q_end[f][k - 1]), cfg.queue.tau_max()));
      ++checked;
    }
  EXPECT_EQ(checked, 87);
  for (int f = 1; f <= F; ++f) EXPECT_EQ(tau[f][0], 1);
}

TEST(Simulator, ReturnIsThroughputPlusAdvantage) {
  const Settings cfg = tiny();
  Agents ag = make_agents(cfg, true, 4);
  EpisodeOptions o;
  o.rra_mode = RraMode::Random;
  Rng rng(5);
  const auto r = run_episode(cfg, ag, o, rng);
  const int K = 6, T = 4, F = 3;
  ASSERT_EQ(r.v2i_sums.size(), static_cast<std::size_t>(K * T));
  ASSERT_EQ(r.advantages.size(), static_cast<std::size_t>(K * F));
  double want = 0.0, tp = 0.0;
  for (double v : r.v2i_sums) {
    want += cfg.kappa1() * v;
    tp += v;
  }
  for (double a : r.advantages) want += cfg.kappa2() * a;
  EXPECT_NEAR(r.metrics.rra_return, want, 1e-12 * std::abs(want));
  EXPECT_NEAR(r.metrics.v2i_throughput_mbps, tp / (K * T) / 1e6, 1e-12);
  int hist = 0;
  for (const auto& h : r.metrics.delay_histogram)
    for (int c : h) hist += c;
  EXPECT_EQ(hist, K * F);
}

TEST(Simulator, RecordsCarryChainPositions) {
  const Settings cfg = tiny(3, 4);
  Agents ag = make_agents(cfg, true, 4);
  EpisodeOptions o;
  o.rra_mode = RraMode::Random;
  o.record_rra = true;
  o.tag = 77;
  Rng rng(5);
  const auto r = run_episode(cfg, ag, o, rng);
  ASSERT_EQ(r.records.size(), 3u * 4u * 3u);
  int last = 0;
  for (const auto& rec : r.records) {
    EXPECT_EQ(rec.tag, 77u);
    EXPECT_EQ(rec.pos.T, 4);
    EXPECT_EQ(rec.parts.last, rec.pos.t == 3);
    if (rec.parts.last) ++last;
    EXPECT_EQ(rec.tr.s2.size(), rec.tr.s.size());
  }
  EXPECT_EQ(last, 9);
}

TEST(Simulator, ReplacementKeepsOneCam) {
  const Settings cfg = tiny(20, 5);
  Agents ag = make_agents(cfg, false, 4);
  EpisodeOptions o;
  o.algorithm = Algorithm::Delay;
  o.rra_mode = RraMode::Random;
  o.trace = true;
  Rng rng(6);
  const auto r = run_episode(cfg, ag, o, rng);
  for (const auto& row : r.trace)
    if (row.kind == "rra") EXPECT_LE(row.q, 1.0);
  // The delay then only depends on whether the fresh CAM got through.
  for (const auto& row : r.trace)
    if (row.kind == "pc" && row.i > 0) EXPECT_LE(row.tau, cfg.queue.tau_max());
}

TEST(Simulator, PinnedDelay) {
  const Settings cfg = tiny();
  Agents ag = make_agents(cfg, true, 4);
  EpisodeOptions o;
  o.rra_mode = RraMode::Random;
  o.pin_delay = 1;
  Rng rng(5);
  const auto r = run_episode(cfg, ag, o, rng);
  EXPECT_EQ(r.metrics.delay1_fraction, 1.0);
  EXPECT_EQ(r.metrics.mean_delay, 1.0);
}

TEST(Simulator, RejectsMismatchedAgents) {
  Settings cfg = tiny();
  Agents ag = make_agents(cfg, true, 4);
  ag.rra.pop_back();
  EpisodeOptions o;
  Rng rng(1);
  EXPECT_THROW(run_episode(cfg, ag, o, rng), std::invalid_argument);
}

TEST(Simulator, ActionsIgnoreCentralizedQuantities) {
  // Advantages and reward weights only feed training. Swapping the oracle
  // and the reward scales must leave every greedy action untouched.
  Settings cfg = tiny();
  Settings other = cfg;
  other.rra.kappa1 = 5.0;
  other.rra.kappa2 = 0.01;
  other.finalize();
  Agents a = make_agents(cfg, true, 3);
  Agents b = a;
  b.oracle = make_agents(cfg, true, 99).oracle;
  auto run = [](const Settings& c, Agents& ag) {
    EpisodeOptions o;
    o.trace = true;
    o.env_key = 5;
    Rng rng(2);
    return run_episode(c, ag, o, rng);
  };
  const auto x = run(cfg, a), y = run(other, b);
  ASSERT_EQ(x.advantages.size(), y.advantages.size());
  EXPECT_NE(x.advantages, y.advantages);
  EXPECT_NE(x.metrics.rra_return, y.metrics.rra_return);
  ASSERT_EQ(x.trace.size(), y.trace.size());
  for (std::size_t n = 0; n < x.trace.size(); ++n) {
    if (x.trace[n].kind != "rra") continue;
    EXPECT_EQ(x.trace[n].m, y.trace[n].m) << n;
    EXPECT_EQ(x.trace[n].power_dbm, y.trace[n].power_dbm) << n;
  }
}
