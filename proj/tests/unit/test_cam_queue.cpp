#include <gtest/gtest.h>

#include <cmath>

#include "mtcc/cam_queue.hpp"
#include "mtcc/rng.hpp"

using namespace mtcc;

TEST(CamQueue, StepExamples) {
  EXPECT_DOUBLE_EQ(queue_step(1.0, 500.0, 0, 5), 1.5);
  EXPECT_DOUBLE_EQ(queue_step(5.0, 0.0, 0, 5), 5.0);
  EXPECT_DOUBLE_EQ(queue_step(0.3, 500.0, 4, 5), 0.0);
  EXPECT_DOUBLE_EQ(queue_step(2.0, 250.0, 1, 5), 1.75);
}

TEST(CamQueue, ReplayOracle) {
  Rng rng(2);
  CamQueue q(5);
  double ref = 0.0;
  for (int s = 0; s < 200; ++s) {
    const int t = s % 10;
    const double rate = rng.uniform(0, 800);
    q.step(rate, t);
    ref = std::max(0.0, ref - rate / 1000.0);
    if (t == 0) ref = std::min(5.0, ref + 1.0);
    EXPECT_NEAR(q.length(), ref, 1e-12);
    EXPECT_GE(q.length(), 0.0);
    EXPECT_LE(q.length(), 5.0);
  }
}

TEST(CamQueue, Replacement) {
  CamQueue q(5);
  q.reset(3.7);
  q.replace_with_fresh();
  EXPECT_EQ(q.length(), 1.0);
}

TEST(CamQueue, ObservationDelay) {
  EXPECT_EQ(observation_delay(0.0), 1);
  EXPECT_EQ(observation_delay(1.5), 3);
  EXPECT_EQ(observation_delay(1.0), 2);
  EXPECT_EQ(observation_delay(5.0), 6);
  int prev = 1;
  for (double q = 0; q <= 5.0; q += 0.01) {
    const int d = observation_delay(q);
    EXPECT_GE(d, prev);
    EXPECT_GE(d, 1);
    EXPECT_LE(d, 6);
    prev = d;
  }
}

TEST(CamQueue, MessageLog) {
  MessageLog log(3);
  for (int k = 0; k < 5; ++k) log.record(k, {double(k), 0, 0});
  EXPECT_EQ(log.size(), 3);
  const auto e = log.consume(5, 2);
  ASSERT_TRUE(e.has_value());
  EXPECT_EQ(e->sample_k, 3);
  EXPECT_EQ(e->payload.p, 3.0);
  EXPECT_FALSE(log.consume(5, 4).has_value());
}
