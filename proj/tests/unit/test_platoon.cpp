#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include "mtcc/platoon.hpp"
#include "mtcc/rng.hpp"

using namespace mtcc;

namespace {

PlatoonConfig base() {
  PlatoonConfig c;
  c.control_period = 0.1;
  c.driveline_tau = {0.5};
  return c;
}

// Plain re-statement of the vehicle model, kept apart from the library.
VehicleKinematics ref_step(VehicleKinematics k, double a, double Ts, double tau, double amax) {
  double acc = (1 - Ts / tau) * k.acc + (Ts / tau) * a;
  acc = std::max(-amax, std::min(amax, acc));
  return {k.p + Ts * k.v, k.v + Ts * k.acc, acc};
}

}  // namespace

TEST(Platoon, StepVehicleExample) {
  const auto n = step_vehicle({0.0, 10.0, 1.0}, 2.0, base(), 1);
  EXPECT_NEAR(n.p, 1.0, 1e-12);
  EXPECT_NEAR(n.v, 10.1, 1e-12);
  EXPECT_NEAR(n.acc, 1.2, 1e-12);
}

TEST(Platoon, StepVehicleFixedPoint) {
  Rng rng(3);
  for (int n = 0; n < 100; ++n) {
    const double acc = rng.uniform(-3, 3);
    EXPECT_DOUBLE_EQ(step_vehicle({rng.uniform(-50, 50), rng.uniform(0, 30), acc}, acc, base(), 2).acc, acc);
  }
}

TEST(Platoon, StepVehicleMatchesScalarReplay) {
  const auto cfg = base();
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    VehicleKinematics a{rng.uniform(-10, 10), rng.uniform(0, 30), rng.uniform(-2, 2)};
    VehicleKinematics b = a;
    for (int s = 0; s < 20; ++s) {
      const double u = rng.uniform(-3, 3);
      a = step_vehicle(a, u, cfg, 1);
      b = ref_step(b, u, 0.1, 0.5, cfg.acc_max);
    }
    EXPECT_NEAR(a.p, b.p, 1e-9 * std::abs(b.p) + 1e-12);
    EXPECT_NEAR(a.v, b.v, 1e-9 * std::abs(b.v) + 1e-12);
    EXPECT_NEAR(a.acc, b.acc, 1e-12);
  }
}

TEST(Platoon, StepVehicleRejectsNonFinite) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(step_vehicle({nan, 0, 0}, 0, base(), 1), std::invalid_argument);
  EXPECT_THROW(step_vehicle({0, 0, 0}, std::numeric_limits<double>::infinity(), base(), 1), std::invalid_argument);
}

TEST(Platoon, AccelerationClamped) {
  auto cfg = base();
  cfg.control_period = 0.4;
  const auto n = step_vehicle({0, 10, 3.0}, 3.0 + 100.0, cfg, 1);
  EXPECT_DOUBLE_EQ(n.acc, cfg.acc_max);
}

TEST(Platoon, TrackingErrorExamples) {
  const auto cfg = base();
  const auto e = tracking_errors({30, 12, 0}, {0, 10, 0}, cfg, 1);
  EXPECT_DOUBLE_EQ(e.e_p, 13.0);
  EXPECT_DOUBLE_EQ(e.e_v, 2.0);

  const auto p = steady_platoon(cfg);
  for (int i = 1; i < cfg.num_vehicles; ++i) {
    const auto z = tracking_errors(p[i - 1], p[i], cfg, i);
    EXPECT_NEAR(z.e_p, 0.0, 1e-12);
    EXPECT_EQ(z.e_v, 0.0);
  }
}

TEST(Platoon, RewardCases) {
  auto cfg = base();
  cfg.alpha1 = 0.1;
  cfg.alpha2 = 0.2;
  cfg.alpha3 = 0.3;
  EXPECT_EQ(pc_reward({0, 0, 0, 0}, 0.0, cfg, 1), 0.0);

  // Every normalized term at 1: e_p = 15, e_v = 10, a = 3 and a jerk of
  // 2 acc_max / T_s = 60 m/s^3, which needs acc = a - 60 * tau.
  cfg.driveline_tau = {0.05};
  const DrivingStatus x{15.0, 10.0, 3.0 - 60.0 * 0.05, 0.0};
  EXPECT_NEAR(pc_reward(x, 3.0, cfg, 1), -(1 + 0.1 + 0.2 + 0.3), 1e-12);

  cfg.gap_error_max = 0;
  EXPECT_THROW(pc_reward(x, 0, cfg, 1), ConfigError);
}

TEST(Platoon, RewardNeverPositive) {
  const auto cfg = base();
  Rng rng(5);
  for (int n = 0; n < 1000; ++n) {
    const DrivingStatus x{rng.uniform(-20, 20), rng.uniform(-5, 5), rng.uniform(-3, 3), rng.uniform(-3, 3)};
    EXPECT_LE(pc_reward(x, rng.uniform(-3, 3), cfg, 1), 0.0);
  }
}

TEST(Platoon, StatusStepMatchesVehicleSimulation) {
  const auto cfg = base();
  Rng rng(17);
  for (int n = 0; n < 200; ++n) {
    VehicleKinematics pred{rng.uniform(20, 40), rng.uniform(5, 25), rng.uniform(-2, 2)};
    VehicleKinematics self{0.0, rng.uniform(5, 25), rng.uniform(-2, 2)};
    const double up = rng.uniform(-3, 3), us = rng.uniform(-3, 3);
    const auto x = driving_status(pred, self, cfg, 1);
    const auto want = driving_status(step_vehicle(pred, up, cfg, 0), step_vehicle(self, us, cfg, 1), cfg, 1);
    const auto got = status_step(x, us, up, cfg, 1);
    EXPECT_NEAR(got.e_p, want.e_p, 1e-9);
    EXPECT_NEAR(got.e_v, want.e_v, 1e-9);
    EXPECT_DOUBLE_EQ(got.acc_self, want.acc_self);
    EXPECT_DOUBLE_EQ(got.acc_pred, want.acc_pred);
  }
}

TEST(Platoon, ReconstructionZeroDelayIsIdentity) {
  const DrivingStatus x{1.5, -0.5, 0.3, -0.2};
  EXPECT_EQ(reconstruct_current_status(x, {}, 0, {}, base(), 1), x);
}

TEST(Platoon, ReconstructionMatchesForwardSimulation) {
  const auto cfg = base();
  Rng rng(23);
  for (int trial = 0; trial < 50; ++trial) {
    VehicleKinematics pred{30, 20, rng.uniform(-1, 1)}, self{0, 20, rng.uniform(-1, 1)};
    const auto delayed = driving_status(pred, self, cfg, 1);
    std::vector<double> own(6), preds(3);
    for (auto& a : own) a = rng.uniform(-3, 3);
    for (auto& a : preds) a = rng.uniform(-3, 3);
    for (int s = 0; s < 3; ++s) {
      pred = step_vehicle(pred, preds[s], cfg, 0);
      self = step_vehicle(self, own[3 + s], cfg, 1);
    }
    const auto want = driving_status(pred, self, cfg, 1);
    const auto got = reconstruct_current_status(delayed, own, 3, preds, cfg, 1);
    EXPECT_NEAR(got.e_p, want.e_p, 1e-9);
    EXPECT_NEAR(got.e_v, want.e_v, 1e-9);
    EXPECT_NEAR(got.acc_self, want.acc_self, 1e-12);
    EXPECT_NEAR(got.acc_pred, want.acc_pred, 1e-12);
  }
}

TEST(Platoon, ReconstructionConstantPredecessorAction) {
  const auto cfg = base();
  const DrivingStatus x{0.4, 0.1, 0.2, 0.5};
  const std::vector<double> own{0.1, -0.2, 0.3, 0.0, 0.5, -0.5};
  const std::vector<double> held{0.7, 0.7, 0.7, 0.7};
  const std::vector<double> single{0.7};
  // Replaying the single delayed action four times gives the same status.
  DrivingStatus y = x;
  for (int s = 0; s < 4; ++s) y = status_step(y, own[2 + s], single[0], cfg, 1);
  EXPECT_EQ(reconstruct_current_status(x, own, 4, held, cfg, 1), y);
}

TEST(Platoon, ReconstructionRejectsShortHistory) {
  const std::vector<double> two{0, 0};
  EXPECT_THROW(reconstruct_current_status({}, two, 3, two, base(), 1), std::invalid_argument);
  EXPECT_THROW(reconstruct_current_status({}, two, -1, two, base(), 1), std::invalid_argument);
}

TEST(Platoon, LeaderFileReplay) {
  const auto path = std::filesystem::temp_directory_path() / "mtcc_leader_test.csv";
  {
    std::ofstream out(path);
    out << "t,acc\n0.0,0.1\n0.1,-0.2\n0.2,0.3\n";
  }
  const auto src = LeaderSource::from_csv(path.string(), 0.1, 3.0);
  EXPECT_TRUE(src.is_file());
  EXPECT_DOUBLE_EQ(leader_trajectory_next(src, 0, 0), 0.1);
  EXPECT_DOUBLE_EQ(leader_trajectory_next(src, 0, 1), -0.2);
  EXPECT_THROW(src.episode_profile(0, 4), std::length_error);
  {
    std::ofstream out(path);
    out << "t,acc\n0.0,0.1\n0.25,0.2\n";
  }
  EXPECT_THROW(LeaderSource::from_csv(path.string(), 0.1, 3.0), std::runtime_error);
  std::filesystem::remove(path);
}

TEST(Platoon, SyntheticLeaderDeterministicAndBounded) {
  LeaderConfig lc;
  lc.amplitude = 3.0;  // large enough to hit the clamp
  const auto a = LeaderSource::synthetic(lc, 0.1, 3.0, 9);
  const auto b = LeaderSource::synthetic(lc, 0.1, 3.0, 9);
  EXPECT_EQ(a.episode_profile(4, 120), b.episode_profile(4, 120));
  EXPECT_NE(a.episode_profile(4, 120), a.episode_profile(5, 120));
  int n = 0;
  for (std::uint64_t e = 0; e < 100; ++e)
    for (double v : a.episode_profile(e, 100)) {
      EXPECT_LE(std::abs(v), 3.0);
      ++n;
    }
  EXPECT_EQ(n, 10000);
}
