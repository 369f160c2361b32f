#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mtcc/config.hpp"

namespace mtcc {

struct VehicleKinematics {
  double p = 0.0;    // m
  double v = 0.0;    // m/s
  double acc = 0.0;  // m/s^2

  bool operator==(const VehicleKinematics&) const = default;
};

// Control-plane status of a follower: its tracking errors plus its own and
// its predecessor's acceleration.
struct DrivingStatus {
  double e_p = 0.0;
  double e_v = 0.0;
  double acc_self = 0.0;
  double acc_pred = 0.0;

  std::array<double, 4> as_array() const { return {e_p, e_v, acc_self, acc_pred}; }
  bool operator==(const DrivingStatus&) const = default;
};

struct TrackingErrors {
  double e_p = 0.0;
  double e_v = 0.0;
};

// Forward-Euler first-order vehicle model. The new acceleration is clamped to
// [-acc_max, acc_max]. Throws std::invalid_argument on non-finite input.
VehicleKinematics step_vehicle(const VehicleKinematics& k, double control, const PlatoonConfig& cfg,
                               int vehicle);

// Errors of `vehicle` against its predecessor `vehicle - 1`.
TrackingErrors tracking_errors(const VehicleKinematics& pred, const VehicleKinematics& self,
                               const PlatoonConfig& cfg, int vehicle);

DrivingStatus driving_status(const VehicleKinematics& pred, const VehicleKinematics& self,
                             const PlatoonConfig& cfg, int vehicle);

double jerk(double acc, double control, const PlatoonConfig& cfg, int vehicle);

// Non-positive per-step control reward of a follower.
double pc_reward(const DrivingStatus& x, double control, const PlatoonConfig& cfg, int vehicle);

// One step of the linear status model x' = A x + B a_self + C a_pred, with the
// same acceleration clamp the simulator applies.
DrivingStatus status_step(const DrivingStatus& x, double own_control, double pred_control,
                          const PlatoonConfig& cfg, int vehicle);

// Rolls a delayed status forward `delay` control intervals.
// own_history covers [k - tau_max, k - 1] oldest first; pred_actions covers at
// least [k - delay, k - 1] oldest first (only the last `delay` entries are
// used). Throws std::invalid_argument if either history is too short.
DrivingStatus reconstruct_current_status(const DrivingStatus& delayed, std::span<const double> own_history,
                                         int delay, std::span<const double> pred_actions,
                                         const PlatoonConfig& cfg, int vehicle);

// Spacing that gives zero gap error at speed v.
double desired_gap(const PlatoonConfig& cfg, int vehicle, double v);

// Steady platoon at common speed with zero tracking errors; leader at p = 0.
std::vector<VehicleKinematics> steady_platoon(const PlatoonConfig& cfg);

// Per-episode control profile of the leading vehicle.
class LeaderSource {
 public:
  static LeaderSource synthetic(const LeaderConfig& cfg, double control_period, double acc_max,
                                std::uint64_t seed);
  // CSV with header `t,acc`; the sampling period must equal control_period.
  static LeaderSource from_csv(const std::string& path, double control_period, double acc_max);
  static LeaderSource from_values(std::vector<double> accelerations, double acc_max);

  // Controls for intervals [0, K). File mode throws std::length_error if the
  // recording is shorter than K.
  std::vector<double> episode_profile(std::uint64_t episode_key, int K) const;

  bool is_file() const { return !recorded_.empty() || from_file_; }

 private:
  LeaderConfig cfg_;
  double period_ = 0.1;
  double acc_max_ = 3.0;
  std::uint64_t seed_ = 0;
  std::vector<double> recorded_;
  bool from_file_ = false;
};

double leader_trajectory_next(const LeaderSource& src, std::uint64_t episode_key, int k);

}  // namespace mtcc
