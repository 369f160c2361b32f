#include "mtcc/platoon.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "mtcc/rng.hpp"

namespace mtcc {

namespace {

double clamp_acc(double a, const PlatoonConfig& cfg) { return std::clamp(a, -cfg.acc_max, cfg.acc_max); }

double next_acc(double acc, double control, double period, double tau, const PlatoonConfig& cfg) {
  const double r = period / tau;
  return clamp_acc((1.0 - r) * acc + r * control, cfg);
}

}  // namespace

VehicleKinematics step_vehicle(const VehicleKinematics& k, double control, const PlatoonConfig& cfg,
                               int vehicle) {
  if (!std::isfinite(k.p) || !std::isfinite(k.v) || !std::isfinite(k.acc) || !std::isfinite(control))
    throw std::invalid_argument("step_vehicle: non-finite input");
  const double T = cfg.control_period;
  return {k.p + T * k.v, k.v + T * k.acc, next_acc(k.acc, control, T, cfg.tau(vehicle), cfg)};
}

double desired_gap(const PlatoonConfig& cfg, int /*vehicle*/, double v) {
  return cfg.standstill_gap + cfg.time_headway * v;
}

TrackingErrors tracking_errors(const VehicleKinematics& pred, const VehicleKinematics& self,
                               const PlatoonConfig& cfg, int vehicle) {
  const double gap = pred.p - self.p - cfg.length(vehicle - 1);
  return {gap - desired_gap(cfg, vehicle, self.v), pred.v - self.v};
}

DrivingStatus driving_status(const VehicleKinematics& pred, const VehicleKinematics& self,
                             const PlatoonConfig& cfg, int vehicle) {
  const auto e = tracking_errors(pred, self, cfg, vehicle);
  return {e.e_p, e.e_v, self.acc, pred.acc};
}

double jerk(double acc, double control, const PlatoonConfig& cfg, int vehicle) {
  return (control - acc) / cfg.tau(vehicle);
}

double pc_reward(const DrivingStatus& x, double control, const PlatoonConfig& cfg, int vehicle) {
  if (!(cfg.gap_error_max > 0) || !(cfg.velocity_error_max > 0) || !(cfg.control_max > 0) || !(cfg.acc_max > 0))
    throw ConfigError("pc_reward: normalizers must be positive");
  const double j = jerk(x.acc_self, control, cfg, vehicle);
  const double jerk_max = 2.0 * cfg.acc_max / cfg.control_period;
  return -(std::abs(x.e_p / cfg.gap_error_max) + cfg.alpha1 * std::abs(x.e_v / cfg.velocity_error_max) +
           cfg.alpha2 * std::abs(control / cfg.control_max) + cfg.alpha3 * std::abs(j / jerk_max));
}

DrivingStatus status_step(const DrivingStatus& x, double own_control, double pred_control,
                          const PlatoonConfig& cfg, int vehicle) {
  const double T = cfg.control_period;
  DrivingStatus n;
  n.e_p = x.e_p + T * x.e_v - cfg.time_headway * T * x.acc_self;
  n.e_v = x.e_v - T * x.acc_self + T * x.acc_pred;
  n.acc_self = next_acc(x.acc_self, own_control, T, cfg.tau(vehicle), cfg);
  n.acc_pred = next_acc(x.acc_pred, pred_control, T, cfg.tau(vehicle - 1), cfg);
  return n;
}

DrivingStatus reconstruct_current_status(const DrivingStatus& delayed, std::span<const double> own_history,
                                         int delay, std::span<const double> pred_actions,
                                         const PlatoonConfig& cfg, int vehicle) {
  if (delay < 0) throw std::invalid_argument("reconstruct_current_status: negative delay");
  if (static_cast<int>(own_history.size()) < delay || static_cast<int>(pred_actions.size()) < delay)
    throw std::invalid_argument("reconstruct_current_status: history shorter than delay");
  const auto own = own_history.last(static_cast<std::size_t>(delay));
  const auto pred = pred_actions.last(static_cast<std::size_t>(delay));
  DrivingStatus x = delayed;
  for (int s = 0; s < delay; ++s) x = status_step(x, own[s], pred[s], cfg, vehicle);
  return x;
}

std::vector<VehicleKinematics> steady_platoon(const PlatoonConfig& cfg) {
  std::vector<VehicleKinematics> out(cfg.num_vehicles);
  const double v = cfg.initial_speed;
  out[0] = {0.0, v, 0.0};
  for (int i = 1; i < cfg.num_vehicles; ++i)
    out[i] = {out[i - 1].p - cfg.length(i - 1) - desired_gap(cfg, i, v), v, 0.0};
  return out;
}

LeaderSource LeaderSource::synthetic(const LeaderConfig& cfg, double control_period, double acc_max,
                                     std::uint64_t seed) {
  LeaderSource s;
  s.cfg_ = cfg;
  s.period_ = control_period;
  s.acc_max_ = acc_max;
  s.seed_ = seed;
  return s;
}

LeaderSource LeaderSource::from_values(std::vector<double> accelerations, double acc_max) {
  LeaderSource s;
  s.acc_max_ = acc_max;
  s.recorded_ = std::move(accelerations);
  s.from_file_ = true;
  for (double& a : s.recorded_) a = std::clamp(a, -acc_max, acc_max);
  return s;
}

LeaderSource LeaderSource::from_csv(const std::string& path, double control_period, double acc_max) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open leader trajectory " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("leader trajectory is empty: " + path);
  line.erase(std::remove_if(line.begin(), line.end(), [](char c) { return std::isspace(static_cast<unsigned char>(c)); }),
             line.end());
  if (line != "t,acc") throw std::runtime_error("leader trajectory header must be 't,acc'");
  std::vector<double> times, accs;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::stringstream ss(line);
    std::string ts, as;
    if (!std::getline(ss, ts, ',') || !std::getline(ss, as))
      throw std::runtime_error("malformed leader trajectory row: " + line);
    times.push_back(std::stod(ts));
    accs.push_back(std::stod(as));
  }
  for (std::size_t i = 1; i < times.size(); ++i)
    if (std::abs((times[i] - times[i - 1]) - control_period) > 1e-6)
      throw std::runtime_error("leader trajectory sampling period differs from control_period");
  return from_values(std::move(accs), acc_max);
}

std::vector<double> LeaderSource::episode_profile(std::uint64_t episode_key, int K) const {
  if (from_file_) {
    if (static_cast<int>(recorded_.size()) < K)
      throw std::length_error("leader trajectory shorter than the episode length");
    return {recorded_.begin(), recorded_.begin() + K};
  }
  Rng rng(hash_key({seed_, episode_key, 0x1EADE7ULL}));
  struct Component {
    double amp, freq, phase;
  };
  std::vector<Component> comps;
  for (int c = 0; c < cfg_.components; ++c)
    comps.push_back({cfg_.amplitude * rng.uniform(0.3, 1.0), rng.uniform(cfg_.min_frequency, cfg_.max_frequency),
                     rng.uniform(0.0, 2.0 * std::numbers::pi)});
  const double env_phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
  std::vector<double> out(K);
  for (int k = 0; k < K; ++k) {
    const double t = k * period_;
    double a = 0.0;
    for (const auto& c : comps) a += c.amp * std::sin(2.0 * std::numbers::pi * c.freq * t + c.phase);
    // The gate is zero for roughly half of each envelope period, giving
    // intervals where the leader input is nearly constant.
    const double gate = std::max(0.0, std::sin(2.0 * std::numbers::pi * cfg_.envelope_frequency * t + env_phase));
    out[k] = std::clamp(gate * a + cfg_.noise_std * rng.normal(), -acc_max_, acc_max_);
  }
  return out;
}

double leader_trajectory_next(const LeaderSource& src, std::uint64_t episode_key, int k) {
  return src.episode_profile(episode_key, k + 1).at(k);
}

}  // namespace mtcc
