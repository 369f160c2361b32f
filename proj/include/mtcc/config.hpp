#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace mtcc {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Vehicle and control-reward constants. Defaults are desk substitutes, not
// measured vehicle data.
struct PlatoonConfig {
  int num_vehicles = 4;
  double control_period = 0.1;                 // s
  std::vector<double> driveline_tau = {0.5};   // s, one value or one per vehicle
  std::vector<double> vehicle_length = {5.0};  // m, one value or one per vehicle
  double standstill_gap = 2.0;                 // r, m
  double time_headway = 1.0;                   // h, s
  double acc_max = 3.0;                        // m/s^2
  double control_max = 3.0;                    // m/s^2
  double alpha1 = 0.1;
  double alpha2 = 0.1;
  double alpha3 = 0.1;
  double gap_error_max = 15.0;       // m
  double velocity_error_max = 10.0;  // m/s
  double initial_speed = 20.0;       // m/s

  double tau(int vehicle) const;
  double length(int vehicle) const;
  int num_followers() const { return num_vehicles - 1; }
  void validate() const;
};

// Leader control profile. An empty trajectory_file selects the synthetic
// generator.
struct LeaderConfig {
  std::string trajectory_file;
  int components = 3;
  double min_frequency = 0.05;  // Hz
  double max_frequency = 0.4;   // Hz
  double amplitude = 1.2;       // m/s^2, per component
  double noise_std = 0.05;      // m/s^2
  double envelope_frequency = 0.08;  // Hz; slow gate producing calm and busy phases

  void validate() const;
};

struct RadioConfig {
  int num_v2i = 2;                 // M
  double bandwidth = 1e6;          // W, Hz
  double noise_dbm = -114.0;       // sigma^2
  double v2i_power_dbm = 23.0;     // P_I
  std::vector<double> power_levels_dbm = {23.0, 15.0, 5.0, -100.0};
  double cam_bits = 3200.0;        // N_c
  double pathloss_exponent = 2.5;
  double pathloss_ref_db = 40.0;   // loss at 1 m
  double shadowing_std_db = 8.0;
  bool rayleigh_fading = true;
  double min_distance = 1.0;       // m
  double bs_x = 60.0;              // m, along-road coordinate of the base station
  double bs_y = 350.0;             // m, lateral offset of the base station
  std::vector<double> v2i_offsets = {-300.0, 300.0};  // m, V2I transmitters relative to the leader
  double v2i_lane_y = 4.0;         // m

  // Linear-unit values, filled by finalize().
  double noise_w = 0.0;
  double v2i_power_w = 0.0;
  std::vector<double> power_levels_w;

  void finalize();
  void validate() const;
  int num_power_levels() const { return static_cast<int>(power_levels_dbm.size()); }
};

struct QueueConfig {
  int capacity = 5;  // N_Q, CAMs

  int tau_max() const { return capacity + 1; }
  void validate() const;
};

struct PcLearningConfig {
  std::vector<int> hidden = {64, 64};
  double actor_lr = 1e-4;
  double critic_lr = 1e-3;
  double gamma = 0.98;
  double soft_update = 0.001;
  int batch = 64;
  int buffer = 100000;
  double noise_start = 0.5;  // fraction of control_max
  double noise_end = 0.05;
  int updates_per_step = 1;

  void validate() const;
};

struct RraLearningConfig {
  int recurrent_units = 128;
  int dense_units = 128;
  int hidden2 = 64;
  double lr = 1e-4;
  int batch = 64;
  int buffer = 200000;
  int target_period = 4;     // communication intervals between hard target copies
  double priority_beta = 100.0;
  double priority_decay = 0.2;
  double epsilon_start = 1.0;
  double epsilon_end = 0.05;
  double epsilon_decay_fraction = 0.8;
  double kappa1 = -1.0;      // < 0 selects 0.001 / W
  double kappa2 = 1.0;
  double lambda1 = -1.0;     // < 0 selects 0.001 / W
  double lambda2 = -1.0;     // < 0 selects 0.1 / W
  double delay_bonus = -1.0; // G; < 0 selects 10 W
  double aoi_weight = -1.0;  // < 0 selects kappa2 / T
  double eta = -1.0;         // < 0 selects gamma_pc^(1/T)
  double gain_db_offset = -90.0;
  double gain_db_scale = 30.0;

  void validate() const;
};

struct RunConfig {
  std::string algorithm = "mtcc";
  int iterations = 1;          // Z
  int episodes_pc = 100;       // E^CL
  int episodes_rra = 100;      // E^CM
  int retention_divisor = 5;   // thresholds are E / retention_divisor
  int control_intervals = 120; // K
  int comm_intervals = 100;    // T
  std::uint64_t seed = 1;
  int eval_episodes = 100;
  int eval_every = 1;          // periodic test episodes per training episode; 0 disables
  bool trace_eval = true;

  int pc_threshold() const { return episodes_pc / retention_divisor; }
  int rra_threshold() const { return episodes_rra / retention_divisor; }
  void validate() const;
};

struct Settings {
  PlatoonConfig platoon;
  LeaderConfig leader;
  RadioConfig radio;
  QueueConfig queue;
  PcLearningConfig pc;
  RraLearningConfig rra;
  RunConfig run;

  // Resolves derived defaults and checks every invariant.
  void finalize();

  double kappa1() const;
  double kappa2() const { return rra.kappa2; }
  double lambda1() const;
  double lambda2() const;
  double delay_bonus() const;
  double aoi_weight() const;
  double eta() const;
};

struct ConfigKey {
  std::string name;
  std::string doc;
  std::function<void(const std::string&)> set;
  std::function<std::string()> get;
};

// Every documented key, bound to the fields of `s`.
std::vector<ConfigKey> config_keys(Settings& s);

std::map<std::string, std::string> parse_key_values(const std::string& text);
void apply_key_values(Settings& s, const std::map<std::string, std::string>& kv);
Settings load_settings(const std::string& path);
std::string dump_settings(const Settings& s);

// Reduced experiment: N=4, M=2, K=60, T=10 with small networks.
Settings desk_settings();

}  // namespace mtcc
