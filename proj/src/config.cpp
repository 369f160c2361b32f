#include "mtcc/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace mtcc {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string fmt(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, p);
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size())
    throw ConfigError("config key '" + key + "': not a number: '" + v + "'");
  return out;
}

long long to_int(const std::string& key, const std::string& v) {
  long long out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size())
    throw ConfigError("config key '" + key + "': not an integer: '" + v + "'");
  return out;
}

std::vector<double> to_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(to_double(key, trim(item)));
  if (out.empty()) throw ConfigError("config key '" + key + "': empty list");
  return out;
}

std::string list_str(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    out += fmt(v[i]);
  }
  return out;
}

ConfigKey real(std::string name, std::string doc, double& ref) {
  return {name, std::move(doc), [&ref, name](const std::string& v) { ref = to_double(name, v); },
          [&ref] { return fmt(ref); }};
}

ConfigKey integer(std::string name, std::string doc, int& ref) {
  return {name, std::move(doc),
          [&ref, name](const std::string& v) { ref = static_cast<int>(to_int(name, v)); },
          [&ref] { return std::to_string(ref); }};
}

ConfigKey boolean(std::string name, std::string doc, bool& ref) {
  return {name, std::move(doc),
          [&ref, name](const std::string& v) {
            if (v == "1" || v == "true") ref = true;
            else if (v == "0" || v == "false") ref = false;
            else throw ConfigError("config key '" + name + "': not a boolean: '" + v + "'");
          },
          [&ref] { return std::string(ref ? "1" : "0"); }};
}

ConfigKey list(std::string name, std::string doc, std::vector<double>& ref) {
  return {name, std::move(doc), [&ref, name](const std::string& v) { ref = to_list(name, v); },
          [&ref] { return list_str(ref); }};
}

ConfigKey int_list(std::string name, std::string doc, std::vector<int>& ref) {
  return {name, std::move(doc),
          [&ref, name](const std::string& v) {
            ref.clear();
            for (double d : to_list(name, v)) ref.push_back(static_cast<int>(d));
          },
          [&ref] {
            std::string out;
            for (std::size_t i = 0; i < ref.size(); ++i) out += (i ? "," : "") + std::to_string(ref[i]);
            return out;
          }};
}

ConfigKey text(std::string name, std::string doc, std::string& ref) {
  return {name, std::move(doc), [&ref](const std::string& v) { ref = v; }, [&ref] { return ref; }};
}

double dbm_to_watt(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

}  // namespace

double PlatoonConfig::tau(int vehicle) const {
  return driveline_tau.size() == 1 ? driveline_tau[0] : driveline_tau.at(vehicle);
}

double PlatoonConfig::length(int vehicle) const {
  return vehicle_length.size() == 1 ? vehicle_length[0] : vehicle_length.at(vehicle);
}

void PlatoonConfig::validate() const {
  if (num_vehicles <= 2) throw ConfigError("platoon needs more than two vehicles");
  if (!(control_period > 0)) throw ConfigError("control_period must be positive");
  if (driveline_tau.size() != 1 && static_cast<int>(driveline_tau.size()) != num_vehicles)
    throw ConfigError("driveline_tau needs one value or one per vehicle");
  if (vehicle_length.size() != 1 && static_cast<int>(vehicle_length.size()) != num_vehicles)
    throw ConfigError("vehicle_length needs one value or one per vehicle");
  for (int i = 0; i < num_vehicles; ++i) {
    const double ratio = control_period / tau(i);
    if (!(ratio > 0 && ratio < 1))
      throw ConfigError("control_period / driveline_tau must lie in (0, 1)");
  }
  if (!(acc_max > 0) || !(control_max > 0)) throw ConfigError("acceleration bounds must be positive");
  if (!(gap_error_max > 0) || !(velocity_error_max > 0))
    throw ConfigError("reward normalizers must be positive");
}

void LeaderConfig::validate() const {
  if (components < 0) throw ConfigError("leader_components must be >= 0");
  if (!(min_frequency > 0) || max_frequency < min_frequency)
    throw ConfigError("leader frequency band is invalid");
}

void RadioConfig::finalize() {
  noise_w = dbm_to_watt(noise_dbm);
  v2i_power_w = dbm_to_watt(v2i_power_dbm);
  power_levels_w.clear();
  for (double p : power_levels_dbm) power_levels_w.push_back(dbm_to_watt(p));
}

void RadioConfig::validate() const {
  if (num_v2i < 1) throw ConfigError("num_v2i must be >= 1");
  if (!(bandwidth > 0)) throw ConfigError("bandwidth must be positive");
  if (!(noise_w > 0)) throw ConfigError("noise power must be positive");
  if (power_levels_dbm.empty()) throw ConfigError("power level set is empty");
  if (static_cast<int>(v2i_offsets.size()) != num_v2i)
    throw ConfigError("v2i_offsets needs one entry per V2I link");
  if (!(cam_bits > 0)) throw ConfigError("cam_bits must be positive");
  if (!(min_distance > 0)) throw ConfigError("min_distance must be positive");
}

void QueueConfig::validate() const {
  if (capacity < 1) throw ConfigError("queue_capacity must be >= 1");
}

void PcLearningConfig::validate() const {
  if (hidden.empty()) throw ConfigError("pc_hidden must list at least one width");
  for (int h : hidden)
    if (h <= 0) throw ConfigError("pc_hidden widths must be positive");
  if (batch <= 0 || buffer < batch) throw ConfigError("pc batch/buffer sizes invalid");
  if (gamma < 0 || gamma > 1) throw ConfigError("pc_gamma must lie in [0, 1]");
}

void RraLearningConfig::validate() const {
  if (recurrent_units < 0 || dense_units <= 0 || hidden2 <= 0)
    throw ConfigError("rra network widths invalid");
  if (batch <= 0 || buffer < batch) throw ConfigError("rra batch/buffer sizes invalid");
  if (!(priority_beta >= 1)) throw ConfigError("priority_beta must be >= 1");
  if (!(priority_decay > 0 && priority_decay < 1)) throw ConfigError("priority_decay must lie in (0, 1)");
  if (target_period < 1) throw ConfigError("target_period must be >= 1");
  if (epsilon_start < 0 || epsilon_start > 1 || epsilon_end < 0 || epsilon_end > 1)
    throw ConfigError("epsilon endpoints must lie in [0, 1]");
}

void RunConfig::validate() const {
  if (iterations < 1) throw ConfigError("iterations must be >= 1");
  if (control_intervals < 1 || comm_intervals < 1) throw ConfigError("K and T must be >= 1");
  if (episodes_pc < 0 || episodes_rra < 0) throw ConfigError("episode counts must be >= 0");
  if (retention_divisor < 1) throw ConfigError("retention_divisor must be >= 1");
  if (episodes_pc > 0 && pc_threshold() >= episodes_pc) throw ConfigError("pc threshold must be below E^CL");
  if (episodes_rra > 0 && rra_threshold() >= episodes_rra) throw ConfigError("rra threshold must be below E^CM");
}

void Settings::finalize() {
  radio.finalize();
  platoon.validate();
  leader.validate();
  radio.validate();
  queue.validate();
  pc.validate();
  rra.validate();
  run.validate();
}

double Settings::kappa1() const { return rra.kappa1 >= 0 ? rra.kappa1 : 0.001 / radio.bandwidth; }
double Settings::lambda1() const { return rra.lambda1 >= 0 ? rra.lambda1 : 0.001 / radio.bandwidth; }
double Settings::lambda2() const { return rra.lambda2 >= 0 ? rra.lambda2 : 0.1 / radio.bandwidth; }
double Settings::delay_bonus() const { return rra.delay_bonus >= 0 ? rra.delay_bonus : 10.0 * radio.bandwidth; }
double Settings::aoi_weight() const {
  return rra.aoi_weight >= 0 ? rra.aoi_weight : rra.kappa2 / run.comm_intervals;
}
double Settings::eta() const {
  return rra.eta >= 0 ? rra.eta : std::pow(pc.gamma, 1.0 / run.comm_intervals);
}

std::vector<ConfigKey> config_keys(Settings& s) {
  auto& p = s.platoon;
  auto& l = s.leader;
  auto& r = s.radio;
  auto& pc = s.pc;
  auto& q = s.rra;
  auto& run = s.run;
  return {
      integer("num_vehicles", "platoon size N (leader included)", p.num_vehicles),
      real("control_period", "T_s, seconds per control interval", p.control_period),
      list("driveline_tau", "driveline time constant(s), s", p.driveline_tau),
      list("vehicle_length", "vehicle length(s) L, m", p.vehicle_length),
      real("standstill_gap", "r, m", p.standstill_gap),
      real("time_headway", "h, s", p.time_headway),
      real("acc_max", "acceleration bound, m/s^2", p.acc_max),
      real("control_max", "control input bound a_max, m/s^2", p.control_max),
      real("alpha1", "velocity-error weight", p.alpha1),
      real("alpha2", "control-effort weight", p.alpha2),
      real("alpha3", "jerk weight", p.alpha3),
      real("gap_error_max", "gap-error normalizer, m", p.gap_error_max),
      real("velocity_error_max", "velocity-error normalizer, m/s", p.velocity_error_max),
      real("initial_speed", "common initial speed, m/s", p.initial_speed),
      text("leader_file", "CSV with header t,acc; empty selects the synthetic leader", l.trajectory_file),
      integer("leader_components", "synthetic leader sinusoid count", l.components),
      real("leader_min_frequency", "Hz", l.min_frequency),
      real("leader_max_frequency", "Hz", l.max_frequency),
      real("leader_amplitude", "m/s^2 per component", l.amplitude),
      real("leader_noise_std", "m/s^2", l.noise_std),
      real("leader_envelope_frequency", "Hz, calm/busy gate", l.envelope_frequency),
      integer("num_v2i", "V2I link count M", r.num_v2i),
      real("bandwidth", "sub-channel bandwidth W, Hz", r.bandwidth),
      real("noise_dbm", "noise power sigma^2, dBm", r.noise_dbm),
      real("v2i_power_dbm", "V2I transmit power P_I, dBm", r.v2i_power_dbm),
      list("power_levels_dbm", "V2V power level set, dBm", r.power_levels_dbm),
      real("cam_bits", "CAM size N_c, bits", r.cam_bits),
      real("pathloss_exponent", "log-distance exponent", r.pathloss_exponent),
      real("pathloss_ref_db", "loss at 1 m, dB", r.pathloss_ref_db),
      real("shadowing_std_db", "log-normal shadowing std, dB", r.shadowing_std_db),
      boolean("rayleigh_fading", "unit-mean Rayleigh fading on/off", r.rayleigh_fading),
      real("min_distance", "distance floor, m", r.min_distance),
      real("bs_x", "base station along-road coordinate, m", r.bs_x),
      real("bs_y", "base station lateral offset, m", r.bs_y),
      list("v2i_offsets", "V2I transmitter offsets from the leader, m", r.v2i_offsets),
      real("v2i_lane_y", "V2I transmitter lateral offset, m", r.v2i_lane_y),
      integer("queue_capacity", "CAM queue capacity N_Q", s.queue.capacity),
      int_list("pc_hidden", "PC actor/critic hidden widths", pc.hidden),
      real("pc_actor_lr", "", pc.actor_lr),
      real("pc_critic_lr", "", pc.critic_lr),
      real("pc_gamma", "PC discount gamma", pc.gamma),
      real("pc_soft_update", "soft target rate rho", pc.soft_update),
      integer("pc_batch", "", pc.batch),
      integer("pc_buffer", "", pc.buffer),
      real("pc_noise_start", "exploration std at start, fraction of a_max", pc.noise_start),
      real("pc_noise_end", "exploration std at end, fraction of a_max", pc.noise_end),
      integer("pc_updates_per_step", "gradient steps per control interval", pc.updates_per_step),
      integer("rra_recurrent_units", "LSTM slice width", q.recurrent_units),
      integer("rra_dense_units", "dense slice width of the first hidden layer", q.dense_units),
      integer("rra_hidden2", "second hidden layer width", q.hidden2),
      real("rra_lr", "", q.lr),
      integer("rra_batch", "", q.batch),
      integer("rra_buffer", "", q.buffer),
      integer("rra_target_period", "hard target copy period N^-, comm intervals", q.target_period),
      real("priority_beta", "RBPER elevated priority beta", q.priority_beta),
      real("priority_decay", "RBPER round decay zeta", q.priority_decay),
      real("epsilon_start", "", q.epsilon_start),
      real("epsilon_end", "", q.epsilon_end),
      real("epsilon_decay_fraction", "fraction of episodes over which epsilon decays", q.epsilon_decay_fraction),
      real("kappa1", "throughput weight; negative selects 0.001/W", q.kappa1),
      real("kappa2", "advantage weight", q.kappa2),
      real("lambda1", "Delay-RRA throughput weight; negative selects 0.001/W", q.lambda1),
      real("lambda2", "Delay-RRA rate weight; negative selects 0.1/W", q.lambda2),
      real("delay_bonus", "Delay-RRA G; negative selects 10W", q.delay_bonus),
      real("aoi_weight", "AoI-RRA weight per ms of AoI; negative selects kappa2/T", q.aoi_weight),
      real("eta", "RRA discount; negative selects pc_gamma^(1/T)", q.eta),
      real("gain_db_offset", "gain feature offset, dB", q.gain_db_offset),
      real("gain_db_scale", "gain feature scale, dB", q.gain_db_scale),
      text("algorithm", "mtcc | delay | aoi | wo_rs | wo_rbper", run.algorithm),
      integer("iterations", "joint-training iterations Z", run.iterations),
      integer("episodes_pc", "E^CL", run.episodes_pc),
      integer("episodes_rra", "E^CM", run.episodes_rra),
      integer("retention_divisor", "experience thresholds are E / divisor", run.retention_divisor),
      integer("control_intervals", "K", run.control_intervals),
      integer("comm_intervals", "T", run.comm_intervals),
      {"seed", "master seed",
       [&run](const std::string& v) { run.seed = static_cast<std::uint64_t>(to_int("seed", v)); },
       [&run] { return std::to_string(run.seed); }},
      integer("eval_episodes", "final evaluation episodes", run.eval_episodes),
      integer("eval_every", "test episode after every n training episodes (0 = off)", run.eval_every),
      boolean("trace_eval", "write per-step traces for evaluation episodes", run.trace_eval),
  };
}

std::map<std::string, std::string> parse_key_values(const std::string& text) {
  std::map<std::string, std::string> out;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    out[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return out;
}

void apply_key_values(Settings& s, const std::map<std::string, std::string>& kv) {
  auto keys = config_keys(s);
  for (const auto& [k, v] : kv) {
    bool found = false;
    for (auto& key : keys) {
      if (key.name == k) {
        key.set(v);
        found = true;
        break;
      }
    }
    if (!found) throw ConfigError("unknown config key '" + k + "'");
  }
}

Settings load_settings(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  Settings s;
  apply_key_values(s, parse_key_values(buf.str()));
  s.finalize();
  return s;
}

std::string dump_settings(const Settings& s) {
  Settings copy = s;
  std::string out;
  for (const auto& key : config_keys(copy)) out += key.name + " = " + key.get() + "\n";
  return out;
}

Settings desk_settings() {
  Settings s;
  s.platoon.num_vehicles = 4;
  s.radio.num_v2i = 2;
  s.run.control_intervals = 60;
  s.run.comm_intervals = 10;
  s.run.episodes_pc = 100;
  s.run.episodes_rra = 100;
  s.run.eval_episodes = 20;
  s.run.eval_every = 0;
  s.pc.hidden = {64, 64};
  s.rra.recurrent_units = 8;
  s.rra.dense_units = 24;
  s.rra.hidden2 = 32;
  // With T = 10 the per-interval throughput stream is ~20x the advantage
  // term at kappa2 = 1, and the allocator learns to ignore control.
  s.rra.kappa2 = 10.0;
  s.finalize();
  return s;
}

}  // namespace mtcc
