#pragma once

#include <string>
#include <vector>

#include "mtcc/config.hpp"

namespace mtcc {

enum class Algorithm { Mtcc, Delay, Aoi, WoRs, WoRbper };

std::string to_string(Algorithm a);
// Accepts mtcc | delay | aoi | wo_rs | wo_rbper (case-insensitive; "wo_RS"
// works too). Throws ConfigError otherwise.
Algorithm parse_algorithm(const std::string& name);
const std::vector<Algorithm>& all_algorithms();

struct AlgorithmTraits {
  bool shaped_reward = true;    // false: every agent gets the global reward
  bool prioritized = true;      // RBPER on/off
  bool replace_cam = false;     // undelivered CAMs are discarded at each t = 0
  bool uses_advantage = true;   // reward carries the follower advantage
  bool delay_reward = false;    // Delay-RRA reward
  bool aoi_reward = false;      // AoI-RRA reward
  bool reuses_step1 = true;     // RRA buffer seeded with experience gathered in step 1
};

AlgorithmTraits traits(Algorithm a);

// Ablations of the full scheme. Throws ConfigError for names other than
// wo_RS / wo_RBPER.
AlgorithmTraits ablation_config(const std::string& name);

// lambda1 * (r_m - r_m without i) + lambda2 * (r_i if backlog > 0 else G).
double delay_rra_reward(double rate_with, double rate_without, double v2v_rate, bool backlog, double lambda1,
                        double lambda2, double bonus);

// AoI after one control interval: T if the queue emptied, else AoI + T.
double aoi_step(double aoi, double q_end, double T);

class AoITracker {
 public:
  AoITracker(int followers, double T) : T_(T), aoi_(followers, T) {}
  double aoi(int f) const { return aoi_[f]; }
  void step(int f, double q_end) { aoi_[f] = aoi_step(aoi_[f], q_end, T_); }
  void reset() { std::fill(aoi_.begin(), aoi_.end(), T_); }
  // Age in control intervals of the freshest delivered CAM, capped.
  int delay(int f, int tau_max) const;

 private:
  double T_;
  std::vector<double> aoi_;
};

// Per-transition reward ingredients, kept so that every algorithm can price
// the same experience with its own reward.
struct RewardParts {
  double rate_with = 0.0;      // r_m on the link's sub-channel, bit/s (0 if silent)
  double rate_without = 0.0;   // same with the link removed
  double v2i_sum = 0.0;        // sum_m r_m, bit/s
  double v2v_rate = 0.0;       // own V2V rate, bit/s
  bool backlog = false;        // CAM pending at the start of the interval
  bool last = false;           // t == T-1
  double advantage = 0.0;      // own follower, valid when last
  double advantage_sum = 0.0;  // all followers, valid when last
  double aoi_next = 0.0;       // follower AoI after this control interval, ms
};

double algorithm_reward(Algorithm a, const RewardParts& p, const Settings& cfg);
// The common yardstick: kappa1 * sum_m r_m (+ kappa2 * sum of advantages at t = T-1).
double global_reward(const RewardParts& p, const Settings& cfg);

}  // namespace mtcc
