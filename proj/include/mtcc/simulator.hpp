#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "mtcc/baselines.hpp"
#include "mtcc/config.hpp"
#include "mtcc/pc_agent.hpp"
#include "mtcc/platoon.hpp"
#include "mtcc/rra_agent.hpp"
#include "mtcc/trace.hpp"

namespace mtcc {

// All learners of one platoon: one controller and one oracle per follower,
// one RRA agent per V2V link (link i feeds follower i + 1).
struct Agents {
  std::vector<DdpgLearner> pc;
  std::vector<DdpgLearner> oracle;
  std::vector<DdqnLearner> rra;
};

Agents make_agents(const Settings& cfg, bool prioritized, std::uint64_t seed);
// Fresh RRA learners (same initial weights for every algorithm).
std::vector<DdqnLearner> make_rra_agents(const Settings& cfg, bool prioritized, std::uint64_t seed);

enum class RraMode { Random, EpsilonGreedy, Greedy, Scripted };

struct EpisodeOptions {
  Algorithm algorithm = Algorithm::Mtcc;  // environment rules and reward
  bool replace_cam = false;               // overrides the environment rule when set
  bool pc_train = false;
  bool rra_train = false;
  RraMode rra_mode = RraMode::Greedy;
  double epsilon = 0.0;          // action epsilon
  double epsilon_feature = 0.0;  // value reported in the RRA state
  double pc_sigma = 0.0;         // exploration std, m/s^2
  std::uint64_t env_key = 0;     // channels and leader profile
  std::uint64_t tag = 0;         // replay tag
  int episode_index = 0;         // written to traces
  bool store_pc = false;
  bool store_rra = false;
  bool record_rra = false;       // return priced-later RRA records
  bool trace = false;
  bool log_events = false;
  // Scripted RRA policy (link, k, t) -> action index, for tests.
  std::function<int(int, int, int)> script;
  // Scripted PC policy (follower, k) -> control, for tests; replaces the actor.
  std::function<double(int, int)> pc_script;
  // Forces every observation delay to this value when > 0.
  int pin_delay = 0;
};

struct RraRecord {
  int link = 0;
  RraTransition tr;  // reward left at 0
  RewardParts parts;
  ChainPos pos;
  std::uint64_t tag = 0;
};

// Pairs the delay a follower experiences at k + 1 with the variance of its
// predecessor's actions over the window ending at k.
struct DelaySample {
  int follower = 0;
  int k = 0;
  int delay_next = 1;
  double pred_variance = 0.0;
};

struct EpisodeMetrics {
  double rra_return = 0.0;             // sum of global rewards
  double rra_return_discounted = 0.0;  // discounted by eta per communication interval
  double v2i_throughput_mbps = 0.0;    // mean over intervals of sum_m r_m
  double pc_performance = 0.0;         // sum over followers of the PC return
  double oracle_pc_performance = 0.0;  // same for the oracle platoon, when run
  double delta_j = 0.0;                // pc_performance - oracle_pc_performance
  double mean_delay = 0.0;
  double delay1_fraction = 0.0;
  std::vector<std::vector<int>> delay_histogram;  // [follower][tau - 1]
  std::vector<double> oscillation;                // max - min gap error over the second half
};

struct EpisodeResult {
  EpisodeMetrics metrics;
  std::vector<RraRecord> records;
  std::vector<std::string> events;
  std::vector<TraceRow> trace;
  std::vector<DelaySample> delay_samples;
  std::vector<double> advantages;  // per (k, follower), k = 1..K
  std::vector<double> v2i_sums;    // sum_m r_m per communication interval, bit/s
};

// One control episode: K control intervals of T communication intervals.
// Order inside interval k: followers decide (and the PC and pending RRA
// transitions of k - 1 are completed), then T communication steps, then the
// vehicles advance. A terminal boundary at K completes the last transitions.
EpisodeResult run_episode(const Settings& cfg, Agents& agents, const EpisodeOptions& opt, Rng& rng);

// Platoon where every follower reads its true status through the oracle
// learner (no communication). Returns the summed PC return.
double run_oracle_episode(const Settings& cfg, std::vector<DdpgLearner>& oracle, std::uint64_t env_key, bool train,
                          double sigma, std::uint64_t tag, Rng& rng);

LeaderSource make_leader(const Settings& cfg);

}  // namespace mtcc
