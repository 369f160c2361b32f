#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mtcc/channel.hpp"
#include "mtcc/config.hpp"
#include "mtcc/nn.hpp"
#include "mtcc/replay.hpp"

namespace mtcc {

// Local observation of one V2V transmitter at communication interval (k, t).
struct RRAState {
  // Five gain groups over the sub-channels, dB: own V2V link, V2I
  // transmitter to own receiver, own transmitter to BS, V2I direct, and the
  // V2V interference seen at the own receiver in the previous interval.
  std::vector<double> gains_db;
  double queue = 0.0;                // CAMs
  std::vector<double> pred_history;  // own PC actions over [k - tau_max + 1, k], oldest first
  int t = 0;
  double epsilon = 0.0;
};

constexpr int kGainGroups = 5;

// Reads the locally observable gains of link i. prev_interference_w is the
// co-channel V2V power received by link i in the previous interval, per
// sub-channel; it is reported as noise plus interference in dBW.
std::vector<double> observe_gains_db(int i, const ChannelRealization& ch, std::span<const double> prev_interference_w,
                                     double noise_w);

int rra_flat_width(int M);
// Flat features (standardized gains, queue / N_Q, t / T, epsilon) and the
// action-history sequence for the recurrent slice.
std::vector<double> rra_flat_features(const RRAState& s, const Settings& cfg);
std::vector<double> rra_sequence(const RRAState& s, const Settings& cfg);

struct RRAAction {
  int channel = -1;  // -1: no sub-channel
  int power = 0;     // index into the power level set

  bool operator==(const RRAAction&) const = default;
};

int num_rra_actions(int M, int power_levels);
int encode_action(const RRAAction& a, int power_levels);
RRAAction decode_action(int index, int M, int power_levels);
LinkAction to_link_action(const RRAAction& a, const RadioConfig& cfg);

// kappa1 * sum_m r_m, plus kappa2 * sum of follower advantages at t = T-1.
double global_rra_reward(int t, int T, std::span<const double> v2i_rates, double advantage_sum, double kappa1,
                         double kappa2);
// kappa1 * (r_m - r_m without link i), plus kappa2 * own follower advantage
// at t = T-1. The throughput part is never positive.
double shaped_rra_reward(int t, int T, double rate_with, double rate_without, double advantage, double kappa1,
                         double kappa2);

// Linear decay from start to end over the first `fraction` of the episodes.
double epsilon_at(const RraLearningConfig& cfg, int episode, int episodes);

struct RraTransition {
  std::vector<double> s;
  std::vector<double> seq;
  int action = 0;
  double reward = 0.0;
  std::vector<double> s2;
  std::vector<double> seq2;
};

nn::NetworkSpec rra_network_spec(const Settings& cfg);

// Double DQN with hard target copies and reward-backpropagation replay.
class DdqnLearner {
 public:
  DdqnLearner() = default;
  DdqnLearner(const Settings& cfg, bool prioritized, std::uint64_t seed);

  int num_actions() const { return num_actions_; }
  double eta() const { return eta_; }

  std::vector<double> q_values(std::span<const double> s, std::span<const double> seq) const;
  // argmax with ties to the lowest index.
  int greedy(std::span<const double> s, std::span<const double> seq) const;
  // Uniform with probability epsilon, greedy otherwise.
  int act(std::span<const double> s, std::span<const double> seq, double epsilon, Rng& rng) const;

  void store(RraTransition tr, std::uint64_t tag, ChainPos pos) { buffer_.push(std::move(tr), tag, pos); }
  bool ready() const { return buffer_.size() >= static_cast<std::size_t>(batch_); }

  struct StepStats {
    double loss = 0.0;
    bool applied = false;
  };
  StepStats train_step(Rng& rng);
  StepStats train_batch(std::span<const RraTransition* const> batch);
  // Target y = R + eta * Q'(S', argmax_a Q(S', a)).
  double td_target(const RraTransition& tr) const;
  // Call once per communication interval; copies the target every N^- calls.
  void tick();
  long skipped_steps() const { return skipped_; }

  RbperBuffer<RraTransition>& buffer() { return buffer_; }
  const RbperBuffer<RraTransition>& buffer() const { return buffer_; }
  nn::Network& online() { return online_; }
  nn::Network& target() { return target_; }
  const nn::Network& online() const { return online_; }
  const nn::Network& target() const { return target_; }
  void set_network(nn::Network net);

 private:
  int num_actions_ = 0;
  int batch_ = 64;
  int target_period_ = 4;
  double eta_ = 0.99;
  double lr_ = 1e-4;
  long ticks_ = 0;
  long skipped_ = 0;
  nn::Network online_, target_;
  nn::Adam opt_;
  RbperBuffer<RraTransition> buffer_{1, 100.0, 0.2};
};

}  // namespace mtcc
