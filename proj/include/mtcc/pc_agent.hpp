#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mtcc/config.hpp"
#include "mtcc/nn.hpp"
#include "mtcc/platoon.hpp"
#include "mtcc/replay.hpp"

namespace mtcc {

// Delayed status plus own recent actions plus the delay, which together make
// the delayed control problem Markov again.
struct AugmentedPCState {
  DrivingStatus delayed;
  std::vector<double> own_history;  // tau_max entries, oldest first
  int delay = 1;
};

int pc_state_width(int tau_max);
constexpr int oracle_state_width() { return 4; }

// Network inputs. Errors, accelerations and actions are divided by their
// configured bounds; the delay by tau_max.
std::vector<double> pc_features(const AugmentedPCState& s, const PlatoonConfig& cfg, int tau_max);
std::vector<double> oracle_features(const DrivingStatus& x, const PlatoonConfig& cfg);

struct PcTransition {
  std::vector<double> s;
  double a = 0.0;
  double r = 0.0;
  std::vector<double> s2;
};

// Actor-critic learner over a generic state vector: tanh actor scaled to
// [-a_max, a_max], critic Q(s, a), soft-updated targets, uniform replay.
class DdpgLearner {
 public:
  DdpgLearner() = default;
  DdpgLearner(int state_dim, const PcLearningConfig& cfg, double a_max, std::uint64_t seed);

  int state_dim() const { return state_dim_; }
  double a_max() const { return a_max_; }

  double act(std::span<const double> s) const;
  // Gaussian exploration, then clamped to the action bounds.
  double act_explore(std::span<const double> s, double sigma, Rng& rng) const;
  double q_value(std::span<const double> s, double a) const;

  void store(PcTransition tr, std::uint64_t tag) { buffer_.push(std::move(tr), tag); }
  bool ready() const { return buffer_.size() >= static_cast<std::size_t>(cfg_.batch); }

  struct StepStats {
    double critic_loss = 0.0;
    bool applied = false;
  };
  // One critic and one actor step on a minibatch drawn from the buffer.
  StepStats train_step(Rng& rng);
  // Same on an explicit batch. The TD target always bootstraps; there is no
  // terminal masking.
  StepStats train_batch(std::span<const PcTransition* const> batch);
  long skipped_steps() const { return skipped_; }

  ReplayBuffer<PcTransition>& buffer() { return buffer_; }
  const ReplayBuffer<PcTransition>& buffer() const { return buffer_; }

  nn::Network& actor() { return actor_; }
  nn::Network& critic() { return critic_; }
  nn::Network& target_actor() { return actor_t_; }
  nn::Network& target_critic() { return critic_t_; }
  const nn::Network& actor() const { return actor_; }
  const nn::Network& critic() const { return critic_; }

  // Replaces all four networks (checkpoint restore).
  void set_networks(nn::Network actor, nn::Network critic);

 private:
  std::vector<double> critic_input(std::span<const double> s, double a) const;

  int state_dim_ = 0;
  PcLearningConfig cfg_;
  double a_max_ = 1.0;
  nn::Network actor_, critic_, actor_t_, critic_t_;
  nn::Adam actor_opt_, critic_opt_;
  ReplayBuffer<PcTransition> buffer_{1};
  long skipped_ = 0;
};

nn::NetworkSpec pc_actor_spec(int state_dim, const PcLearningConfig& cfg, double a_max);
nn::NetworkSpec pc_critic_spec(int state_dim, const PcLearningConfig& cfg);

// A(x, a) = Q*(x, a) - Q*(x, mu*(x)) under the oracle learner.
double advantage(const DdpgLearner& oracle, const DrivingStatus& x, double a, const PlatoonConfig& cfg);

// Exploration std after `progress` in [0, 1] of the training episodes.
double exploration_sigma(const PcLearningConfig& cfg, double a_max, double progress);

}  // namespace mtcc
