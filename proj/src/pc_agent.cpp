#include "mtcc/pc_agent.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mtcc {

int pc_state_width(int tau_max) { return 4 + tau_max + 1; }

std::vector<double> oracle_features(const DrivingStatus& x, const PlatoonConfig& cfg) {
  return {x.e_p / cfg.gap_error_max, x.e_v / cfg.velocity_error_max, x.acc_self / cfg.acc_max,
          x.acc_pred / cfg.acc_max};
}

std::vector<double> pc_features(const AugmentedPCState& s, const PlatoonConfig& cfg, int tau_max) {
  if (static_cast<int>(s.own_history.size()) != tau_max)
    throw std::invalid_argument("pc state: action history must hold tau_max entries");
  if (s.delay < 1 || s.delay > tau_max) throw std::invalid_argument("pc state: delay out of range");
  auto f = oracle_features(s.delayed, cfg);
  for (double a : s.own_history) f.push_back(a / cfg.control_max);
  f.push_back(static_cast<double>(s.delay) / tau_max);
  return f;
}

nn::NetworkSpec pc_actor_spec(int state_dim, const PcLearningConfig& cfg, double a_max) {
  nn::NetworkSpec s;
  s.input_dim = state_dim;
  s.dense_units = cfg.hidden.front();
  s.hidden.assign(cfg.hidden.begin() + 1, cfg.hidden.end());
  s.output_dim = 1;
  s.output_activation = nn::Activation::Tanh;
  s.output_scale = a_max;
  return s;
}

nn::NetworkSpec pc_critic_spec(int state_dim, const PcLearningConfig& cfg) {
  nn::NetworkSpec s;
  s.input_dim = state_dim + 1;
  s.dense_units = cfg.hidden.front();
  s.hidden.assign(cfg.hidden.begin() + 1, cfg.hidden.end());
  s.output_dim = 1;
  return s;
}

DdpgLearner::DdpgLearner(int state_dim, const PcLearningConfig& cfg, double a_max, std::uint64_t seed)
    : state_dim_(state_dim),
      cfg_(cfg),
      a_max_(a_max),
      actor_(pc_actor_spec(state_dim, cfg, a_max)),
      critic_(pc_critic_spec(state_dim, cfg)),
      buffer_(static_cast<std::size_t>(cfg.buffer)) {
  Rng rng(seed);
  actor_.initialize(rng);
  critic_.initialize(rng);
  actor_t_ = actor_;
  critic_t_ = critic_;
  actor_opt_ = nn::Adam(actor_.size(), {cfg.actor_lr});
  critic_opt_ = nn::Adam(critic_.size(), {cfg.critic_lr});
}

void DdpgLearner::set_networks(nn::Network actor, nn::Network critic) {
  actor_ = std::move(actor);
  critic_ = std::move(critic);
  actor_t_ = actor_;
  critic_t_ = critic_;
  actor_opt_ = nn::Adam(actor_.size(), {cfg_.actor_lr});
  critic_opt_ = nn::Adam(critic_.size(), {cfg_.critic_lr});
}

std::vector<double> DdpgLearner::critic_input(std::span<const double> s, double a) const {
  std::vector<double> in(s.begin(), s.end());
  in.push_back(a / a_max_);
  return in;
}

double DdpgLearner::act(std::span<const double> s) const { return std::clamp(actor_.predict(s)[0], -a_max_, a_max_); }

double DdpgLearner::act_explore(std::span<const double> s, double sigma, Rng& rng) const {
  return std::clamp(act(s) + sigma * rng.normal(), -a_max_, a_max_);
}

double DdpgLearner::q_value(std::span<const double> s, double a) const { return critic_.predict(critic_input(s, a))[0]; }

DdpgLearner::StepStats DdpgLearner::train_step(Rng& rng) {
  if (!ready()) return {};
  const auto idx = buffer_.sample(static_cast<std::size_t>(cfg_.batch), rng);
  std::vector<const PcTransition*> batch;
  batch.reserve(idx.size());
  for (auto i : idx) batch.push_back(&buffer_.at(i));
  return train_batch(batch);
}

DdpgLearner::StepStats DdpgLearner::train_batch(std::span<const PcTransition* const> batch) {
  StepStats st;
  if (batch.empty()) return st;
  const double inv = 1.0 / static_cast<double>(batch.size());

  // Critic: minimise 0.5 (Q(s, a) - y)^2 with y = r + gamma Q'(s', mu'(s')).
  std::vector<double> grad_c(critic_.size(), 0.0);
  nn::ForwardCache cache;
  for (const auto* tr : batch) {
    const double a2 = std::clamp(actor_t_.predict(tr->s2)[0], -a_max_, a_max_);
    const double y = tr->r + cfg_.gamma * critic_t_.predict(critic_input(tr->s2, a2))[0];
    const auto in = critic_input(tr->s, tr->a);
    const double q = critic_.forward(in, {}, cache)[0];
    const double err = q - y;
    st.critic_loss += 0.5 * err * err * inv;
    const double d = err * inv;
    critic_.backward(cache, std::span<const double>(&d, 1), grad_c);
  }
  if (!std::isfinite(st.critic_loss)) {
    ++skipped_;
    return st;
  }

  // Actor: ascend Q(s, mu(s)); dQ/da flows through the critic input.
  std::vector<double> grad_a(actor_.size(), 0.0);
  std::vector<double> grad_unused(critic_.size(), 0.0);
  std::vector<double> d_in(static_cast<std::size_t>(state_dim_) + 1);
  nn::ForwardCache acache, ccache;
  for (const auto* tr : batch) {
    const double a = actor_.forward(tr->s, {}, acache)[0];
    const auto in = critic_input(tr->s, a);
    critic_.forward(in, {}, ccache);
    const double d = -inv;
    critic_.backward(ccache, std::span<const double>(&d, 1), grad_unused, d_in);
    const double da = d_in.back() / a_max_;
    actor_.backward(acache, std::span<const double>(&da, 1), grad_a);
  }

  critic_opt_.step(critic_.params(), grad_c);
  actor_opt_.step(actor_.params(), grad_a);
  nn::target_update(critic_, critic_t_, nn::TargetMode::Soft, cfg_.soft_update);
  nn::target_update(actor_, actor_t_, nn::TargetMode::Soft, cfg_.soft_update);
  st.applied = true;
  return st;
}

double advantage(const DdpgLearner& oracle, const DrivingStatus& x, double a, const PlatoonConfig& cfg) {
  const auto f = oracle_features(x, cfg);
  return oracle.q_value(f, a) - oracle.q_value(f, oracle.act(f));
}

double exploration_sigma(const PcLearningConfig& cfg, double a_max, double progress) {
  progress = std::clamp(progress, 0.0, 1.0);
  return a_max * (cfg.noise_start + (cfg.noise_end - cfg.noise_start) * progress);
}

}  // namespace mtcc
