#include "mtcc/rra_agent.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mtcc {

namespace {

double to_db(double g) { return 10.0 * std::log10(std::max(g, 1e-30)); }

}  // namespace

std::vector<double> observe_gains_db(int i, const ChannelRealization& ch, std::span<const double> prev_interference_w,
                                     double noise_w) {
  const int M = ch.subchannels();
  if (static_cast<int>(prev_interference_w.size()) != M)
    throw std::invalid_argument("observe_gains_db: one interference value per sub-channel");
  std::vector<double> g;
  g.reserve(kGainGroups * M);
  for (int m = 0; m < M; ++m) g.push_back(to_db(ch.v2v(i, m)));
  for (int m = 0; m < M; ++m) g.push_back(to_db(ch.bs_to_v2v(i, m)));
  for (int m = 0; m < M; ++m) g.push_back(to_db(ch.v2v_to_bs(i, m)));
  for (int m = 0; m < M; ++m) g.push_back(to_db(ch.v2i(m)));
  for (int m = 0; m < M; ++m) g.push_back(to_db(noise_w + prev_interference_w[m]));
  return g;
}

int rra_flat_width(int M) { return kGainGroups * M + 3; }

std::vector<double> rra_flat_features(const RRAState& s, const Settings& cfg) {
  const int M = cfg.radio.num_v2i;
  if (static_cast<int>(s.gains_db.size()) != kGainGroups * M)
    throw std::invalid_argument("rra state: gain block has the wrong size");
  std::vector<double> f;
  f.reserve(rra_flat_width(M));
  const double off = cfg.rra.gain_db_offset, scale = cfg.rra.gain_db_scale;
  for (int j = 0; j < (kGainGroups - 1) * M; ++j) f.push_back((s.gains_db[j] - off) / scale);
  const double noise_db = to_db(cfg.radio.noise_w);
  for (int j = (kGainGroups - 1) * M; j < kGainGroups * M; ++j) f.push_back((s.gains_db[j] - noise_db) / scale);
  f.push_back(s.queue / cfg.queue.capacity);
  f.push_back(static_cast<double>(s.t) / cfg.run.comm_intervals);
  f.push_back(s.epsilon);
  return f;
}

std::vector<double> rra_sequence(const RRAState& s, const Settings& cfg) {
  if (static_cast<int>(s.pred_history.size()) != cfg.queue.tau_max())
    throw std::invalid_argument("rra state: action history must hold tau_max entries");
  std::vector<double> seq;
  seq.reserve(s.pred_history.size());
  for (double a : s.pred_history) seq.push_back(a / cfg.platoon.control_max);
  return seq;
}

int num_rra_actions(int M, int power_levels) { return (M + 1) * power_levels; }

int encode_action(const RRAAction& a, int power_levels) { return (a.channel + 1) * power_levels + a.power; }

RRAAction decode_action(int index, int M, int power_levels) {
  if (index < 0 || index >= num_rra_actions(M, power_levels)) throw std::out_of_range("rra action index");
  return {index / power_levels - 1, index % power_levels};
}

LinkAction to_link_action(const RRAAction& a, const RadioConfig& cfg) {
  return {a.channel, cfg.power_levels_w.at(a.power)};
}

double global_rra_reward(int t, int T, std::span<const double> v2i_rates, double advantage_sum, double kappa1,
                         double kappa2) {
  double sum = 0.0;
  for (double r : v2i_rates) sum += r;
  double reward = kappa1 * sum;
  if (t == T - 1) reward += kappa2 * advantage_sum;
  return reward;
}

double shaped_rra_reward(int t, int T, double rate_with, double rate_without, double advantage, double kappa1,
                         double kappa2) {
  double reward = kappa1 * (rate_with - rate_without);
  if (t == T - 1) reward += kappa2 * advantage;
  return reward;
}

double epsilon_at(const RraLearningConfig& cfg, int episode, int episodes) {
  const double span = cfg.epsilon_decay_fraction * episodes;
  if (span <= 0.0) return cfg.epsilon_end;
  const double x = std::min(1.0, episode / span);
  return cfg.epsilon_start + (cfg.epsilon_end - cfg.epsilon_start) * x;
}

nn::NetworkSpec rra_network_spec(const Settings& cfg) {
  nn::NetworkSpec s;
  s.input_dim = rra_flat_width(cfg.radio.num_v2i);
  s.sequence_length = cfg.queue.tau_max();
  s.sequence_features = 1;
  s.recurrent_units = cfg.rra.recurrent_units;
  s.dense_units = cfg.rra.dense_units;
  s.hidden = {cfg.rra.hidden2};
  s.output_dim = num_rra_actions(cfg.radio.num_v2i, cfg.radio.num_power_levels());
  return s;
}

DdqnLearner::DdqnLearner(const Settings& cfg, bool prioritized, std::uint64_t seed)
    : num_actions_(num_rra_actions(cfg.radio.num_v2i, cfg.radio.num_power_levels())),
      batch_(cfg.rra.batch),
      target_period_(cfg.rra.target_period),
      eta_(cfg.eta()),
      lr_(cfg.rra.lr),
      online_(rra_network_spec(cfg)),
      buffer_(static_cast<std::size_t>(cfg.rra.buffer), cfg.rra.priority_beta, cfg.rra.priority_decay, prioritized) {
  Rng rng(seed);
  online_.initialize(rng);
  target_ = online_;
  opt_ = nn::Adam(online_.size(), {lr_});
}

void DdqnLearner::set_network(nn::Network net) {
  online_ = std::move(net);
  target_ = online_;
  opt_ = nn::Adam(online_.size(), {lr_});
}

std::vector<double> DdqnLearner::q_values(std::span<const double> s, std::span<const double> seq) const {
  return online_.predict(s, seq);
}

int DdqnLearner::greedy(std::span<const double> s, std::span<const double> seq) const {
  const auto q = q_values(s, seq);
  return static_cast<int>(std::max_element(q.begin(), q.end()) - q.begin());
}

int DdqnLearner::act(std::span<const double> s, std::span<const double> seq, double epsilon, Rng& rng) const {
  if (rng.uniform() < epsilon) return static_cast<int>(rng.below(num_actions_));
  return greedy(s, seq);
}

double DdqnLearner::td_target(const RraTransition& tr) const {
  const auto q_online = online_.predict(tr.s2, tr.seq2);
  const auto best = std::max_element(q_online.begin(), q_online.end()) - q_online.begin();
  const auto q_target = target_.predict(tr.s2, tr.seq2);
  return tr.reward + eta_ * q_target[best];
}

DdqnLearner::StepStats DdqnLearner::train_step(Rng& rng) {
  if (!ready()) return {};
  const auto slots = buffer_.sample(static_cast<std::size_t>(batch_), rng);
  std::vector<const RraTransition*> batch;
  batch.reserve(slots.size());
  for (auto s : slots) batch.push_back(&buffer_.item(s));
  return train_batch(batch);
}

DdqnLearner::StepStats DdqnLearner::train_batch(std::span<const RraTransition* const> batch) {
  StepStats st;
  if (batch.empty()) return st;
  std::vector<double> targets;
  targets.reserve(batch.size());
  for (const auto* tr : batch) targets.push_back(td_target(*tr));
  std::vector<nn::RegressionSample> samples;
  samples.reserve(batch.size());
  for (std::size_t b = 0; b < batch.size(); ++b)
    samples.push_back({batch[b]->s, batch[b]->seq, batch[b]->action, targets[b]});
  std::vector<double> grad;
  nn::ForwardCache cache;
  const auto loss = nn::squared_error_gradient(online_, samples, grad, cache);
  st.loss = loss.loss;
  if (!loss.finite) {
    ++skipped_;
    return st;
  }
  opt_.step(online_.params(), grad);
  st.applied = true;
  return st;
}

void DdqnLearner::tick() {
  if (++ticks_ % target_period_ == 0) nn::target_update(online_, target_, nn::TargetMode::Hard);
}

}  // namespace mtcc
