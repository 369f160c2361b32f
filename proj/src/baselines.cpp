#include "mtcc/baselines.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

namespace mtcc {

std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::Mtcc: return "mtcc";
    case Algorithm::Delay: return "delay";
    case Algorithm::Aoi: return "aoi";
    case Algorithm::WoRs: return "wo_rs";
    case Algorithm::WoRbper: return "wo_rbper";
  }
  return "mtcc";
}

Algorithm parse_algorithm(const std::string& name) {
  std::string n = name;
  std::transform(n.begin(), n.end(), n.begin(), [](unsigned char c) { return std::tolower(c); });
  for (auto a : all_algorithms())
    if (to_string(a) == n) return a;
  throw ConfigError("unknown algorithm '" + name + "' (expected mtcc|delay|aoi|wo_rs|wo_rbper)");
}

const std::vector<Algorithm>& all_algorithms() {
  static const std::vector<Algorithm> all = {Algorithm::Mtcc, Algorithm::Delay, Algorithm::Aoi, Algorithm::WoRs,
                                             Algorithm::WoRbper};
  return all;
}

AlgorithmTraits traits(Algorithm a) {
  AlgorithmTraits t;
  switch (a) {
    case Algorithm::Mtcc: break;
    case Algorithm::WoRs: t.shaped_reward = false; break;
    case Algorithm::WoRbper: t.prioritized = false; break;
    case Algorithm::Delay:
      t.replace_cam = true;
      t.uses_advantage = false;
      t.delay_reward = true;
      t.prioritized = false;
      t.reuses_step1 = false;
      break;
    case Algorithm::Aoi:
      t.replace_cam = true;
      t.uses_advantage = false;
      t.aoi_reward = true;
      t.reuses_step1 = false;
      break;
  }
  return t;
}

AlgorithmTraits ablation_config(const std::string& name) {
  const auto a = parse_algorithm(name);
  if (a != Algorithm::WoRs && a != Algorithm::WoRbper) throw ConfigError("'" + name + "' is not an ablation");
  return traits(a);
}

double delay_rra_reward(double rate_with, double rate_without, double v2v_rate, bool backlog, double lambda1,
                        double lambda2, double bonus) {
  return lambda1 * (rate_with - rate_without) + lambda2 * (backlog ? v2v_rate : bonus);
}

double aoi_step(double aoi, double q_end, double T) { return q_end == 0.0 ? T : aoi + T; }

int AoITracker::delay(int f, int tau_max) const {
  return std::clamp(static_cast<int>(std::lround(aoi_[f] / T_)), 1, tau_max);
}

double global_reward(const RewardParts& p, const Settings& cfg) {
  double r = cfg.kappa1() * p.v2i_sum;
  if (p.last) r += cfg.kappa2() * p.advantage_sum;
  return r;
}

double algorithm_reward(Algorithm a, const RewardParts& p, const Settings& cfg) {
  const double diff = p.rate_with - p.rate_without;
  switch (a) {
    case Algorithm::Mtcc:
    case Algorithm::WoRbper:
      return cfg.kappa1() * diff + (p.last ? cfg.kappa2() * p.advantage : 0.0);
    case Algorithm::WoRs:
      return global_reward(p, cfg);
    case Algorithm::Delay:
      return delay_rra_reward(p.rate_with, p.rate_without, p.v2v_rate, p.backlog, cfg.lambda1(), cfg.lambda2(),
                              cfg.delay_bonus());
    case Algorithm::Aoi:
      return cfg.kappa1() * diff - (p.last ? cfg.aoi_weight() * p.aoi_next : 0.0);
  }
  return 0.0;
}

}  // namespace mtcc
