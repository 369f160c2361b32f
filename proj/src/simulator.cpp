#include "mtcc/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mtcc/cam_queue.hpp"
#include "mtcc/channel.hpp"

namespace mtcc {

namespace {

enum : std::uint64_t { kPcSeed = 0x5043, kOracleSeed = 0x4f52, kRraSeed = 0x5252, kChainSeed = 0x4348 };

double variance(std::span<const double> xs) {
  if (xs.empty()) return 0.0;
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double v = 0.0;
  for (double x : xs) v += (x - mean) * (x - mean);
  return v / static_cast<double>(xs.size());
}

// Entries [from, to] of a per-interval series, zero before the episode start.
std::vector<double> window(const std::vector<double>& series, int from, int to) {
  std::vector<double> out;
  out.reserve(std::max(0, to - from + 1));
  for (int j = from; j <= to; ++j) out.push_back(j < 0 ? 0.0 : series.at(j));
  return out;
}

struct PendingRra {
  RraRecord rec;
  long trace_row = -1;
};

}  // namespace

LeaderSource make_leader(const Settings& cfg) {
  if (!cfg.leader.trajectory_file.empty())
    return LeaderSource::from_csv(cfg.leader.trajectory_file, cfg.platoon.control_period, cfg.platoon.control_max);
  return LeaderSource::synthetic(cfg.leader, cfg.platoon.control_period, cfg.platoon.control_max, cfg.run.seed);
}

std::vector<DdqnLearner> make_rra_agents(const Settings& cfg, bool prioritized, std::uint64_t seed) {
  std::vector<DdqnLearner> out;
  for (int i = 0; i < cfg.platoon.num_followers(); ++i)
    out.emplace_back(cfg, prioritized, hash_key({seed, kRraSeed, static_cast<std::uint64_t>(i)}));
  return out;
}

Agents make_agents(const Settings& cfg, bool prioritized, std::uint64_t seed) {
  Agents a;
  const int F = cfg.platoon.num_followers();
  const int width = pc_state_width(cfg.queue.tau_max());
  for (int f = 0; f < F; ++f) {
    a.pc.emplace_back(width, cfg.pc, cfg.platoon.control_max, hash_key({seed, kPcSeed, static_cast<std::uint64_t>(f)}));
    a.oracle.emplace_back(oracle_state_width(), cfg.pc, cfg.platoon.control_max,
                          hash_key({seed, kOracleSeed, static_cast<std::uint64_t>(f)}));
  }
  a.rra = make_rra_agents(cfg, prioritized, seed);
  return a;
}

EpisodeResult run_episode(const Settings& cfg, Agents& agents, const EpisodeOptions& opt, Rng& rng) {
  const auto& pcfg = cfg.platoon;
  const auto& radio = cfg.radio;
  const int N = pcfg.num_vehicles;
  const int F = N - 1;
  const int K = cfg.run.control_intervals;
  const int T = cfg.run.comm_intervals;
  const int tau_max = cfg.queue.tau_max();
  const int M = radio.num_v2i;
  const int P = radio.num_power_levels();
  const int A = num_rra_actions(M, P);
  const double eta = cfg.eta();
  const double kappa1 = cfg.kappa1();
  const double kappa2 = cfg.kappa2();
  const bool replace = opt.replace_cam || traits(opt.algorithm).replace_cam;

  if (static_cast<int>(agents.pc.size()) != F || static_cast<int>(agents.oracle.size()) != F ||
      static_cast<int>(agents.rra.size()) != F)
    throw std::invalid_argument("run_episode: agent count does not match the platoon");

  EpisodeResult res;
  auto& met = res.metrics;
  met.delay_histogram.assign(F, std::vector<int>(tau_max, 0));
  met.oscillation.assign(F, 0.0);

  const auto leader = make_leader(cfg).episode_profile(opt.env_key, K);

  std::vector<std::vector<VehicleKinematics>> kin(N, std::vector<VehicleKinematics>(K + 1));
  std::vector<std::vector<double>> act(N, std::vector<double>(K + 1, 0.0));
  const auto start = steady_platoon(pcfg);
  for (int v = 0; v < N; ++v) kin[v][0] = start[v];

  std::vector<MessageLog> cams(F, MessageLog(tau_max + 1));
  std::vector<CamQueue> queues(F, CamQueue(cfg.queue.capacity));
  AoITracker aoi(F, T);
  std::vector<std::vector<double>> prev_interf(F, std::vector<double>(M, 0.0));

  std::vector<std::vector<double>> prev_s(F);
  std::vector<double> prev_a(F, 0.0), prev_r(F, 0.0);
  std::vector<double> adv(F, 0.0);
  std::vector<std::vector<double>> gap_err(F);
  std::vector<PendingRra> pending(F), cur(F);
  long delay_count = 0, delay_sum = 0, delay_one = 0;
  double v2i_total = 0.0;

  auto finalize = [&](PendingRra& p) {
    const double reward = algorithm_reward(opt.algorithm, p.rec.parts, cfg);
    if (p.trace_row >= 0) res.trace[p.trace_row].reward = reward;
    if (opt.store_rra) {
      RraTransition tr = p.rec.tr;
      tr.reward = reward;
      agents.rra[p.rec.link].store(std::move(tr), p.rec.tag, p.rec.pos);
    }
    if (opt.record_rra) res.records.push_back(std::move(p.rec));
  };

  auto rra_state = [&](int i, int k, int t, const ChannelRealization& ch) {
    RRAState s;
    s.gains_db = observe_gains_db(i, ch, prev_interf[i], radio.noise_w);
    s.queue = queues[i].length();
    s.pred_history = window(act[i], k - tau_max + 1, k);
    s.t = t;
    s.epsilon = opt.epsilon_feature;
    return s;
  };

  for (int k = 0; k <= K; ++k) {
    for (int v = 0; v < N; ++v)
      if (!std::isfinite(kin[v][k].p) || !std::isfinite(kin[v][k].v) || !std::isfinite(kin[v][k].acc))
        throw std::runtime_error("episode aborted: non-finite vehicle state at k=" + std::to_string(k));

    std::vector<double> positions(N);
    for (int v = 0; v < N; ++v) positions[v] = kin[v][k].p;
    const Geometry geo = make_geometry(positions, radio);
    const ChannelRealization ch0 = sample_channels(geo, radio, {cfg.run.seed, opt.env_key, k, 0});

    // Predecessors publish the CAM sampled at k.
    for (int f = 0; f < F; ++f) cams[f].record(k, kin[f][k]);

    // Followers observe, decide, and complete the PC transitions of k - 1.
    act[0][k] = k < K ? leader[k] : 0.0;
    for (int f = 0; f < F; ++f) {
      const int veh = f + 1;
      int tau = replace ? aoi.delay(f, tau_max) : observation_delay(queues[f].length());
      if (opt.pin_delay > 0) tau = opt.pin_delay;
      tau = std::clamp(tau, 1, tau_max);
      const int j = std::max(0, k - tau);
      const auto cam = cams[f].consume(k, k - j);
      const VehicleKinematics pred_obs = cam ? cam->payload : kin[f][j];
      AugmentedPCState S{driving_status(pred_obs, kin[veh][j], pcfg, veh), window(act[veh], k - tau_max, k - 1), tau};
      const auto s = pc_features(S, pcfg, tau_max);
      const DrivingStatus x = driving_status(kin[f][k], kin[veh][k], pcfg, veh);

      double a;
      if (opt.pc_script) a = opt.pc_script(f, k);
      else if (k < K && opt.pc_train) a = agents.pc[f].act_explore(s, opt.pc_sigma, rng);
      else a = agents.pc[f].act(s);
      act[veh][k] = a;
      const double r = pc_reward(x, a, pcfg, veh);
      adv[f] = advantage(agents.oracle[f], x, a, pcfg);

      if (k > 0) {
        if (opt.store_pc) agents.pc[f].store({prev_s[f], prev_a[f], prev_r[f], s}, opt.tag);
        res.advantages.push_back(adv[f]);
        if (k - 1 >= tau_max - 1)
          res.delay_samples.push_back({f, k - 1, tau, variance(window(act[f], k - tau_max, k - 1))});
      }
      if (k < K) {
        met.pc_performance += r;
        met.delay_histogram[f][tau - 1]++;
        ++delay_count;
        delay_sum += tau;
        if (tau == 1) ++delay_one;
        if (k >= K / 2) gap_err[f].push_back(x.e_p);
        if (opt.trace) {
          TraceRow row{"pc", opt.episode_index, k};
          row.i = veh;
          row.e_p = x.e_p;
          row.e_v = x.e_v;
          row.acc = x.acc_self;
          row.a = a;
          row.tau = tau;
          row.reward = r;
          res.trace.push_back(row);
        }
      }
      prev_s[f] = s;
      prev_a[f] = a;
      prev_r[f] = r;
    }
    if (opt.trace && k < K) {
      TraceRow row{"pc", opt.episode_index, k};
      row.i = 0;
      row.acc = kin[0][k].acc;
      row.a = act[0][k];
      res.trace.push_back(row);
    }

    // Pending reward-bearing RRA transitions of (k - 1, T - 1).
    if (k > 0) {
      double adv_sum = 0.0;
      for (double a : adv) adv_sum += a;
      for (int i = 0; i < F; ++i) {
        auto& p = pending[i];
        const auto s2 = rra_state(i, k, 0, ch0);
        p.rec.tr.s2 = rra_flat_features(s2, cfg);
        p.rec.tr.seq2 = rra_sequence(s2, cfg);
        p.rec.parts.advantage = adv[i];
        p.rec.parts.advantage_sum = adv_sum;
        p.rec.parts.aoi_next = aoi.aoi(i);
        finalize(p);
      }
      const double w = std::pow(eta, static_cast<double>((k - 1) * T + T - 1));
      met.rra_return += kappa2 * adv_sum;
      met.rra_return_discounted += w * kappa2 * adv_sum;
    }

    if (opt.pc_train && k > 0)
      for (int f = 0; f < F; ++f)
        for (int u = 0; u < cfg.pc.updates_per_step; ++u) agents.pc[f].train_step(rng);

    if (k == K) break;
    if (opt.log_events) res.events.push_back("decide " + std::to_string(k));

    // Communication intervals.
    for (int t = 0; t < T; ++t) {
      const ChannelRealization ch = t == 0 ? ch0 : sample_channels(geo, radio, {cfg.run.seed, opt.env_key, k, t});
      std::vector<LinkAction> alloc(F);
      std::vector<int> chosen(F);
      for (int i = 0; i < F; ++i) {
        const auto st = rra_state(i, k, t, ch);
        auto flat = rra_flat_features(st, cfg);
        auto seq = rra_sequence(st, cfg);
        if (t > 0) {
          cur[i].rec.tr.s2 = flat;
          cur[i].rec.tr.seq2 = seq;
          finalize(cur[i]);
        }
        int a = 0;
        switch (opt.rra_mode) {
          case RraMode::Random: a = static_cast<int>(rng.below(A)); break;
          case RraMode::EpsilonGreedy: a = agents.rra[i].act(flat, seq, opt.epsilon, rng); break;
          case RraMode::Greedy: a = agents.rra[i].greedy(flat, seq); break;
          case RraMode::Scripted: a = opt.script(i, k, t); break;
        }
        chosen[i] = a;
        alloc[i] = to_link_action(decode_action(a, M, P), radio);
        cur[i] = {};
        cur[i].rec.link = i;
        cur[i].rec.tr.s = std::move(flat);
        cur[i].rec.tr.seq = std::move(seq);
        cur[i].rec.tr.action = a;
        cur[i].rec.pos = {hash_key({opt.tag, kChainSeed, static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(k)}), t, T};
        cur[i].rec.tag = opt.tag;
      }

      std::vector<double> r_v2i(M);
      double v2i_sum = 0.0;
      for (int m = 0; m < M; ++m) {
        r_v2i[m] = rate_v2i(m, alloc, ch, radio);
        v2i_sum += r_v2i[m];
      }
      for (int i = 0; i < F; ++i) {
        const int m = alloc[i].channel;
        auto& parts = cur[i].rec.parts;
        parts.rate_with = m >= 0 ? r_v2i[m] : 0.0;
        parts.rate_without = m >= 0 ? rate_v2i_without(m, i, alloc, ch, radio) : 0.0;
        parts.v2i_sum = v2i_sum;
        parts.v2v_rate = rate_v2v_bits(i, alloc, ch, radio);
        parts.last = t == T - 1;
        if (replace && t == 0) queues[i].replace_with_fresh();
        parts.backlog = t == 0 || queues[i].length() > 0.0;
        const double cam_rate = parts.v2v_rate / radio.cam_bits;
        if (replace && t == 0) queues[i].reset(std::max(0.0, queues[i].length() - 1e-3 * cam_rate));
        else queues[i].step(cam_rate, t);
        for (int mm = 0; mm < M; ++mm) {
          double interf = 0.0;
          for (int j = 0; j < F; ++j)
            if (j != i && alloc[j].occupies(mm)) interf += alloc[j].power_w * ch.cross(j, i, mm);
          prev_interf[i][mm] = interf;
        }
        if (opt.trace) {
          TraceRow row{"rra", opt.episode_index, k, t, i};
          row.m = m;
          row.power_dbm = radio.power_levels_dbm[decode_action(chosen[i], M, P).power];
          row.q = queues[i].length();
          row.r_m = parts.rate_with;
          res.trace.push_back(row);
          cur[i].trace_row = static_cast<long>(res.trace.size()) - 1;
        }
      }
      v2i_total += v2i_sum;
      res.v2i_sums.push_back(v2i_sum);
      met.rra_return += kappa1 * v2i_sum;
      met.rra_return_discounted += std::pow(eta, static_cast<double>(k * T + t)) * kappa1 * v2i_sum;

      if (t == T - 1)
        for (int i = 0; i < F; ++i) pending[i] = std::move(cur[i]);

      if (opt.rra_train)
        for (int i = 0; i < F; ++i) {
          agents.rra[i].train_step(rng);
          agents.rra[i].tick();
        }
      if (opt.log_events) res.events.push_back("comm " + std::to_string(k) + " " + std::to_string(t));
    }

    for (int f = 0; f < F; ++f) aoi.step(f, queues[f].length());

    for (int v = 0; v < N; ++v) kin[v][k + 1] = step_vehicle(kin[v][k], act[v][k], pcfg, v);
    if (opt.log_events) res.events.push_back("control " + std::to_string(k));
  }

  met.v2i_throughput_mbps = v2i_total / (static_cast<double>(K) * T) / 1e6;
  met.mean_delay = delay_count ? static_cast<double>(delay_sum) / delay_count : 0.0;
  met.delay1_fraction = delay_count ? static_cast<double>(delay_one) / delay_count : 0.0;
  for (int f = 0; f < F; ++f)
    if (!gap_err[f].empty()) {
      const auto [lo, hi] = std::minmax_element(gap_err[f].begin(), gap_err[f].end());
      met.oscillation[f] = *hi - *lo;
    }
  return res;
}

double run_oracle_episode(const Settings& cfg, std::vector<DdpgLearner>& oracle, std::uint64_t env_key, bool train,
                          double sigma, std::uint64_t tag, Rng& rng) {
  const auto& pcfg = cfg.platoon;
  const int N = pcfg.num_vehicles;
  const int F = N - 1;
  const int K = cfg.run.control_intervals;
  const auto leader = make_leader(cfg).episode_profile(env_key, K);
  auto kin = steady_platoon(pcfg);
  std::vector<std::vector<double>> prev_s(F);
  std::vector<double> prev_a(F, 0.0), prev_r(F, 0.0), a(N, 0.0);
  double total = 0.0;
  for (int k = 0; k <= K; ++k) {
    a[0] = k < K ? leader[k] : 0.0;
    for (int f = 0; f < F; ++f) {
      const DrivingStatus x = driving_status(kin[f], kin[f + 1], pcfg, f + 1);
      auto s = oracle_features(x, pcfg);
      a[f + 1] = (k < K && train) ? oracle[f].act_explore(s, sigma, rng) : oracle[f].act(s);
      const double r = pc_reward(x, a[f + 1], pcfg, f + 1);
      if (k > 0 && train) oracle[f].store({prev_s[f], prev_a[f], prev_r[f], s}, tag);
      if (k < K) total += r;
      prev_s[f] = std::move(s);
      prev_a[f] = a[f + 1];
      prev_r[f] = r;
    }
    if (train && k > 0)
      for (int f = 0; f < F; ++f)
        for (int u = 0; u < cfg.pc.updates_per_step; ++u) oracle[f].train_step(rng);
    if (k == K) break;
    for (int v = 0; v < N; ++v) kin[v] = step_vehicle(kin[v], a[v], pcfg, v);
  }
  return total;
}

}  // namespace mtcc
