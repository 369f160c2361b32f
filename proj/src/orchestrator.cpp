#include "mtcc/orchestrator.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <stdexcept>

namespace mtcc {

namespace {

enum : std::uint64_t { kTrainEnv = 0x7261, kTrainRng = 0x7272, kEvalEnv = 0x6576, kEvalRng = 0x6572 };

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::uint64_t algo_id(Algorithm a) { return static_cast<std::uint64_t>(a) + 1; }

template <class F>
double mean_of(const std::vector<EpisodeMetrics>& eps, F f) {
  if (eps.empty()) return 0.0;
  double s = 0.0;
  for (const auto& e : eps) s += f(e);
  return s / static_cast<double>(eps.size());
}

template <class F>
double stderr_of(const std::vector<EpisodeMetrics>& eps, F f) {
  if (eps.size() < 2) return 0.0;
  const double m = mean_of(eps, f);
  double v = 0.0;
  for (const auto& e : eps) v += (f(e) - m) * (f(e) - m);
  v /= static_cast<double>(eps.size() - 1);
  return std::sqrt(v / static_cast<double>(eps.size()));
}

void log_line(const TrainHooks& hooks, const std::string& s) {
  if (hooks.log) *hooks.log << s << std::endl;
}

std::string fixed(double v, int digits = 3) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

ProgressRow progress_probe(const Settings& cfg, Agents& agents, Algorithm algo, int z, int step, int e, RraMode mode) {
  EvalOptions eo;
  eo.episodes = 1;
  eo.oracle = false;
  eo.rra_mode = mode;
  eo.key_space = hash_key({2, static_cast<std::uint64_t>(z), static_cast<std::uint64_t>(step),
                           static_cast<std::uint64_t>(e)});
  const auto s = evaluate(cfg, agents, algo, eo);
  return {z, step, e, s.mean_rra_return(), s.mean_pc_performance()};
}

}  // namespace

std::uint64_t make_tag(int iteration, int step, int episode) {
  return (static_cast<std::uint64_t>(iteration) << 40) | (static_cast<std::uint64_t>(step) << 32) |
         static_cast<std::uint32_t>(episode);
}
int tag_iteration(std::uint64_t tag) { return static_cast<int>(tag >> 40); }
int tag_step(std::uint64_t tag) { return static_cast<int>((tag >> 32) & 0xff); }
int tag_episode(std::uint64_t tag) { return static_cast<int>(tag & 0xffffffffULL); }

double EvalSummary::mean_rra_return() const { return mean_of(episodes, [](const auto& e) { return e.rra_return; }); }
double EvalSummary::mean_throughput_mbps() const {
  return mean_of(episodes, [](const auto& e) { return e.v2i_throughput_mbps; });
}
double EvalSummary::mean_pc_performance() const {
  return mean_of(episodes, [](const auto& e) { return e.pc_performance; });
}
double EvalSummary::mean_delta_j() const { return mean_of(episodes, [](const auto& e) { return e.delta_j; }); }
double EvalSummary::delay1_fraction() const {
  return mean_of(episodes, [](const auto& e) { return e.delay1_fraction; });
}
double EvalSummary::stderr_rra_return() const {
  return stderr_of(episodes, [](const auto& e) { return e.rra_return; });
}
double EvalSummary::stderr_pc_performance() const {
  return stderr_of(episodes, [](const auto& e) { return e.pc_performance; });
}

EvalSummary evaluate(const Settings& cfg, Agents& agents, Algorithm algo, const EvalOptions& opt) {
  EvalSummary out;
  for (int e = 0; e < opt.episodes; ++e) {
    const auto ue = static_cast<std::uint64_t>(e);
    EpisodeOptions eo;
    eo.algorithm = algo;
    eo.rra_mode = opt.rra_mode;
    eo.epsilon_feature = opt.rra_mode == RraMode::Random ? 1.0 : cfg.rra.epsilon_end;
    eo.env_key = hash_key({cfg.run.seed, kEvalEnv, opt.key_space, ue});
    eo.episode_index = e;
    eo.trace = opt.trace;
    Rng rng(hash_key({cfg.run.seed, kEvalRng, opt.key_space, ue}));
    auto res = run_episode(cfg, agents, eo, rng);
    if (opt.oracle) {
      res.metrics.oracle_pc_performance = run_oracle_episode(cfg, agents.oracle, eo.env_key, false, 0.0, 0, rng);
      res.metrics.delta_j = res.metrics.pc_performance - res.metrics.oracle_pc_performance;
    }
    out.episodes.push_back(std::move(res.metrics));
    out.delay_samples.insert(out.delay_samples.end(), res.delay_samples.begin(), res.delay_samples.end());
    if (opt.trace) out.trace.insert(out.trace.end(), res.trace.begin(), res.trace.end());
  }
  return out;
}

void run_pc_step(const Settings& cfg, Agents& agents, int z, Algorithm algo, std::vector<RraRecord>* records,
                 const TrainHooks& hooks) {
  const auto t0 = std::chrono::steady_clock::now();
  const int E = cfg.run.episodes_pc;
  const int th = cfg.run.pc_threshold();
  const Algorithm env_algo = z == 1 ? Algorithm::Mtcc : algo;
  const RraMode mode = z == 1 ? RraMode::Random : RraMode::Greedy;
  const auto uz = static_cast<std::uint64_t>(z);
  for (int e = 1; e <= E; ++e) {
    const auto ue = static_cast<std::uint64_t>(e);
    const double progress = E > 1 ? static_cast<double>(e - 1) / (E - 1) : 1.0;
    const double sigma = exploration_sigma(cfg.pc, cfg.platoon.control_max, progress);
    const std::uint64_t env = hash_key({cfg.run.seed, kTrainEnv, uz, 1, ue});
    Rng rng(hash_key({cfg.run.seed, kTrainRng, uz, 1, ue}));
    const auto tag = make_tag(z, 1, e);

    const double oracle_return = run_oracle_episode(cfg, agents.oracle, env, true, sigma, tag, rng);

    EpisodeOptions eo;
    eo.algorithm = env_algo;
    eo.pc_train = true;
    eo.store_pc = true;
    eo.rra_mode = mode;
    eo.epsilon_feature = mode == RraMode::Random ? 1.0 : cfg.rra.epsilon_end;
    eo.pc_sigma = sigma;
    eo.env_key = env;
    eo.tag = tag;
    eo.episode_index = e;
    eo.record_rra = records != nullptr && e > th;
    auto res = run_episode(cfg, agents, eo, rng);
    if (eo.record_rra)
      for (auto& r : res.records) records->push_back(std::move(r));

    if (cfg.run.eval_every > 0 && hooks.progress && e % cfg.run.eval_every == 0)
      hooks.progress->push_back(progress_probe(cfg, agents, env_algo, z, 1, e, mode));
    if (e % 10 == 0 || e == E)
      log_line(hooks, "[iter " + std::to_string(z) + " step 1] episode " + std::to_string(e) + "/" +
                          std::to_string(E) + " pc_return " + fixed(res.metrics.pc_performance) + " oracle_return " +
                          fixed(oracle_return) + " mean_delay " + fixed(res.metrics.mean_delay, 2));
  }
  if (hooks.reports) {
    StepReport rep{z, 1, to_string(algo)};
    if (hooks.step_eval_episodes > 0) {
      EvalOptions eo;
      eo.episodes = hooks.step_eval_episodes;
      eo.oracle = false;
      eo.rra_mode = mode;
      eo.key_space = 1;
      const auto s = evaluate(cfg, agents, env_algo, eo);
      rep.pc_performance = s.mean_pc_performance();
      rep.pc_stderr = s.stderr_pc_performance();
      rep.rra_return = s.mean_rra_return();
      rep.rra_stderr = s.stderr_rra_return();
      rep.throughput_mbps = s.mean_throughput_mbps();
    }
    rep.seconds = seconds_since(t0);
    hooks.reports->push_back(rep);
  }
}

void seed_rra_buffers(const Settings& cfg, Agents& agents, Algorithm algo, const std::vector<RraRecord>& records) {
  for (const auto& r : records) {
    RraTransition tr = r.tr;
    tr.reward = algorithm_reward(algo, r.parts, cfg);
    agents.rra.at(r.link).store(std::move(tr), r.tag, r.pos);
  }
}

void run_rra_step(const Settings& cfg, Agents& agents, int z, Algorithm algo, const TrainHooks& hooks) {
  const auto t0 = std::chrono::steady_clock::now();
  const int E = cfg.run.episodes_rra;
  const int th = cfg.run.rra_threshold();
  const auto uz = static_cast<std::uint64_t>(z);
  for (int e = 1; e <= E; ++e) {
    const auto ue = static_cast<std::uint64_t>(e);
    const double eps = epsilon_at(cfg.rra, e - 1, E);
    EpisodeOptions eo;
    eo.algorithm = algo;
    eo.rra_train = true;
    eo.rra_mode = RraMode::EpsilonGreedy;
    eo.epsilon = eps;
    eo.epsilon_feature = eps;
    eo.env_key = hash_key({cfg.run.seed, kTrainEnv, uz, 2, ue});
    eo.tag = make_tag(z, 2, e);
    eo.episode_index = e;
    eo.store_rra = true;
    eo.store_pc = true;
    Rng rng(hash_key({cfg.run.seed, kTrainRng, uz, 2, ue, algo_id(algo)}));
    const auto res = run_episode(cfg, agents, eo, rng);
    if (cfg.run.eval_every > 0 && hooks.progress && e % cfg.run.eval_every == 0)
      hooks.progress->push_back(progress_probe(cfg, agents, algo, z, 2, e, RraMode::Greedy));
    if (e % 10 == 0 || e == E)
      log_line(hooks, "[iter " + std::to_string(z) + " step 2 " + to_string(algo) + "] episode " +
                          std::to_string(e) + "/" + std::to_string(E) + " rra_return " +
                          fixed(res.metrics.rra_return) + " pc_return " + fixed(res.metrics.pc_performance) +
                          " mbps " + fixed(res.metrics.v2i_throughput_mbps, 2) + " mean_delay " +
                          fixed(res.metrics.mean_delay, 2) + " eps " + fixed(eps, 2));
  }
  // Keep only PC experience from episodes above the threshold.
  for (auto& pc : agents.pc)
    pc.buffer().prune([&](std::uint64_t tag) {
      return tag_iteration(tag) == z && tag_step(tag) == 2 && tag_episode(tag) <= th;
    });
  if (hooks.reports) {
    StepReport rep{z, 2, to_string(algo)};
    if (hooks.step_eval_episodes > 0) {
      EvalOptions eo;
      eo.episodes = hooks.step_eval_episodes;
      eo.oracle = false;
      eo.key_space = 1;
      const auto s = evaluate(cfg, agents, algo, eo);
      rep.pc_performance = s.mean_pc_performance();
      rep.pc_stderr = s.stderr_pc_performance();
      rep.rra_return = s.mean_rra_return();
      rep.rra_stderr = s.stderr_rra_return();
      rep.throughput_mbps = s.mean_throughput_mbps();
    }
    rep.seconds = seconds_since(t0);
    hooks.reports->push_back(rep);
  }
}

Agents run_joint_training(const Settings& cfg, Algorithm algo, const TrainHooks& hooks) {
  Agents agents = make_agents(cfg, traits(algo).prioritized, cfg.run.seed);
  for (int z = 1; z <= cfg.run.iterations; ++z) {
    // At z = 1 step 1 runs in the default queue environment with random
    // allocation; its RRA experience only suits algorithms sharing that
    // environment.
    const bool reuse = z >= 2 || traits(algo).reuses_step1;
    std::vector<RraRecord> records;
    run_pc_step(cfg, agents, z, algo, reuse ? &records : nullptr, hooks);
    if (reuse) seed_rra_buffers(cfg, agents, algo, records);
    run_rra_step(cfg, agents, z, algo, hooks);
  }
  return agents;
}

ComparisonResult run_comparison(const Settings& cfg, const std::vector<Algorithm>& algos, const EvalOptions& eval,
                                std::ostream* log) {
  ComparisonResult out;
  TrainHooks hooks;
  hooks.log = log;
  auto t0 = std::chrono::steady_clock::now();
  Agents base = make_agents(cfg, true, cfg.run.seed);
  std::vector<RraRecord> records;
  run_pc_step(cfg, base, 1, Algorithm::Mtcc, &records, hooks);
  out.step1_seconds = seconds_since(t0);
  for (auto algo : algos) {
    t0 = std::chrono::steady_clock::now();
    Agents a;
    a.pc = base.pc;
    a.oracle = base.oracle;
    a.rra = make_rra_agents(cfg, traits(algo).prioritized, cfg.run.seed);
    if (traits(algo).reuses_step1) seed_rra_buffers(cfg, a, algo, records);
    run_rra_step(cfg, a, 1, algo, hooks);
    out.eval[algo] = evaluate(cfg, a, algo, eval);
    out.seconds[algo] = seconds_since(t0);
    if (log) {
      const auto& s = out.eval[algo];
      *log << "[eval " << to_string(algo) << "] rra_return " << fixed(s.mean_rra_return()) << " mbps "
           << fixed(s.mean_throughput_mbps()) << " pc " << fixed(s.mean_pc_performance()) << " delay1 "
           << fixed(s.delay1_fraction()) << " (" << fixed(out.seconds[algo], 1) << " s)" << std::endl;
    }
  }
  return out;
}

DelayPattern analyze_delay_pattern(const std::vector<DelaySample>& samples) {
  DelayPattern d;
  if (samples.empty()) return d;
  std::vector<double> v;
  v.reserve(samples.size());
  for (const auto& s : samples) v.push_back(s.pred_variance);
  std::sort(v.begin(), v.end());
  auto quantile = [&](double p) {
    const double pos = p * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
  };
  d.q1 = quantile(0.25);
  d.q3 = quantile(0.75);
  std::size_t low_hits = 0, high_hits = 0;
  for (const auto& s : samples) {
    if (s.pred_variance <= d.q1) {
      ++d.n_low;
      if (s.delay_next > 1) ++low_hits;
    }
    if (s.pred_variance >= d.q3) {
      ++d.n_high;
      if (s.delay_next > 1) ++high_hits;
    }
  }
  d.rate_low = d.n_low ? static_cast<double>(low_hits) / d.n_low : 0.0;
  d.rate_high = d.n_high ? static_cast<double>(high_hits) / d.n_high : 0.0;
  return d;
}

void write_metrics_csv(std::ostream& out, const EvalSummary& s, const Settings& cfg) {
  const int F = cfg.platoon.num_followers();
  const int tau_max = cfg.queue.tau_max();
  out << "episode,rra_return,rra_return_discounted,v2i_throughput_mbps,pc_performance,oracle_pc_performance,"
         "delta_j,mean_delay,delay1_fraction";
  for (int f = 0; f < F; ++f) out << ",oscillation_" << f + 1;
  for (int f = 0; f < F; ++f)
    for (int t = 1; t <= tau_max; ++t) out << ",delay_" << f + 1 << "_" << t;
  out << '\n';
  for (std::size_t e = 0; e < s.episodes.size(); ++e) {
    const auto& m = s.episodes[e];
    out << e << ',' << format_number(m.rra_return) << ',' << format_number(m.rra_return_discounted) << ','
        << format_number(m.v2i_throughput_mbps) << ',' << format_number(m.pc_performance) << ','
        << format_number(m.oracle_pc_performance) << ',' << format_number(m.delta_j) << ','
        << format_number(m.mean_delay) << ',' << format_number(m.delay1_fraction);
    for (double o : m.oscillation) out << ',' << format_number(o);
    for (const auto& h : m.delay_histogram)
      for (int c : h) out << ',' << c;
    out << '\n';
  }
}

void write_reports_csv(std::ostream& out, const std::vector<StepReport>& reports) {
  out << "iteration,step,algorithm,pc_performance,pc_stderr,rra_return,rra_stderr,throughput_mbps,seconds\n";
  for (const auto& r : reports)
    out << r.iteration << ',' << r.step << ',' << r.algorithm << ',' << format_number(r.pc_performance) << ','
        << format_number(r.pc_stderr) << ',' << format_number(r.rra_return) << ',' << format_number(r.rra_stderr)
        << ',' << format_number(r.throughput_mbps) << ',' << fixed(r.seconds, 1) << '\n';
}

void write_progress_csv(std::ostream& out, const std::vector<ProgressRow>& rows) {
  out << "iteration,step,episode,rra_return,pc_performance\n";
  for (const auto& r : rows)
    out << r.iteration << ',' << r.step << ',' << r.episode << ',' << format_number(r.rra_return) << ','
        << format_number(r.pc_performance) << '\n';
}

void save_checkpoint(const std::string& dir, const Settings& cfg, const Agents& agents) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  {
    std::ofstream out(fs::path(dir) / "config.txt");
    if (!out) throw std::runtime_error("cannot write checkpoint config in " + dir);
    out << dump_settings(cfg);
  }
  for (std::size_t f = 0; f < agents.pc.size(); ++f) {
    const auto n = std::to_string(f + 1);
    agents.pc[f].actor().save_file((fs::path(dir) / ("pc_actor_" + n + ".net")).string());
    agents.pc[f].critic().save_file((fs::path(dir) / ("pc_critic_" + n + ".net")).string());
    agents.oracle[f].actor().save_file((fs::path(dir) / ("oracle_actor_" + n + ".net")).string());
    agents.oracle[f].critic().save_file((fs::path(dir) / ("oracle_critic_" + n + ".net")).string());
  }
  for (std::size_t i = 0; i < agents.rra.size(); ++i)
    agents.rra[i].online().save_file((fs::path(dir) / ("rra_" + std::to_string(i) + ".net")).string());
}

Agents load_checkpoint(const std::string& dir, Settings& cfg) {
  namespace fs = std::filesystem;
  cfg = load_settings((fs::path(dir) / "config.txt").string());
  const auto algo = parse_algorithm(cfg.run.algorithm);
  Agents agents = make_agents(cfg, traits(algo).prioritized, cfg.run.seed);
  for (std::size_t f = 0; f < agents.pc.size(); ++f) {
    const auto n = std::to_string(f + 1);
    agents.pc[f].set_networks(nn::Network::load_file((fs::path(dir) / ("pc_actor_" + n + ".net")).string()),
                              nn::Network::load_file((fs::path(dir) / ("pc_critic_" + n + ".net")).string()));
    agents.oracle[f].set_networks(
        nn::Network::load_file((fs::path(dir) / ("oracle_actor_" + n + ".net")).string()),
        nn::Network::load_file((fs::path(dir) / ("oracle_critic_" + n + ".net")).string()));
  }
  for (std::size_t i = 0; i < agents.rra.size(); ++i)
    agents.rra[i].set_network(nn::Network::load_file((fs::path(dir) / ("rra_" + std::to_string(i) + ".net")).string()));
  return agents;
}

}  // namespace mtcc
