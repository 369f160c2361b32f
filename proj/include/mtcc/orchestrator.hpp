#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "mtcc/baselines.hpp"
#include "mtcc/config.hpp"
#include "mtcc/simulator.hpp"

namespace mtcc {

// Replay tags: iteration, step (1 = PC training, 2 = RRA training), episode.
std::uint64_t make_tag(int iteration, int step, int episode);
int tag_iteration(std::uint64_t tag);
int tag_step(std::uint64_t tag);
int tag_episode(std::uint64_t tag);

struct EvalSummary {
  std::vector<EpisodeMetrics> episodes;
  std::vector<TraceRow> trace;
  std::vector<DelaySample> delay_samples;

  double mean_rra_return() const;
  double mean_throughput_mbps() const;
  double mean_pc_performance() const;
  double mean_delta_j() const;
  double delay1_fraction() const;
  double stderr_rra_return() const;
  double stderr_pc_performance() const;
};

struct EvalOptions {
  int episodes = 10;
  bool trace = false;
  bool oracle = true;              // also roll out the oracle platoon for delta J
  RraMode rra_mode = RraMode::Greedy;
  std::uint64_t key_space = 0;     // separates evaluation sets
};

EvalSummary evaluate(const Settings& cfg, Agents& agents, Algorithm algo, const EvalOptions& opt);

struct StepReport {
  int iteration = 0;
  int step = 0;
  std::string algorithm;
  double pc_performance = 0.0;
  double pc_stderr = 0.0;
  double rra_return = 0.0;
  double rra_stderr = 0.0;
  double throughput_mbps = 0.0;
  double seconds = 0.0;
};

// Periodic test episodes during training (one row per training episode).
struct ProgressRow {
  int iteration = 0;
  int step = 0;
  int episode = 0;
  double rra_return = 0.0;
  double pc_performance = 0.0;
};

struct TrainHooks {
  std::ostream* log = nullptr;
  int step_eval_episodes = 0;  // evaluation after each step, 0 disables
  std::vector<StepReport>* reports = nullptr;
  std::vector<ProgressRow>* progress = nullptr;
};

// Step 1 of iteration z: PC (and oracle) training for E^CL episodes with the
// RRA policy fixed (uniform random at z = 1, greedy afterwards). RRA records
// of episodes above the threshold are appended to `records` when given.
void run_pc_step(const Settings& cfg, Agents& agents, int iteration, Algorithm algo, std::vector<RraRecord>* records,
                 const TrainHooks& hooks);

// Prices step-1 records with the algorithm's reward and inserts them into
// the RRA replay buffers.
void seed_rra_buffers(const Settings& cfg, Agents& agents, Algorithm algo, const std::vector<RraRecord>& records);

// Step 2 of iteration z: RRA training for E^CM episodes with the PC policy
// fixed. PC transitions of episodes above the threshold are retained.
void run_rra_step(const Settings& cfg, Agents& agents, int iteration, Algorithm algo, const TrainHooks& hooks);

// The whole iterative procedure for one algorithm.
Agents run_joint_training(const Settings& cfg, Algorithm algo, const TrainHooks& hooks);

// Shared step 1, then step 2 and evaluation for each algorithm. All
// algorithms see the same environment keys.
struct ComparisonResult {
  std::map<Algorithm, EvalSummary> eval;
  std::map<Algorithm, double> seconds;
  double step1_seconds = 0.0;
};
ComparisonResult run_comparison(const Settings& cfg, const std::vector<Algorithm>& algos, const EvalOptions& eval,
                                 std::ostream* log = nullptr);

// Rates of delay > 1 for intervals whose trailing predecessor-action variance
// falls in the bottom and the top quartile.
struct DelayPattern {
  double rate_low = 0.0;
  double rate_high = 0.0;
  double q1 = 0.0, q3 = 0.0;
  std::size_t n_low = 0, n_high = 0;
};
DelayPattern analyze_delay_pattern(const std::vector<DelaySample>& samples);

void write_metrics_csv(std::ostream& out, const EvalSummary& s, const Settings& cfg);
void write_reports_csv(std::ostream& out, const std::vector<StepReport>& reports);
void write_progress_csv(std::ostream& out, const std::vector<ProgressRow>& rows);

void save_checkpoint(const std::string& dir, const Settings& cfg, const Agents& agents);
Agents load_checkpoint(const std::string& dir, Settings& cfg);

}  // namespace mtcc
