#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

#include "mtcc/orchestrator.hpp"

using namespace mtcc;

namespace {

Settings smoke() {
  Settings s = desk_settings();
  s.run.control_intervals = 10;
  s.run.comm_intervals = 5;
  s.run.episodes_pc = 5;
  s.run.episodes_rra = 5;
  s.run.eval_episodes = 2;
  s.pc.hidden = {8, 8};
  s.pc.batch = 16;
  s.rra.batch = 16;
  s.rra.recurrent_units = 4;
  s.rra.dense_units = 8;
  s.rra.hidden2 = 8;
  s.finalize();
  return s;
}

}  // namespace

TEST(Orchestrator, Tags) {
  const auto t = make_tag(2, 1, 37);
  EXPECT_EQ(tag_iteration(t), 2);
  EXPECT_EQ(tag_step(t), 1);
  EXPECT_EQ(tag_episode(t), 37);
  EXPECT_NE(make_tag(1, 2, 3), make_tag(1, 1, 3));
}

TEST(Orchestrator, Thresholds) {
  Settings s;
  s.finalize();
  EXPECT_EQ(s.run.pc_threshold(), 20);
  EXPECT_EQ(s.run.rra_threshold(), 20);
}

TEST(Orchestrator, DelayPatternQuartiles) {
  std::vector<DelaySample> v;
  // Variance 0..99; delays above one only in the calmest ten.
  for (int n = 0; n < 100; ++n) v.push_back({0, n, n < 10 ? 3 : 1, double(n)});
  const auto d = analyze_delay_pattern(v);
  EXPECT_DOUBLE_EQ(d.q1, 24.75);
  EXPECT_DOUBLE_EQ(d.q3, 74.25);
  EXPECT_EQ(d.n_low, 25u);
  EXPECT_EQ(d.n_high, 25u);
  EXPECT_DOUBLE_EQ(d.rate_low, 0.4);
  EXPECT_DOUBLE_EQ(d.rate_high, 0.0);
  EXPECT_EQ(analyze_delay_pattern({}).n_low, 0u);
}

TEST(Orchestrator, StepOneKeepsLateRecordsOnly) {
  Settings cfg = smoke();
  Agents ag = make_agents(cfg, true, cfg.run.seed);
  std::vector<RraRecord> rec;
  run_pc_step(cfg, ag, 1, Algorithm::Mtcc, &rec, {});
  ASSERT_FALSE(rec.empty());
  for (const auto& r : rec) {
    EXPECT_EQ(tag_step(r.tag), 1);
    EXPECT_GT(tag_episode(r.tag), cfg.run.pc_threshold());
  }
  // Four retained episodes of K * T * F transitions each.
  EXPECT_EQ(rec.size(), 4u * 10 * 5 * 3);
  for (const auto& pc : ag.pc) EXPECT_EQ(pc.buffer().size(), 5u * 10);
}

TEST(Orchestrator, StepTwoPrunesEarlyPcExperience) {
  Settings cfg = smoke();
  Agents ag = make_agents(cfg, true, cfg.run.seed);
  run_rra_step(cfg, ag, 1, Algorithm::Mtcc, {});
  for (const auto& pc : ag.pc) {
    ASSERT_EQ(pc.buffer().size(), 4u * 10);
    for (std::size_t n = 0; n < pc.buffer().size(); ++n) EXPECT_GT(tag_episode(pc.buffer().tag(n)), 1);
  }
  // Every RRA transition of the step went into the buffers.
  for (const auto& r : ag.rra) EXPECT_EQ(r.buffer().size(), 5u * 10 * 5);
}

TEST(Orchestrator, SmokeTrainingAndReport) {
  Settings cfg = smoke();
  cfg.run.episodes_pc = 3;
  cfg.run.episodes_rra = 3;
  cfg.finalize();
  std::vector<StepReport> reports;
  TrainHooks hooks;
  hooks.reports = &reports;
  hooks.step_eval_episodes = 1;
  Agents ag = run_joint_training(cfg, Algorithm::Mtcc, hooks);
  ASSERT_EQ(reports.size(), 2u);
  EXPECT_EQ(reports[0].step, 1);
  EXPECT_EQ(reports[1].step, 2);

  EvalOptions eo;
  eo.episodes = 2;
  const auto s = evaluate(cfg, ag, Algorithm::Mtcc, eo);
  ASSERT_EQ(s.episodes.size(), 2u);
  EXPECT_TRUE(std::isfinite(s.mean_rra_return()));
  EXPECT_GT(s.mean_throughput_mbps(), 0.0);
  EXPECT_LT(s.mean_pc_performance(), 0.0);
  std::stringstream csv;
  write_metrics_csv(csv, s, cfg);
  std::string header;
  std::getline(csv, header);
  for (const char* col : {"rra_return", "v2i_throughput_mbps", "pc_performance", "delta_j", "delay_3_6"})
    EXPECT_NE(header.find(col), std::string::npos) << col;
}

TEST(Orchestrator, TrainingDeterministic) {
  const Settings cfg = smoke();
  auto once = [&] {
    Agents ag = run_joint_training(cfg, Algorithm::WoRs, {});
    EvalOptions eo;
    eo.episodes = 2;
    eo.trace = true;
    const auto s = evaluate(cfg, ag, Algorithm::WoRs, eo);
    std::stringstream out;
    write_metrics_csv(out, s, cfg);
    write_trace_csv(out, s.trace);
    return out.str();
  };
  EXPECT_EQ(once(), once());
}

TEST(Orchestrator, CheckpointRoundTrip) {
  Settings cfg = smoke();
  cfg.run.episodes_pc = 3;
  cfg.run.episodes_rra = 3;
  cfg.run.algorithm = "aoi";
  cfg.finalize();
  Agents ag = run_joint_training(cfg, Algorithm::Aoi, {});
  const auto dir = std::filesystem::temp_directory_path() / "mtcc_ckpt_test";
  std::filesystem::remove_all(dir);
  save_checkpoint(dir.string(), cfg, ag);
  Settings back;
  Agents loaded = load_checkpoint(dir.string(), back);
  EXPECT_EQ(dump_settings(back), dump_settings(cfg));
  for (std::size_t f = 0; f < ag.pc.size(); ++f) {
    EXPECT_TRUE(loaded.pc[f].actor() == ag.pc[f].actor());
    EXPECT_TRUE(loaded.oracle[f].critic() == ag.oracle[f].critic());
    EXPECT_TRUE(loaded.rra[f].online() == ag.rra[f].online());
  }
  EvalOptions eo;
  eo.episodes = 1;
  EXPECT_EQ(evaluate(cfg, ag, Algorithm::Aoi, eo).mean_rra_return(),
            evaluate(back, loaded, Algorithm::Aoi, eo).mean_rra_return());
  std::filesystem::remove_all(dir);
  EXPECT_ANY_THROW(load_checkpoint(dir.string(), back));
}

TEST(Orchestrator, ComparisonSharesStepOne) {
  Settings cfg = smoke();
  cfg.run.episodes_pc = 2;
  cfg.run.episodes_rra = 2;
  cfg.finalize();
  EvalOptions eo;
  eo.episodes = 1;
  const auto r = run_comparison(cfg, {Algorithm::Mtcc, Algorithm::Delay}, eo);
  ASSERT_EQ(r.eval.size(), 2u);
  EXPECT_EQ(r.eval.at(Algorithm::Mtcc).episodes.size(), 1u);
  EXPECT_EQ(r.eval.at(Algorithm::Delay).episodes.size(), 1u);
}
