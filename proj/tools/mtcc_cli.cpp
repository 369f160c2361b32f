// Command-line front end: train, eval, compare, verify, trace-export.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "mtcc/baselines.hpp"
#include "mtcc/config.hpp"
#include "mtcc/orchestrator.hpp"
#include "mtcc/trace.hpp"
#include "mtcc/verification.hpp"

namespace fs = std::filesystem;
using namespace mtcc;

namespace {

struct ConfigArgs {
  std::string path;
  bool desk = false;
  std::vector<std::string> overrides;
  long long seed = -1;
};

void add_config_options(CLI::App* app, ConfigArgs& a) {
  app->add_option("--config", a.path, "key = value configuration file")->check(CLI::ExistingFile);
  app->add_flag("--desk", a.desk, "start from the reduced desk configuration instead of the defaults");
  app->add_option("--set", a.overrides, "override one key, e.g. --set episodes_pc=20");
  app->add_option("--seed", a.seed, "master seed");
}

Settings build_settings(const ConfigArgs& a, const std::string& algo) {
  Settings s = a.desk ? desk_settings() : Settings{};
  if (!a.path.empty()) {
    std::ifstream in(a.path);
    std::stringstream buf;
    buf << in.rdbuf();
    apply_key_values(s, parse_key_values(buf.str()));
  }
  std::string extra;
  for (const auto& o : a.overrides) extra += o + "\n";
  apply_key_values(s, parse_key_values(extra));
  if (a.seed >= 0) s.run.seed = static_cast<std::uint64_t>(a.seed);
  if (!algo.empty()) s.run.algorithm = to_string(parse_algorithm(algo));
  s.finalize();
  return s;
}

void write_file(const fs::path& p, const std::function<void(std::ostream&)>& body) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  body(out);
}

void print_summary(const std::string& label, const EvalSummary& s) {
  std::printf("%-10s rra_return %9.3f +- %.3f  throughput %7.3f Mbit/s  pc %9.3f +- %.3f  delta_j %8.3f  delay1 %.3f\n",
              label.c_str(), s.mean_rra_return(), s.stderr_rra_return(), s.mean_throughput_mbps(),
              s.mean_pc_performance(), s.stderr_pc_performance(), s.mean_delta_j(), s.delay1_fraction());
}

void write_eval_outputs(const fs::path& dir, const EvalSummary& s, const Settings& cfg) {
  fs::create_directories(dir);
  write_file(dir / "metrics.csv", [&](std::ostream& o) { write_metrics_csv(o, s, cfg); });
  if (!s.trace.empty()) write_file(dir / "trace.csv", [&](std::ostream& o) { write_trace_csv(o, s.trace); });
}

int cmd_train(const ConfigArgs& ca, const std::string& algo_name, const std::string& out_dir, bool quiet) {
  const Settings cfg = build_settings(ca, algo_name);
  const Algorithm algo = parse_algorithm(cfg.run.algorithm);
  const fs::path out(out_dir);
  fs::create_directories(out);
  write_file(out / "config.txt", [&](std::ostream& o) { o << dump_settings(cfg); });

  std::vector<StepReport> reports;
  std::vector<ProgressRow> progress;
  TrainHooks hooks;
  hooks.log = quiet ? nullptr : &std::cerr;
  hooks.reports = &reports;
  hooks.progress = &progress;
  hooks.step_eval_episodes = std::max(1, cfg.run.eval_episodes / 5);
  Agents agents = run_joint_training(cfg, algo, hooks);

  EvalOptions eo;
  eo.episodes = cfg.run.eval_episodes;
  eo.trace = cfg.run.trace_eval;
  const auto summary = evaluate(cfg, agents, algo, eo);
  write_eval_outputs(out, summary, cfg);
  write_file(out / "reports.csv", [&](std::ostream& o) { write_reports_csv(o, reports); });
  if (!progress.empty()) write_file(out / "progress.csv", [&](std::ostream& o) { write_progress_csv(o, progress); });
  save_checkpoint((out / "checkpoint").string(), cfg, agents);
  print_summary(to_string(algo), summary);
  return 0;
}

int cmd_eval(const std::string& checkpoint, int episodes, const std::string& out_dir, bool trace) {
  Settings cfg;
  Agents agents = load_checkpoint(checkpoint, cfg);
  const Algorithm algo = parse_algorithm(cfg.run.algorithm);
  EvalOptions eo;
  eo.episodes = episodes > 0 ? episodes : cfg.run.eval_episodes;
  eo.trace = trace;
  eo.key_space = 2;
  const auto summary = evaluate(cfg, agents, algo, eo);
  write_eval_outputs(out_dir.empty() ? fs::path(checkpoint) / "eval" : fs::path(out_dir), summary, cfg);
  print_summary(to_string(algo), summary);
  return 0;
}

int cmd_compare(const ConfigArgs& ca, const std::vector<std::string>& names, const std::string& out_dir) {
  const Settings cfg = build_settings(ca, "");
  std::vector<Algorithm> algos;
  for (const auto& n : names) algos.push_back(parse_algorithm(n));
  if (algos.empty()) algos = all_algorithms();
  EvalOptions eo;
  eo.episodes = cfg.run.eval_episodes;
  eo.trace = !out_dir.empty() && cfg.run.trace_eval;
  const auto res = run_comparison(cfg, algos, eo, &std::cerr);
  for (auto a : algos) {
    const auto& s = res.eval.at(a);
    print_summary(to_string(a), s);
    const auto d = analyze_delay_pattern(s.delay_samples);
    std::printf("%-10s delay>1 rate: calm quartile %.3f, busy quartile %.3f\n", to_string(a).c_str(), d.rate_low,
                d.rate_high);
    if (!out_dir.empty()) write_eval_outputs(fs::path(out_dir) / to_string(a), s, cfg);
  }
  return 0;
}

int cmd_verify(std::uint64_t seed, bool quick) {
  std::vector<CheckResult> results;
  if (quick) {
    auto add = [&](std::vector<CheckResult> v) { results.insert(results.end(), v.begin(), v.end()); };
    add(check_equations(seed));
    results.push_back(check_advantage_identity(seed));
    results.push_back(check_return_assembly(seed));
    add(check_reconstruction(seed));
    add(check_gradients(desk_settings(), "desk", seed));
    add(check_rbper(seed));
  } else {
    results = run_all_checks(seed);
  }
  int failed = 0;
  for (const auto& r : results) {
    std::printf("%s %-36s %-10.3g (bound %.3g) %s [%.2f s]\n", r.pass ? "PASS" : "FAIL", r.name.c_str(), r.value,
                r.threshold, r.detail.c_str(), r.seconds);
    if (!r.pass) ++failed;
  }
  std::printf("%zu checks, %d failed\n", results.size(), failed);
  return failed == 0 ? 0 : 1;
}

int cmd_trace_export(const std::string& input, const std::string& format, const std::string& output) {
  std::ifstream in(input);
  if (!in) throw std::runtime_error("cannot open " + input);
  const auto rows = read_trace_csv(in);
  std::ofstream file;
  std::ostream* out = &std::cout;
  if (!output.empty()) {
    file.open(output, std::ios::binary);
    if (!file) throw std::runtime_error("cannot write " + output);
    out = &file;
  }
  if (format == "csv") write_trace_csv(*out, rows);
  else write_trace_jsonl(*out, rows);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-timescale control and communication co-design for vehicle platoons"};
  app.require_subcommand(1);

  ConfigArgs train_cfg;
  std::string train_algo = "mtcc", train_out;
  bool quiet = false;
  auto* train = app.add_subcommand("train", "train one algorithm, evaluate it and write outputs");
  add_config_options(train, train_cfg);
  train->add_option("--algo", train_algo, "mtcc, wo_rs, wo_rbper, delay or aoi");
  train->add_option("--out", train_out, "output directory")->required();
  train->add_flag("--quiet", quiet, "no progress log");

  std::string ckpt, eval_out;
  int eval_episodes = 0;
  bool eval_trace = false;
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on fresh episodes");
  eval->add_option("--checkpoint", ckpt, "checkpoint directory written by train")->required();
  eval->add_option("--episodes", eval_episodes, "evaluation episodes (default: eval_episodes)");
  eval->add_option("--out", eval_out, "output directory (default: <checkpoint>/eval)");
  eval->add_flag("--trace", eval_trace, "also write trace.csv");

  ConfigArgs cmp_cfg;
  std::vector<std::string> cmp_algos;
  std::string cmp_out;
  auto* compare = app.add_subcommand("compare", "shared PC training, then every algorithm's RRA training");
  add_config_options(compare, cmp_cfg);
  compare->add_option("--algos", cmp_algos, "algorithms (default: all)")->delimiter(',');
  compare->add_option("--out", cmp_out, "write per-algorithm metrics and traces here");

  std::uint64_t verify_seed = 1;
  bool verify_quick = false;
  auto* verify = app.add_subcommand("verify", "run the numerical self-checks");
  verify->add_option("--seed", verify_seed, "seed for the random test inputs");
  verify->add_flag("--quick", verify_quick, "skip the default-size network gradient check");

  std::string tr_in, tr_fmt = "jsonl", tr_out;
  auto* texp = app.add_subcommand("trace-export", "convert a trace.csv to csv or jsonl");
  texp->add_option("--input", tr_in, "trace.csv to read")->required()->check(CLI::ExistingFile);
  texp->add_option("--format", tr_fmt, "csv or jsonl")->check(CLI::IsMember({"csv", "jsonl"}));
  texp->add_option("--output", tr_out, "output path (default: stdout)");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*train) return cmd_train(train_cfg, train_algo, train_out, quiet);
    if (*eval) return cmd_eval(ckpt, eval_episodes, eval_out, eval_trace);
    if (*compare) return cmd_compare(cmp_cfg, cmp_algos, cmp_out);
    if (*verify) return cmd_verify(verify_seed, verify_quick);
    if (*texp) return cmd_trace_export(tr_in, tr_fmt, tr_out);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
