#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mtcc/config.hpp"
#include "mtcc/nn.hpp"

namespace mtcc {

// Outcome of one self-check. `value` is the measured statistic (an error, a
// p-value, a correlation) and `threshold` the bound it is held to.
struct CheckResult {
  std::string name;
  bool pass = false;
  double value = 0.0;
  double threshold = 0.0;
  std::string detail;
  double seconds = 0.0;
};

// |a - b| / max(|a|, |b|), 0 when both are 0.
double relative_error(double a, double b);

// Model formulas against independent scalar re-implementations on random
// inputs. One result per formula.
std::vector<CheckResult> check_equations(std::uint64_t seed, int samples = 1000);

// Small tabular MDP used by the advantage-identity check.
struct FiniteMdp {
  int states = 0;
  int actions = 0;
  std::vector<double> transition;  // [s][a][s'] row-major
  std::vector<double> reward;      // [s][a]
  std::vector<double> initial;     // [s]

  double p(int s, int a, int s2) const { return transition[(s * actions + a) * states + s2]; }
  double r(int s, int a) const { return reward[s * actions + a]; }
  static FiniteMdp random(int states, int actions, std::uint64_t seed);
};

// Optimal time-indexed values by backward induction, V_H = 0.
struct FiniteHorizonSolution {
  std::vector<std::vector<double>> q;  // [k][s * A + a]
  std::vector<std::vector<double>> v;  // [k][s], k = 0..H
  std::vector<std::vector<int>> greedy;  // [k][s]
};
FiniteHorizonSolution solve_finite_horizon(const FiniteMdp& mdp, int horizon, double gamma);

// policy[s * A + a] = probability of a in s (stationary).
// Exact discounted return by enumerating every trajectory.
double enumerate_return(const FiniteMdp& mdp, std::span<const double> policy, int horizon, double gamma);
// Exact E[sum_k gamma^k A_k(x_k, a_k)] under `policy`, by enumeration.
double enumerate_cumulative_advantage(const FiniteMdp& mdp, std::span<const double> policy, int horizon,
                                      double gamma, const FiniteHorizonSolution& opt);

CheckResult check_advantage_identity(std::uint64_t seed);

// Discounted RRA return of a short scripted episode against the two-stream
// decomposition (throughput stream plus advantage stream).
CheckResult check_return_assembly(std::uint64_t seed);

// Reconstruction exactness for every delay, policy invariance under exact
// reconstruction, and the error/variance rank correlation.
std::vector<CheckResult> check_reconstruction(std::uint64_t seed);

// Spearman rank correlation with average ranks for ties.
double spearman(std::span<const double> x, std::span<const double> y);

// Largest relative error between backward() and central differences over
// every parameter and input of `net`. Parameters are redrawn uniformly in
// [-0.3, 0.3] first.
struct GradientCheck {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
};
GradientCheck gradient_check(nn::Network net, std::uint64_t seed, double step = 1e-5);

// Every network shape the learners build for `cfg`.
std::vector<CheckResult> check_gradients(const Settings& cfg, const std::string& label, std::uint64_t seed);

// Reward-backpropagation priority sequence and proportional sampling.
std::vector<CheckResult> check_rbper(std::uint64_t seed, int draws = 100000);

// Everything above on the desk and the default configuration.
std::vector<CheckResult> run_all_checks(std::uint64_t seed);

}  // namespace mtcc
