#include "mtcc/verification.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>

#include <boost/math/special_functions/gamma.hpp>

#include "mtcc/baselines.hpp"
#include "mtcc/cam_queue.hpp"
#include "mtcc/channel.hpp"
#include "mtcc/pc_agent.hpp"
#include "mtcc/platoon.hpp"
#include "mtcc/replay.hpp"
#include "mtcc/rra_agent.hpp"
#include "mtcc/simulator.hpp"

namespace mtcc {

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(3);
  os << v;
  return os.str();
}

CheckResult bounded(std::string name, double err, double bound, std::string detail, Clock::time_point t0) {
  return {std::move(name), err <= bound, err, bound, std::move(detail), since(t0)};
}

// Tracks the worst relative error of a family of comparisons.
struct Worst {
  double err = 0.0;
  long n = 0;
  void add(double a, double b) {
    err = std::max(err, relative_error(a, b));
    ++n;
  }
};

// Scalar reference formulas, written from the model definitions without
// touching the library code paths.
namespace ref {

double watts(double dbm) { return 1e-3 * std::pow(10.0, dbm / 10.0); }

struct Kin {
  double p, v, acc;
};

Kin step(Kin k, double a, double Ts, double tau, double acc_max) {
  double acc = (1.0 - Ts / tau) * k.acc + (Ts / tau) * a;
  if (acc > acc_max) acc = acc_max;
  if (acc < -acc_max) acc = -acc_max;
  return {k.p + Ts * k.v, k.v + Ts * k.acc, acc};
}

double gap_error(Kin pred, Kin self, double L, double r, double h) { return (pred.p - self.p - L) - (r + h * self.v); }

double reward(double ep, double ev, double acc, double a, double tau, double Ts, double epmax, double evmax,
              double amax, double accmax, double a1, double a2, double a3) {
  const double j = (-acc + a) / tau;
  return -(std::fabs(ep / epmax) + a1 * std::fabs(ev / evmax) + a2 * std::fabs(a / amax) +
           a3 * std::fabs(j / (2.0 * accmax / Ts)));
}

// theta[i][m] in {0, 1}, pv[i] the transmit power of link i.
struct Alloc {
  std::vector<std::vector<int>> theta;
  std::vector<double> pv;
};

double sinr_i(int m, const Alloc& al, const ChannelRealization& ch, double PI, double s2) {
  double interf = 0.0;
  for (std::size_t i = 0; i < al.pv.size(); ++i) interf += al.theta[i][m] * al.pv[i] * ch.v2v_to_bs(int(i), m);
  return PI * ch.v2i(m) / (s2 + interf);
}

double sinr_v(int i, int m, const Alloc& al, const ChannelRealization& ch, double PI, double s2) {
  double interf = PI * ch.bs_to_v2v(i, m);
  for (std::size_t j = 0; j < al.pv.size(); ++j)
    if (int(j) != i) interf += al.theta[j][m] * al.pv[j] * ch.cross(int(j), i, m);
  return al.theta[i][m] * al.pv[i] * ch.v2v(i, m) / (s2 + interf);
}

double rate(double W, double g) { return W * std::log2(1.0 + g); }

double queue(double q, double rate_cam, int t, int NQ) {
  if (t == 0) return std::min(double(NQ), std::max(0.0, q - 1e-3 * rate_cam) + 1.0);
  return std::max(0.0, q - 1e-3 * rate_cam);
}

int delay(double q) {
  int c = int(q);
  if (c < q) ++c;
  return c + 1;
}

}  // namespace ref

}  // namespace

double relative_error(double a, double b) {
  const double scale = std::max(std::fabs(a), std::fabs(b));
  if (scale == 0.0) return 0.0;
  return std::fabs(a - b) / scale;
}

std::vector<CheckResult> check_equations(std::uint64_t seed, int samples) {
  constexpr double kTol = 1e-9;
  std::vector<CheckResult> out;
  Rng rng(hash_key({seed, 0xE0}));

  // Vehicle model and tracking errors.
  {
    const auto t0 = Clock::now();
    Worst w;
    for (int n = 0; n < samples; ++n) {
      PlatoonConfig c;
      c.control_period = rng.uniform(0.05, 0.2);
      c.driveline_tau = {c.control_period / rng.uniform(0.05, 0.95)};
      c.acc_max = rng.uniform(1.0, 5.0);
      const ref::Kin k{rng.uniform(-1000, 1000), rng.uniform(0, 40), rng.uniform(-c.acc_max, c.acc_max)};
      const double a = rng.uniform(-6, 6);
      const auto got = step_vehicle({k.p, k.v, k.acc}, a, c, 1);
      const auto want = ref::step(k, a, c.control_period, c.driveline_tau[0], c.acc_max);
      w.add(got.p, want.p);
      w.add(got.v, want.v);
      w.add(got.acc, want.acc);
    }
    out.push_back(bounded("eq vehicle model", w.err, kTol, std::to_string(w.n) + " comparisons", t0));
  }
  {
    const auto t0 = Clock::now();
    Worst w;
    for (int n = 0; n < samples; ++n) {
      PlatoonConfig c;
      c.vehicle_length = {rng.uniform(3, 18)};
      c.standstill_gap = rng.uniform(0, 5);
      c.time_headway = rng.uniform(0.2, 2.5);
      const ref::Kin self{rng.uniform(-500, 500), rng.uniform(0, 40), rng.uniform(-3, 3)};
      const ref::Kin pred{self.p + rng.uniform(0, 80), rng.uniform(0, 40), rng.uniform(-3, 3)};
      const auto e = tracking_errors({pred.p, pred.v, pred.acc}, {self.p, self.v, self.acc}, c, 1);
      w.add(e.e_p, ref::gap_error(pred, self, c.vehicle_length[0], c.standstill_gap, c.time_headway));
      w.add(e.e_v, pred.v - self.v);
    }
    out.push_back(bounded("eq tracking errors", w.err, kTol, std::to_string(w.n) + " comparisons", t0));
  }

  // SINR and rates over random gains and allocations.
  {
    const auto t0 = Clock::now();
    Worst wi, wv, wri, wrv, wwo;
    for (int n = 0; n < samples; ++n) {
      RadioConfig rc;
      rc.num_v2i = 1 + int(rng.below(4));
      rc.bandwidth = rng.uniform(0.2e6, 5e6);
      rc.noise_dbm = rng.uniform(-120, -100);
      rc.v2i_power_dbm = rng.uniform(10, 30);
      rc.cam_bits = rng.uniform(800, 8000);
      rc.finalize();
      const int L = 1 + int(rng.below(4));
      const int M = rc.num_v2i;
      ChannelRealization ch(L, M);
      auto gain = [&] { return std::pow(10.0, rng.uniform(-13.0, -5.0)); };
      for (int m = 0; m < M; ++m) {
        ch.v2i(m) = gain();
        for (int i = 0; i < L; ++i) {
          ch.v2v(i, m) = gain();
          ch.v2v_to_bs(i, m) = gain();
          ch.bs_to_v2v(i, m) = gain();
          for (int j = 0; j < L; ++j) ch.cross(j, i, m) = gain();
        }
      }
      std::vector<LinkAction> alloc(L);
      ref::Alloc al{std::vector<std::vector<int>>(L, std::vector<int>(M, 0)), std::vector<double>(L, 0.0)};
      for (int i = 0; i < L; ++i) {
        const int m = int(rng.below(M + 1)) - 1;
        const auto level = rng.below(rc.power_levels_dbm.size());
        const double dbm = rc.power_levels_dbm[level];
        alloc[i] = {m, rc.power_levels_w[level]};
        al.pv[i] = ref::watts(dbm);
        if (m >= 0) al.theta[i][m] = 1;
      }
      const double PI = ref::watts(rc.v2i_power_dbm), s2 = ref::watts(rc.noise_dbm);
      for (int m = 0; m < M; ++m) {
        wi.add(sinr_v2i(m, alloc, ch, rc), ref::sinr_i(m, al, ch, PI, s2));
        wri.add(rate_v2i(m, alloc, ch, rc), ref::rate(rc.bandwidth, ref::sinr_i(m, al, ch, PI, s2)));
        for (int i = 0; i < L; ++i) {
          wv.add(sinr_v2v(i, m, alloc, ch, rc), ref::sinr_v(i, m, al, ch, PI, s2));
          auto removed = al;
          removed.theta[i][m] = 0;
          wwo.add(rate_v2i_without(m, i, alloc, ch, rc), ref::rate(rc.bandwidth, ref::sinr_i(m, removed, ch, PI, s2)));
        }
      }
      for (int i = 0; i < L; ++i) {
        double bits = 0.0;
        for (int m = 0; m < M; ++m) bits += ref::rate(rc.bandwidth, ref::sinr_v(i, m, al, ch, PI, s2));
        wrv.add(rate_v2v_cam(i, alloc, ch, rc), bits / rc.cam_bits);
      }
    }
    const double s = since(t0);
    out.push_back({"eq sinr v2i", wi.err <= kTol, wi.err, kTol, std::to_string(wi.n) + " comparisons", s});
    out.push_back({"eq sinr v2v", wv.err <= kTol, wv.err, kTol, std::to_string(wv.n) + " comparisons", s});
    out.push_back({"eq rate v2i", wri.err <= kTol, wri.err, kTol, std::to_string(wri.n) + " comparisons", s});
    out.push_back({"eq rate v2v cam", wrv.err <= kTol, wrv.err, kTol, std::to_string(wrv.n) + " comparisons", s});
    out.push_back(
        {"eq counterfactual rate", wwo.err <= kTol, wwo.err, kTol, std::to_string(wwo.n) + " comparisons", s});
  }

  // Queue and delay.
  {
    const auto t0 = Clock::now();
    Worst w;
    long mismatched = 0;
    for (int n = 0; n < samples; ++n) {
      const int NQ = 1 + int(rng.below(8));
      double q = rng.uniform(0, NQ), qr = q;
      for (int s = 0; s < 20; ++s) {
        const int t = s % 10;
        const double r = rng.uniform() < 0.2 ? 0.0 : rng.uniform(0, 3000);
        q = queue_step(q, r, t, NQ);
        qr = ref::queue(qr, r, t, NQ);
        w.add(q, qr);
      }
      const double qd = rng.uniform() < 0.3 ? double(rng.below(NQ + 1)) : rng.uniform(0, NQ);
      if (observation_delay(qd) != ref::delay(qd)) ++mismatched;
    }
    out.push_back(bounded("eq queue", w.err, kTol, std::to_string(w.n) + " comparisons", t0));
    out.push_back(bounded("eq observation delay", double(mismatched), 0.0, std::to_string(samples) + " comparisons", t0));
  }

  // Control reward and the shaped RRA reward.
  {
    const auto t0 = Clock::now();
    Worst w;
    for (int n = 0; n < samples; ++n) {
      PlatoonConfig c;
      c.control_period = rng.uniform(0.05, 0.2);
      c.driveline_tau = {c.control_period / rng.uniform(0.05, 0.95)};
      c.acc_max = rng.uniform(1, 5);
      c.control_max = rng.uniform(1, 5);
      c.alpha1 = rng.uniform(0, 1);
      c.alpha2 = rng.uniform(0, 1);
      c.alpha3 = rng.uniform(0, 1);
      c.gap_error_max = rng.uniform(5, 30);
      c.velocity_error_max = rng.uniform(2, 20);
      const DrivingStatus x{rng.uniform(-20, 20), rng.uniform(-10, 10), rng.uniform(-c.acc_max, c.acc_max),
                            rng.uniform(-c.acc_max, c.acc_max)};
      const double a = rng.uniform(-c.control_max, c.control_max);
      w.add(pc_reward(x, a, c, 1),
            ref::reward(x.e_p, x.e_v, x.acc_self, a, c.driveline_tau[0], c.control_period, c.gap_error_max,
                        c.velocity_error_max, c.control_max, c.acc_max, c.alpha1, c.alpha2, c.alpha3));
    }
    out.push_back(bounded("eq control reward", w.err, kTol, std::to_string(w.n) + " comparisons", t0));
  }
  {
    const auto t0 = Clock::now();
    Worst w;
    for (int n = 0; n < samples; ++n) {
      const int T = 1 + int(rng.below(20));
      const int t = int(rng.below(T));
      const double without = rng.uniform(0, 2e7);
      const double with = without * rng.uniform();
      const double adv = rng.uniform(-5, 1), k1 = rng.uniform(1e-10, 1e-8), k2 = rng.uniform(0, 3);
      const double want = k1 * (with - without) + (t == T - 1 ? k2 * adv : 0.0);
      w.add(shaped_rra_reward(t, T, with, without, adv, k1, k2), want);
    }
    out.push_back(bounded("eq shaped reward", w.err, kTol, std::to_string(w.n) + " comparisons", t0));
  }
  return out;
}

FiniteMdp FiniteMdp::random(int states, int actions, std::uint64_t seed) {
  Rng rng(seed);
  FiniteMdp m;
  m.states = states;
  m.actions = actions;
  m.transition.resize(std::size_t(states) * actions * states);
  m.reward.resize(std::size_t(states) * actions);
  m.initial.resize(states);
  for (int s = 0; s < states; ++s)
    for (int a = 0; a < actions; ++a) {
      double sum = 0.0;
      for (int s2 = 0; s2 < states; ++s2) sum += m.transition[(s * actions + a) * states + s2] = rng.uniform_open();
      for (int s2 = 0; s2 < states; ++s2) m.transition[(s * actions + a) * states + s2] /= sum;
      m.reward[s * actions + a] = rng.uniform(-1, 1);
    }
  double sum = 0.0;
  for (auto& p : m.initial) sum += p = rng.uniform_open();
  for (auto& p : m.initial) p /= sum;
  return m;
}

FiniteHorizonSolution solve_finite_horizon(const FiniteMdp& mdp, int horizon, double gamma) {
  const int S = mdp.states, A = mdp.actions;
  FiniteHorizonSolution sol;
  sol.q.assign(horizon, std::vector<double>(std::size_t(S) * A, 0.0));
  sol.v.assign(horizon + 1, std::vector<double>(S, 0.0));
  sol.greedy.assign(horizon, std::vector<int>(S, 0));
  for (int k = horizon - 1; k >= 0; --k)
    for (int s = 0; s < S; ++s) {
      double best = -INFINITY;
      for (int a = 0; a < A; ++a) {
        double next = 0.0;
        for (int s2 = 0; s2 < S; ++s2) next += mdp.p(s, a, s2) * sol.v[k + 1][s2];
        const double q = mdp.r(s, a) + gamma * next;
        sol.q[k][s * A + a] = q;
        if (q > best) {
          best = q;
          sol.greedy[k][s] = a;
        }
      }
      sol.v[k][s] = best;
    }
  return sol;
}

namespace {

// Brute force over every (state, action) path; `term` gives the per-step
// quantity to accumulate.
template <class F>
double enumerate(const FiniteMdp& mdp, std::span<const double> policy, int horizon, double gamma, F term) {
  const int A = mdp.actions;
  double total = 0.0;
  auto rec = [&](auto&& self, int k, int s, double prob, double acc) -> void {
    if (k == horizon) {
      total += prob * acc;
      return;
    }
    for (int a = 0; a < A; ++a) {
      const double pa = policy[s * A + a];
      if (pa == 0.0) continue;
      const double acc2 = acc + std::pow(gamma, k) * term(k, s, a);
      if (k + 1 == horizon) {
        self(self, k + 1, s, prob * pa, acc2);
        continue;
      }
      for (int s2 = 0; s2 < mdp.states; ++s2) self(self, k + 1, s2, prob * pa * mdp.p(s, a, s2), acc2);
    }
  };
  for (int s = 0; s < mdp.states; ++s) rec(rec, 0, s, mdp.initial[s], 0.0);
  return total;
}

}  // namespace

double enumerate_return(const FiniteMdp& mdp, std::span<const double> policy, int horizon, double gamma) {
  return enumerate(mdp, policy, horizon, gamma, [&](int, int s, int a) { return mdp.r(s, a); });
}

double enumerate_cumulative_advantage(const FiniteMdp& mdp, std::span<const double> policy, int horizon,
                                      double gamma, const FiniteHorizonSolution& opt) {
  const int A = mdp.actions;
  return enumerate(mdp, policy, horizon, gamma,
                   [&](int k, int s, int a) { return opt.q[k][s * A + a] - opt.v[k][s]; });
}

CheckResult check_advantage_identity(std::uint64_t seed) {
  const auto t0 = Clock::now();
  constexpr int S = 5, A = 2, H = 6;
  constexpr double gamma = 0.9;
  double worst = 0.0, gap = 0.0;
  const int cases = 20;
  for (int c = 0; c < cases; ++c) {
    const auto mdp = FiniteMdp::random(S, A, hash_key({seed, 0x1E, std::uint64_t(c)}));
    const auto opt = solve_finite_horizon(mdp, H, gamma);
    Rng rng(hash_key({seed, 0x1F, std::uint64_t(c)}));
    std::vector<double> pi(S * A);
    for (int s = 0; s < S; ++s) {
      const double p = rng.uniform();
      pi[s * A] = p;
      pi[s * A + 1] = 1.0 - p;
    }
    double j_opt = 0.0;
    for (int s = 0; s < S; ++s) j_opt += mdp.initial[s] * opt.v[0][s];
    const double lhs = enumerate_return(mdp, pi, H, gamma) - j_opt;
    const double rhs = enumerate_cumulative_advantage(mdp, pi, H, gamma, opt);
    worst = std::max(worst, std::fabs(lhs - rhs));
    gap = std::min(gap, lhs);
  }
  return bounded("advantage identity", worst, 1e-9,
                 std::to_string(cases) + " random MDPs, largest degradation " + fmt(gap), t0);
}

CheckResult check_return_assembly(std::uint64_t seed) {
  const auto t0 = Clock::now();
  Settings cfg = desk_settings();
  cfg.run.control_intervals = 2;
  cfg.run.comm_intervals = 3;
  cfg.run.seed = seed;
  cfg.finalize();
  const int K = 2, T = 3, F = cfg.platoon.num_followers();
  const int A = num_rra_actions(cfg.radio.num_v2i, cfg.radio.num_power_levels());
  const double gamma = cfg.pc.gamma;
  double worst = 0.0;
  for (int e = 0; e < 8; ++e) {
    Agents agents = make_agents(cfg, true, hash_key({seed, 0x3A, std::uint64_t(e)}));
    EpisodeOptions opt;
    opt.rra_mode = RraMode::Scripted;
    opt.script = [&](int i, int k, int t) {
      return int(hash_key({seed, std::uint64_t(e), std::uint64_t(i), std::uint64_t(k), std::uint64_t(t)}) % A);
    };
    opt.pc_script = [&](int f, int k) {
      Rng r(hash_key({seed, 0x3B, std::uint64_t(e), std::uint64_t(f), std::uint64_t(k)}));
      return r.uniform(-2.0, 2.0);
    };
    opt.env_key = hash_key({seed, 0x3C, std::uint64_t(e)});
    Rng rng(1);
    const auto res = run_episode(cfg, agents, opt, rng);

    // Throughput stream discounted per communication interval, advantage
    // stream of interval k weighted by gamma^k * gamma^((T-1)/T).
    double throughput = 0.0, advantage = 0.0;
    for (int k = 0; k < K; ++k)
      for (int t = 0; t < T; ++t)
        throughput += std::pow(gamma, double(k * T + t) / T) * cfg.kappa1() * res.v2i_sums.at(k * T + t);
    for (int k = 0; k < K; ++k) {
      double sum = 0.0;
      for (int f = 0; f < F; ++f) sum += res.advantages.at(k * F + f);
      advantage += std::pow(gamma, k) * std::pow(gamma, double(T - 1) / T) * cfg.kappa2() * sum;
    }
    worst = std::max(worst, relative_error(res.metrics.rra_return_discounted, throughput + advantage));
    for (int k = 0; k < K; ++k)
      worst = std::max(worst, relative_error(std::pow(cfg.eta(), k * T + T - 1),
                                             std::pow(gamma, k) * std::pow(gamma, double(T - 1) / T)));
  }
  return bounded("return assembly", worst, 1e-12, "8 scripted episodes, K=2, T=3", t0);
}

double spearman(std::span<const double> x, std::span<const double> y) {
  auto ranks = [](std::span<const double> v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < idx.size();) {
      std::size_t j = i;
      while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
      for (std::size_t q = i; q <= j; ++q) r[idx[q]] = 0.5 * double(i + j) + 1.0;
      i = j + 1;
    }
    return r;
  };
  const auto rx = ranks(x), ry = ranks(y);
  const double n = double(rx.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

std::vector<CheckResult> check_reconstruction(std::uint64_t seed) {
  std::vector<CheckResult> out;
  PlatoonConfig c;
  const int tau_max = QueueConfig{}.tau_max();
  const double Ts = c.control_period;
  Rng rng(hash_key({seed, 0x4A}));

  // Random two-vehicle histories rolled forward by the reference model.
  struct Case {
    DrivingStatus delayed, truth;
    std::vector<double> own, pred;
  };
  auto make_case = [&](int tau, const std::vector<double>& pred_actions) {
    ref::Kin self{rng.uniform(-200, 200), rng.uniform(5, 35), rng.uniform(-2, 2)};
    ref::Kin pred{self.p + c.length(0) + c.standstill_gap + c.time_headway * self.v + rng.uniform(-8, 8),
                  self.v + rng.uniform(-3, 3), rng.uniform(-2, 2)};
    Case cs;
    cs.own.resize(tau_max);
    for (auto& a : cs.own) a = rng.uniform(-c.control_max, c.control_max);
    cs.pred = pred_actions;
    cs.delayed = {ref::gap_error(pred, self, c.length(0), c.standstill_gap, c.time_headway), pred.v - self.v,
                  self.acc, pred.acc};
    for (int s = 0; s < tau; ++s) {
      self = ref::step(self, cs.own[tau_max - tau + s], Ts, c.tau(1), c.acc_max);
      pred = ref::step(pred, cs.pred[cs.pred.size() - tau + s], Ts, c.tau(0), c.acc_max);
    }
    cs.truth = {ref::gap_error(pred, self, c.length(0), c.standstill_gap, c.time_headway), pred.v - self.v,
                self.acc, pred.acc};
    return cs;
  };
  auto err = [](const DrivingStatus& a, const DrivingStatus& b) {
    const auto x = a.as_array(), y = b.as_array();
    double e = 0.0;
    for (int d = 0; d < 4; ++d) e = std::max(e, std::fabs(x[d] - y[d]) / std::max(1.0, std::fabs(y[d])));
    return e;
  };

  {
    const auto t0 = Clock::now();
    Settings pcs;
    DdpgLearner policy(oracle_state_width(), pcs.pc, c.control_max, hash_key({seed, 0x4B}));
    Rng prng(hash_key({seed, 0x4C}));
    for (auto& p : policy.actor().params()) p = prng.uniform(-0.3, 0.3);
    double worst = 0.0, worst_action = 0.0;
    long n = 0;
    for (int tau = 0; tau <= tau_max; ++tau)
      for (int trial = 0; trial < 2000; ++trial) {
        std::vector<double> pa(tau_max);
        for (auto& a : pa) a = rng.uniform(-c.control_max, c.control_max);
        const auto cs = make_case(tau, pa);
        const auto rec = reconstruct_current_status(cs.delayed, cs.own, tau, cs.pred, c, 1);
        worst = std::max(worst, err(rec, cs.truth));
        worst_action = std::max(worst_action, std::fabs(policy.act(oracle_features(rec, c)) -
                                                        policy.act(oracle_features(cs.truth, c))));
        ++n;
      }
    const double s = since(t0);
    out.push_back({"reconstruction exact", worst <= 1e-9, worst, 1e-9,
                   std::to_string(n) + " histories, delays 0.." + std::to_string(tau_max), s});
    out.push_back({"policy on reconstruction", worst_action <= 1e-9, worst_action, 1e-9,
                   "largest action difference, m/s^2", s});
  }

  {
    const auto t0 = Clock::now();
    // Hold the delayed predecessor action for the whole window instead of
    // using the actual sequence.
    auto held_error = [&](double sigma, Rng& r) {
      const int tau = 1 + int(r.below(tau_max));
      const double base = r.uniform(-1.0, 1.0);
      std::vector<double> pa(tau_max);
      pa[tau_max - tau] = base;
      for (int s = tau_max - tau + 1; s < tau_max; ++s) pa[s] = base + sigma * r.normal();
      for (int s = 0; s < tau_max - tau; ++s) pa[s] = base;
      const auto cs = make_case(tau, pa);
      const std::vector<double> held(tau_max, base);
      const auto approx = reconstruct_current_status(cs.delayed, cs.own, tau, held, c, 1);
      const auto exact = reconstruct_current_status(cs.delayed, cs.own, tau, cs.pred, c, 1);
      const auto x = approx.as_array(), y = exact.as_array();
      double e = 0.0;
      for (int d = 0; d < 4; ++d) e += (x[d] - y[d]) * (x[d] - y[d]);
      return std::sqrt(e);
    };
    double zero = 0.0;
    for (int trial = 0; trial < 2000; ++trial) zero = std::max(zero, held_error(0.0, rng));
    out.push_back(bounded("constant predecessor action", zero, 1e-12, "held action equals the actual sequence", t0));

    const auto t1 = Clock::now();
    std::vector<double> levels, errors;
    for (int l = 1; l <= 100; ++l) {
      const double sigma = 0.01 * l;
      Rng r(hash_key({seed, 0x4D, std::uint64_t(l)}));
      double sum = 0.0;
      const int trials = 400;
      for (int trial = 0; trial < trials; ++trial) sum += held_error(sigma, r);
      levels.push_back(sigma * sigma);
      errors.push_back(sum / trials);
    }
    const double rho = spearman(levels, errors);
    out.push_back({"error grows with action variance", rho > 0.9, rho, 0.9,
                   "Spearman over 100 variance levels, 400 histories each", since(t1)});
  }
  return out;
}

GradientCheck gradient_check(nn::Network net, std::uint64_t seed, double step) {
  Rng rng(seed);
  for (auto& p : net.params()) p = rng.uniform(-0.3, 0.3);
  const auto& spec = net.spec();
  std::vector<double> in(spec.input_dim), seq(spec.sequence_size()), w(spec.output_dim);
  for (auto& x : in) x = rng.uniform(-1, 1);
  for (auto& x : seq) x = rng.uniform(-1, 1);
  for (auto& x : w) x = rng.uniform(-1, 1);

  nn::ForwardCache cache;
  auto loss = [&]() {
    const auto y = net.forward(in, seq, cache);
    double l = 0.0;
    for (std::size_t o = 0; o < w.size(); ++o) l += w[o] * y[o];
    return l;
  };
  loss();
  std::vector<double> grad(net.size(), 0.0), d_in(in.size(), 0.0), d_seq(seq.size(), 0.0);
  net.backward(cache, w, grad, d_in, d_seq);

  GradientCheck out;
  // Denominators below 1e-6 are floored so that vanishing gradients are
  // compared in absolute terms.
  auto compare = [&](double& x, double g) {
    const double keep = x;
    x = keep + step;
    const double up = loss();
    x = keep - step;
    const double down = loss();
    x = keep;
    const double fd = (up - down) / (2.0 * step);
    const double rel = std::fabs(g - fd) / std::max({std::fabs(g), std::fabs(fd), 1e-6});
    out.max_rel_error = std::max(out.max_rel_error, rel);
    ++out.checked;
  };
  auto params = net.params();
  for (std::size_t i = 0; i < params.size(); ++i) compare(params[i], grad[i]);
  for (std::size_t i = 0; i < in.size(); ++i) compare(in[i], d_in[i]);
  for (std::size_t i = 0; i < seq.size(); ++i) compare(seq[i], d_seq[i]);
  return out;
}

std::vector<CheckResult> check_gradients(const Settings& cfg, const std::string& label, std::uint64_t seed) {
  const int width = pc_state_width(cfg.queue.tau_max());
  const std::vector<std::pair<std::string, nn::NetworkSpec>> nets = {
      {"actor", pc_actor_spec(width, cfg.pc, cfg.platoon.control_max)},
      {"critic", pc_critic_spec(width, cfg.pc)},
      {"oracle actor", pc_actor_spec(oracle_state_width(), cfg.pc, cfg.platoon.control_max)},
      {"oracle critic", pc_critic_spec(oracle_state_width(), cfg.pc)},
      {"rra q-network", rra_network_spec(cfg)},
  };
  std::vector<CheckResult> out;
  std::uint64_t n = 0;
  for (const auto& [name, spec] : nets) {
    const auto t0 = Clock::now();
    const auto g = gradient_check(nn::Network(spec), hash_key({seed, 0x5A, n++}));
    out.push_back(bounded("gradient " + label + " " + name, g.max_rel_error, 1e-4,
                          std::to_string(g.checked) + " coordinates", t0));
  }
  return out;
}

std::vector<CheckResult> check_rbper(std::uint64_t seed, int draws) {
  std::vector<CheckResult> out;
  {
    const auto t0 = Clock::now();
    const int T = 10;
    RbperBuffer<int> buf(64, 100.0, 0.2, true);
    // Unrelated filler so that draws are not all on the chain.
    for (int i = 0; i < 20; ++i) buf.push(i, 0, {std::uint64_t(1000 + i), 0, 1});
    const std::uint64_t chain = 7;
    for (int t = 0; t < T; ++t) buf.push(t, 0, {chain, t, T});
    Rng rng(hash_key({seed, 0x6A}));
    std::vector<double> rounds;
    bool head_was_elevated = false;
    int max_elevated = 0;
    const auto head = std::size_t(buf.chain_slot(chain, T - 1));
    for (int n = 0; n < 100000 && buf.elevated_in_chain(chain) > 0; ++n) {
      const double p = buf.priority(head);
      if (p > 1.0 && !head_was_elevated) rounds.push_back(p);
      head_was_elevated = p > 1.0;
      buf.sample(1, rng);
      max_elevated = std::max(max_elevated, buf.elevated_in_chain(chain));
    }
    rounds.push_back(buf.priority(head));
    const std::vector<double> want = {100.0, 20.0, 4.0, 1.0};
    double err = rounds.size() == want.size() ? 0.0 : 1.0;
    for (std::size_t i = 0; i < std::min(rounds.size(), want.size()); ++i)
      err = std::max(err, relative_error(rounds[i], want[i]));
    std::string seq;
    for (double r : rounds) seq += (seq.empty() ? "" : " -> ") + fmt(r);
    out.push_back({"rbper round priorities", err <= 1e-12 && max_elevated <= 1, err, 1e-12,
                   "observed " + seq + ", at most " + std::to_string(max_elevated) + " elevated per chain",
                   since(t0)});
  }
  {
    const auto t0 = Clock::now();
    const std::vector<double> pr = {1, 1, 1, 2, 2, 3, 4, 5, 8, 10, 13, 20, 1, 4, 1.5, 6, 2.5, 1, 7, 3};
    RbperBuffer<int> buf(pr.size(), 100.0, 0.2, true);
    for (std::size_t i = 0; i < pr.size(); ++i) buf.push(int(i), 0, {std::uint64_t(i), 0, 1}, pr[i]);
    Rng rng(hash_key({seed, 0x6B}));
    std::vector<double> counts(pr.size(), 0.0);
    for (auto s : buf.sample(std::size_t(draws), rng, false)) counts[s] += 1.0;
    const double total = std::accumulate(pr.begin(), pr.end(), 0.0);
    double chi2 = 0.0;
    for (std::size_t i = 0; i < pr.size(); ++i) {
      const double e = draws * pr[i] / total;
      chi2 += (counts[i] - e) * (counts[i] - e) / e;
    }
    const double dof = double(pr.size() - 1);
    const double p = boost::math::gamma_q(dof / 2.0, chi2 / 2.0);
    out.push_back({"rbper proportional sampling", p > 0.01, p, 0.01,
                   "chi2 " + fmt(chi2) + " on " + fmt(dof) + " dof over " + std::to_string(draws) + " draws",
                   since(t0)});
  }
  return out;
}

std::vector<CheckResult> run_all_checks(std::uint64_t seed) {
  std::vector<CheckResult> out;
  auto append = [&](std::vector<CheckResult> v) { out.insert(out.end(), v.begin(), v.end()); };
  append(check_equations(seed));
  out.push_back(check_advantage_identity(seed));
  out.push_back(check_return_assembly(seed));
  append(check_reconstruction(seed));
  append(check_gradients(desk_settings(), "desk", seed));
  Settings full;
  full.finalize();
  append(check_gradients(full, "default", seed));
  append(check_rbper(seed));
  return out;
}

}  // namespace mtcc
