#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <sstream>

#include "mtcc/nn.hpp"
#include "mtcc/verification.hpp"

using namespace mtcc;
using namespace mtcc::nn;

namespace {

NetworkSpec small_recurrent() {
  NetworkSpec s;
  s.input_dim = 3;
  s.sequence_length = 3;
  s.sequence_features = 1;
  s.recurrent_units = 2;
  s.dense_units = 2;
  s.hidden = {3};
  s.output_dim = 2;
  return s;
}

double sig(double x) { return 1 / (1 + std::exp(-x)); }
double relu(double x) { return x > 0 ? x : 0; }

// Loop-by-loop forward pass for small_recurrent(), reading the parameter
// vector in its documented order.
std::vector<double> scalar_forward(const std::vector<double>& P, const std::vector<double>& x,
                                   const std::vector<double>& seq) {
  const int U = 2, F = 1, L = 3, D = 2, I = 3, H = 3, O = 2;
  std::size_t off = 0;
  const std::size_t wx = off;
  off += 4 * U * F;
  const std::size_t wh = off;
  off += 4 * U * U;
  const std::size_t b = off;
  off += 4 * U;
  double h[U] = {0, 0}, c[U] = {0, 0};
  for (int t = 0; t < L; ++t) {
    double z[4 * U];
    for (int r = 0; r < 4 * U; ++r) {
      z[r] = P[b + r] + P[wx + r * F] * seq[t];
      for (int u = 0; u < U; ++u) z[r] += P[wh + r * U + u] * h[u];
    }
    for (int u = 0; u < U; ++u) {
      c[u] = sig(z[U + u]) * c[u] + sig(z[u]) * std::tanh(z[2 * U + u]);
      h[u] = sig(z[3 * U + u]) * std::tanh(c[u]);
    }
  }
  std::vector<double> first;
  for (int u = 0; u < U; ++u) first.push_back(relu(h[u]));
  for (int d = 0; d < D; ++d) {
    double s = P[off + D * I + d];
    for (int i = 0; i < I; ++i) s += P[off + d * I + i] * x[i];
    first.push_back(relu(s));
  }
  off += D * I + D;
  std::vector<double> hid(H);
  for (int o = 0; o < H; ++o) {
    double s = P[off + H * (U + D) + o];
    for (int i = 0; i < U + D; ++i) s += P[off + o * (U + D) + i] * first[i];
    hid[o] = relu(s);
  }
  off += H * (U + D) + H;
  std::vector<double> out(O);
  for (int o = 0; o < O; ++o) {
    double s = P[off + O * H + o];
    for (int i = 0; i < H; ++i) s += P[off + o * H + i] * hid[i];
    out[o] = s;
  }
  return out;
}

}  // namespace

TEST(Network, ZeroWeightsGiveZero) {
  Network net(small_recurrent());
  const auto y = net.predict(std::vector<double>{1, 2, 3}, std::vector<double>{0.5, -0.5, 1});
  EXPECT_EQ(y, (std::vector<double>{0, 0}));
}

TEST(Network, IdentityLayers) {
  NetworkSpec s;
  s.input_dim = 3;
  s.dense_units = 3;
  s.output_dim = 3;
  s.hidden_activation = Activation::Linear;
  Network net(s);
  auto p = net.params();
  for (int i = 0; i < 3; ++i) {
    p[i * 3 + i] = 1.0;       // dense slice
    p[12 + i * 3 + i] = 1.0;  // output layer
  }
  const std::vector<double> x{0.3, -1.2, 4.0};
  EXPECT_EQ(net.predict(x), x);
}

TEST(Network, ForwardMatchesScalarReimplementation) {
  Network net(small_recurrent());
  Rng rng(31);
  net.initialize(rng);
  for (auto& v : net.params()) v = rng.uniform(-1, 1);
  const std::vector<double> P(net.params().begin(), net.params().end());
  for (int n = 0; n < 50; ++n) {
    std::vector<double> x(3), seq(3);
    for (auto& v : x) v = rng.uniform(-2, 2);
    for (auto& v : seq) v = rng.uniform(-2, 2);
    const auto got = net.predict(x, seq);
    const auto want = scalar_forward(P, x, seq);
    for (int o = 0; o < 2; ++o) EXPECT_NEAR(got[o], want[o], 1e-12);
  }
}

TEST(Network, RejectsDimensionMismatch) {
  Network net(small_recurrent());
  EXPECT_THROW(net.predict(std::vector<double>{1, 2}, std::vector<double>{0, 0, 0}), std::invalid_argument);
  EXPECT_THROW(net.predict(std::vector<double>{1, 2, 3}, std::vector<double>{0, 0}), std::invalid_argument);
  NetworkSpec bad = small_recurrent();
  bad.hidden = {0};
  EXPECT_THROW(Network{bad}, std::invalid_argument);
}

TEST(Network, ZeroUpstreamGradientGivesZero) {
  Network net(small_recurrent());
  Rng rng(1);
  net.initialize(rng);
  ForwardCache c;
  net.forward(std::vector<double>{1, 2, 3}, std::vector<double>{1, 0, -1}, c);
  std::vector<double> g(net.size(), 0.0);
  net.backward(c, std::vector<double>{0, 0}, g);
  for (double v : g) EXPECT_EQ(v, 0.0);
}

TEST(Network, FiniteDifferenceGradients) {
  NetworkSpec s = small_recurrent();
  s.hidden = {4, 3};
  for (auto act : {Activation::Relu, Activation::Tanh}) {
    s.hidden_activation = act;
    const auto r = gradient_check(Network(s), 5);
    EXPECT_LT(r.max_rel_error, 1e-4);
    EXPECT_GT(r.checked, Network(s).size());
  }
  // Tanh-scaled output, as in the actor.
  s.output_activation = Activation::Tanh;
  s.output_scale = 3.0;
  EXPECT_LT(gradient_check(Network(s), 6).max_rel_error, 1e-4);
}

TEST(Network, LinearSquaredLossClosedForm) {
  // y = W2 (W1 x + b1) + b2, single output, loss 0.5 (y - t)^2.
  NetworkSpec s;
  s.input_dim = 2;
  s.dense_units = 2;
  s.output_dim = 1;
  s.hidden_activation = Activation::Linear;
  Network net(s);
  const std::vector<double> P{0.5, -1.0, 2.0, 0.25, 0.1, -0.2, 1.5, -0.5, 0.3};
  std::copy(P.begin(), P.end(), net.params().begin());
  const std::vector<double> x{1.0, 2.0};
  const double t = 0.7;
  const double h0 = 0.5 * 1 - 1.0 * 2 + 0.1, h1 = 2.0 * 1 + 0.25 * 2 - 0.2;
  const double y = 1.5 * h0 - 0.5 * h1 + 0.3;
  const double e = y - t;
  const std::vector<double> want{e * 1.5 * 1, e * 1.5 * 2, e * -0.5 * 1, e * -0.5 * 2, e * 1.5, e * -0.5,
                                 e * h0,      e * h1,      e};
  const RegressionSample sample{x, {}, 0, t};
  std::vector<double> g;
  ForwardCache c;
  const auto loss = squared_error_gradient(net, std::span(&sample, 1), g, c);
  EXPECT_NEAR(loss.loss, 0.5 * e * e, 1e-15);
  for (std::size_t i = 0; i < want.size(); ++i) EXPECT_NEAR(g[i], want[i], 1e-14) << i;
}

TEST(Network, NonFiniteLossFlagged) {
  NetworkSpec s;
  s.input_dim = 1;
  s.dense_units = 1;
  Network net(s);
  const std::vector<double> x{1.0};
  const RegressionSample sample{x, {}, 0, std::numeric_limits<double>::infinity()};
  std::vector<double> g;
  ForwardCache c;
  EXPECT_FALSE(squared_error_gradient(net, std::span(&sample, 1), g, c).finite);
}

TEST(Network, SaveLoadRoundTrip) {
  Network net(small_recurrent());
  Rng rng(9);
  net.initialize(rng);
  std::stringstream buf;
  net.save(buf);
  const Network back = Network::load(buf);
  EXPECT_TRUE(back == net);
  std::stringstream junk("garbage\n");
  EXPECT_THROW(Network::load(junk), std::runtime_error);
}

TEST(Network, InitializationDeterministic) {
  Network a(small_recurrent()), b(small_recurrent());
  Rng r1(4), r2(4);
  a.initialize(r1);
  b.initialize(r2);
  EXPECT_TRUE(a == b);
}

TEST(Adam, ZeroGradientLeavesParameters) {
  std::vector<double> p{1.0, -2.0}, g{0.0, 0.0};
  Adam opt(2, {});
  for (int i = 0; i < 10; ++i) opt.step(p, g);
  EXPECT_EQ(p, (std::vector<double>{1.0, -2.0}));
}

TEST(Adam, ConvergesOnQuadratic) {
  // f(x) = (x - 3)^2 from x = 0.
  std::vector<double> p{0.0}, g(1);
  AdamConfig cfg;
  cfg.lr = 0.05;
  Adam opt(1, cfg);
  for (int i = 0; i < 1000; ++i) {
    g[0] = 2 * (p[0] - 3.0);
    opt.step(p, g);
  }
  EXPECT_NEAR(p[0], 3.0, 1e-6);
}

TEST(Adam, Deterministic) {
  std::vector<double> a{0.5, 0.5}, b{0.5, 0.5};
  const std::vector<double> g{0.3, -0.1};
  Adam oa(2, {}), ob(2, {});
  for (int i = 0; i < 5; ++i) {
    oa.step(a, g);
    ob.step(b, g);
  }
  EXPECT_EQ(a, b);
  EXPECT_EQ(oa.steps(), 5);
}

TEST(TargetUpdate, HardAndSoft) {
  Network main(small_recurrent()), target(small_recurrent());
  Rng rng(12);
  main.initialize(rng);
  target.initialize(rng);
  const std::vector<double> before(target.params().begin(), target.params().end());

  Network soft = target;
  target_update(main, soft, TargetMode::Soft, 0.001);
  for (std::size_t i = 0; i < soft.size(); ++i)
    EXPECT_NEAR(soft.params()[i], 0.001 * main.params()[i] + 0.999 * before[i], 1e-15);

  Network one = target;
  target_update(main, one, TargetMode::Soft, 1.0);
  EXPECT_TRUE(one == main);

  target_update(main, target, TargetMode::Hard);
  EXPECT_TRUE(target == main);

  NetworkSpec other = small_recurrent();
  other.hidden = {5};
  Network wrong(other);
  EXPECT_THROW(target_update(main, wrong, TargetMode::Hard), std::invalid_argument);
}
