#include "mtcc/nn.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace mtcc::nn {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double activate(Activation a, double z) {
  switch (a) {
    case Activation::Relu: return z > 0.0 ? z : 0.0;
    case Activation::Tanh: return std::tanh(z);
    case Activation::Linear: return z;
  }
  return z;
}

// Derivative expressed through pre-activation z and activation y.
double activate_grad(Activation a, double z, double y) {
  switch (a) {
    case Activation::Relu: return z > 0.0 ? 1.0 : 0.0;
    case Activation::Tanh: return 1.0 - y * y;
    case Activation::Linear: return 1.0;
  }
  return 1.0;
}

// y[o] += sum_i W[o, i] x[i]
void matvec_add(const double* W, const double* x, double* y, int out, int in) {
  for (int o = 0; o < out; ++o) {
    const double* row = W + static_cast<std::size_t>(o) * in;
    double s = 0.0;
    for (int i = 0; i < in; ++i) s += row[i] * x[i];
    y[o] += s;
  }
}

// gW[o, i] += d[o] x[i]
void outer_add(double* gW, const double* d, const double* x, int out, int in) {
  for (int o = 0; o < out; ++o) {
    const double dv = d[o];
    if (dv == 0.0) continue;
    double* row = gW + static_cast<std::size_t>(o) * in;
    for (int i = 0; i < in; ++i) row[i] += dv * x[i];
  }
}

// dx[i] += sum_o W[o, i] d[o]
void matvec_t_add(const double* W, const double* d, double* dx, int out, int in) {
  for (int o = 0; o < out; ++o) {
    const double dv = d[o];
    if (dv == 0.0) continue;
    const double* row = W + static_cast<std::size_t>(o) * in;
    for (int i = 0; i < in; ++i) dx[i] += row[i] * dv;
  }
}

void write_u64(std::ostream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

std::uint64_t read_u64(std::istream& in) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), 8)) throw std::runtime_error("checkpoint truncated");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

constexpr const char* kMagic = "MTCCNET1";

}  // namespace

std::string to_string(Activation a) {
  switch (a) {
    case Activation::Relu: return "relu";
    case Activation::Tanh: return "tanh";
    case Activation::Linear: return "linear";
  }
  return "linear";
}

Activation activation_from_string(const std::string& s) {
  if (s == "relu") return Activation::Relu;
  if (s == "tanh") return Activation::Tanh;
  if (s == "linear") return Activation::Linear;
  throw std::invalid_argument("unknown activation '" + s + "'");
}

void NetworkSpec::validate() const {
  if (input_dim < 0 || dense_units < 0 || recurrent_units < 0) throw std::invalid_argument("negative width");
  if (first_width() <= 0) throw std::invalid_argument("first hidden layer is empty");
  if (recurrent_units > 0 && (sequence_length <= 0 || sequence_features <= 0))
    throw std::invalid_argument("recurrent slice needs a sequence");
  if (dense_units > 0 && input_dim <= 0) throw std::invalid_argument("dense slice needs inputs");
  for (int h : hidden)
    if (h <= 0) throw std::invalid_argument("hidden widths must be positive");
  if (output_dim <= 0) throw std::invalid_argument("output_dim must be positive");
}

nlohmann::json NetworkSpec::to_json() const {
  return {{"input_dim", input_dim},
          {"sequence_length", sequence_length},
          {"sequence_features", sequence_features},
          {"recurrent_units", recurrent_units},
          {"dense_units", dense_units},
          {"hidden", hidden},
          {"output_dim", output_dim},
          {"hidden_activation", to_string(hidden_activation)},
          {"output_activation", to_string(output_activation)},
          {"output_scale", output_scale}};
}

NetworkSpec NetworkSpec::from_json(const nlohmann::json& j) {
  NetworkSpec s;
  s.input_dim = j.at("input_dim").get<int>();
  s.sequence_length = j.at("sequence_length").get<int>();
  s.sequence_features = j.at("sequence_features").get<int>();
  s.recurrent_units = j.at("recurrent_units").get<int>();
  s.dense_units = j.at("dense_units").get<int>();
  s.hidden = j.at("hidden").get<std::vector<int>>();
  s.output_dim = j.at("output_dim").get<int>();
  s.hidden_activation = activation_from_string(j.at("hidden_activation").get<std::string>());
  s.output_activation = activation_from_string(j.at("output_activation").get<std::string>());
  s.output_scale = j.at("output_scale").get<double>();
  return s;
}

Network::Network(NetworkSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  build_layout();
}

void Network::build_layout() {
  std::size_t off = 0;
  const int U = spec_.recurrent_units;
  if (U > 0) {
    lstm_ = {off, 0, 0, spec_.sequence_features, U};
    off += static_cast<std::size_t>(4 * U) * spec_.sequence_features;
    lstm_.wh = off;
    off += static_cast<std::size_t>(4 * U) * U;
    lstm_.b = off;
    off += 4 * U;
  }
  if (spec_.dense_units > 0) {
    dense_slice_ = {off, 0, spec_.input_dim, spec_.dense_units};
    off += static_cast<std::size_t>(spec_.dense_units) * spec_.input_dim;
    dense_slice_.b = off;
    off += spec_.dense_units;
  }
  layers_.clear();
  int prev = spec_.first_width();
  auto add = [&](int out) {
    DenseLayer l{off, 0, prev, out};
    off += static_cast<std::size_t>(out) * prev;
    l.b = off;
    off += out;
    layers_.push_back(l);
    prev = out;
  };
  for (int h : spec_.hidden) add(h);
  add(spec_.output_dim);
  params_.assign(off, 0.0);
}

void Network::initialize(Rng& rng) {
  auto fill = [&](std::size_t from, std::size_t count, double bound) {
    for (std::size_t i = 0; i < count; ++i) params_[from + i] = rng.uniform(-bound, bound);
  };
  if (lstm_.units > 0) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(lstm_.in + lstm_.units));
    fill(lstm_.wx, lstm_.b + 4 * lstm_.units - lstm_.wx, bound);
  }
  if (dense_slice_.out > 0) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(dense_slice_.in));
    fill(dense_slice_.w, static_cast<std::size_t>(dense_slice_.out) * (dense_slice_.in + 1), bound);
  }
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& L = layers_[l];
    const bool last = l + 1 == layers_.size();
    const double bound = last ? 3e-3 : 1.0 / std::sqrt(static_cast<double>(L.in));
    fill(L.w, static_cast<std::size_t>(L.out) * (L.in + 1), bound);
  }
}

std::span<const double> Network::forward(std::span<const double> input, std::span<const double> sequence,
                                         ForwardCache& c) const {
  if (static_cast<int>(input.size()) != (spec_.dense_units > 0 ? spec_.input_dim : static_cast<int>(input.size())))
    throw std::invalid_argument("network input dimension mismatch");
  if (spec_.dense_units > 0 && static_cast<int>(input.size()) != spec_.input_dim)
    throw std::invalid_argument("network input dimension mismatch");
  if (static_cast<int>(sequence.size()) != spec_.sequence_size())
    throw std::invalid_argument("network sequence dimension mismatch");

  const double* P = params_.data();
  c.input.assign(input.begin(), input.end());
  c.sequence.assign(sequence.begin(), sequence.end());
  const std::size_t nlayers = layers_.size() + 1;
  c.pre.resize(nlayers);
  c.act.resize(nlayers);

  const int U = spec_.recurrent_units;
  const int D = spec_.dense_units;
  auto& pre0 = c.pre[0];
  auto& act0 = c.act[0];
  pre0.assign(U + D, 0.0);
  act0.assign(U + D, 0.0);

  if (U > 0) {
    const int L = spec_.sequence_length;
    const int F = spec_.sequence_features;
    c.gates.assign(static_cast<std::size_t>(L) * 4 * U, 0.0);
    c.cell.assign(static_cast<std::size_t>(L + 1) * U, 0.0);
    c.hid.assign(static_cast<std::size_t>(L + 1) * U, 0.0);
    for (int t = 0; t < L; ++t) {
      double* z = c.gates.data() + static_cast<std::size_t>(t) * 4 * U;
      std::memcpy(z, P + lstm_.b, sizeof(double) * 4 * U);
      matvec_add(P + lstm_.wx, sequence.data() + static_cast<std::size_t>(t) * F, z, 4 * U, F);
      matvec_add(P + lstm_.wh, c.hid.data() + static_cast<std::size_t>(t) * U, z, 4 * U, U);
      const double* cprev = c.cell.data() + static_cast<std::size_t>(t) * U;
      double* cnext = c.cell.data() + static_cast<std::size_t>(t + 1) * U;
      double* hnext = c.hid.data() + static_cast<std::size_t>(t + 1) * U;
      for (int u = 0; u < U; ++u) {
        const double ig = sigmoid(z[u]);
        const double fg = sigmoid(z[U + u]);
        const double gg = std::tanh(z[2 * U + u]);
        const double og = sigmoid(z[3 * U + u]);
        z[u] = ig;
        z[U + u] = fg;
        z[2 * U + u] = gg;
        z[3 * U + u] = og;
        cnext[u] = fg * cprev[u] + ig * gg;
        hnext[u] = og * std::tanh(cnext[u]);
      }
    }
    const double* hT = c.hid.data() + static_cast<std::size_t>(L) * U;
    for (int u = 0; u < U; ++u) {
      pre0[u] = hT[u];
      act0[u] = activate(spec_.hidden_activation, hT[u]);
    }
  }
  if (D > 0) {
    std::memcpy(pre0.data() + U, P + dense_slice_.b, sizeof(double) * D);
    matvec_add(P + dense_slice_.w, input.data(), pre0.data() + U, D, spec_.input_dim);
    for (int d = 0; d < D; ++d) act0[U + d] = activate(spec_.hidden_activation, pre0[U + d]);
  }

  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& L = layers_[l];
    auto& pre = c.pre[l + 1];
    auto& act = c.act[l + 1];
    pre.assign(P + L.b, P + L.b + L.out);
    matvec_add(P + L.w, c.act[l].data(), pre.data(), L.out, L.in);
    act.resize(L.out);
    const bool last = l + 1 == layers_.size();
    const Activation a = last ? spec_.output_activation : spec_.hidden_activation;
    const double scale = last ? spec_.output_scale : 1.0;
    for (int o = 0; o < L.out; ++o) act[o] = scale * activate(a, pre[o]);
  }
  return c.act.back();
}

std::vector<double> Network::predict(std::span<const double> input, std::span<const double> sequence) const {
  ForwardCache c;
  auto out = forward(input, sequence, c);
  return {out.begin(), out.end()};
}

void Network::backward(const ForwardCache& c, std::span<const double> d_output, std::span<double> grad,
                       std::span<double> d_input, std::span<double> d_sequence) const {
  if (grad.size() != params_.size()) throw std::invalid_argument("gradient buffer size mismatch");
  if (static_cast<int>(d_output.size()) != spec_.output_dim) throw std::invalid_argument("d_output size mismatch");
  const double* P = params_.data();
  double* G = grad.data();

  std::vector<double> d(d_output.begin(), d_output.end());
  std::vector<double> dprev;
  for (std::size_t li = layers_.size(); li-- > 0;) {
    const auto& L = layers_[li];
    const bool last = li + 1 == layers_.size();
    const Activation a = last ? spec_.output_activation : spec_.hidden_activation;
    const double scale = last ? spec_.output_scale : 1.0;
    const auto& pre = c.pre[li + 1];
    const auto& act = c.act[li + 1];
    for (int o = 0; o < L.out; ++o) d[o] *= scale * activate_grad(a, pre[o], act[o] / scale);
    outer_add(G + L.w, d.data(), c.act[li].data(), L.out, L.in);
    for (int o = 0; o < L.out; ++o) G[L.b + o] += d[o];
    dprev.assign(L.in, 0.0);
    matvec_t_add(P + L.w, d.data(), dprev.data(), L.out, L.in);
    d.swap(dprev);
  }
  // d now holds d(loss)/d(act0).
  const int U = spec_.recurrent_units;
  const int D = spec_.dense_units;
  for (int j = 0; j < U + D; ++j) d[j] *= activate_grad(spec_.hidden_activation, c.pre[0][j], c.act[0][j]);

  if (D > 0) {
    const double* dd = d.data() + U;
    outer_add(G + dense_slice_.w, dd, c.input.data(), D, spec_.input_dim);
    for (int j = 0; j < D; ++j) G[dense_slice_.b + j] += dd[j];
    if (!d_input.empty()) {
      if (static_cast<int>(d_input.size()) != spec_.input_dim) throw std::invalid_argument("d_input size mismatch");
      std::fill(d_input.begin(), d_input.end(), 0.0);
      matvec_t_add(P + dense_slice_.w, dd, d_input.data(), D, spec_.input_dim);
    }
  } else if (!d_input.empty()) {
    std::fill(d_input.begin(), d_input.end(), 0.0);
  }

  if (U > 0) {
    const int L = spec_.sequence_length;
    const int F = spec_.sequence_features;
    if (!d_sequence.empty()) {
      if (static_cast<int>(d_sequence.size()) != L * F) throw std::invalid_argument("d_sequence size mismatch");
      std::fill(d_sequence.begin(), d_sequence.end(), 0.0);
    }
    std::vector<double> dh(d.begin(), d.begin() + U);
    std::vector<double> dc(U, 0.0);
    std::vector<double> dz(4 * U);
    std::vector<double> dh_prev(U);
    for (int t = L - 1; t >= 0; --t) {
      const double* g = c.gates.data() + static_cast<std::size_t>(t) * 4 * U;
      const double* cprev = c.cell.data() + static_cast<std::size_t>(t) * U;
      const double* cnext = c.cell.data() + static_cast<std::size_t>(t + 1) * U;
      for (int u = 0; u < U; ++u) {
        const double ig = g[u], fg = g[U + u], gg = g[2 * U + u], og = g[3 * U + u];
        const double tc = std::tanh(cnext[u]);
        const double dov = dh[u] * tc;
        dc[u] += dh[u] * og * (1.0 - tc * tc);
        dz[u] = dc[u] * gg * ig * (1.0 - ig);
        dz[U + u] = dc[u] * cprev[u] * fg * (1.0 - fg);
        dz[2 * U + u] = dc[u] * ig * (1.0 - gg * gg);
        dz[3 * U + u] = dov * og * (1.0 - og);
        dc[u] *= fg;
      }
      const double* xt = c.sequence.data() + static_cast<std::size_t>(t) * F;
      outer_add(G + lstm_.wx, dz.data(), xt, 4 * U, F);
      outer_add(G + lstm_.wh, dz.data(), c.hid.data() + static_cast<std::size_t>(t) * U, 4 * U, U);
      for (int j = 0; j < 4 * U; ++j) G[lstm_.b + j] += dz[j];
      std::fill(dh_prev.begin(), dh_prev.end(), 0.0);
      matvec_t_add(P + lstm_.wh, dz.data(), dh_prev.data(), 4 * U, U);
      if (!d_sequence.empty())
        matvec_t_add(P + lstm_.wx, dz.data(), d_sequence.data() + static_cast<std::size_t>(t) * F, 4 * U, F);
      dh.swap(dh_prev);
    }
  }
}

void Network::save(std::ostream& out) const {
  out << kMagic << ' ' << spec_.to_json().dump() << '\n';
  write_u64(out, params_.size());
  for (double v : params_) write_u64(out, std::bit_cast<std::uint64_t>(v));
  if (!out) throw std::runtime_error("checkpoint write failed");
}

Network Network::load(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("checkpoint header missing");
  const std::string magic = std::string(kMagic) + ' ';
  if (line.rfind(magic, 0) != 0) throw std::runtime_error("not a network checkpoint");
  Network net(NetworkSpec::from_json(nlohmann::json::parse(line.substr(magic.size()))));
  const auto n = read_u64(in);
  if (n != net.params_.size()) throw std::runtime_error("checkpoint parameter count mismatch");
  for (auto& v : net.params_) v = std::bit_cast<double>(read_u64(in));
  return net;
}

void Network::save_file(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  save(out);
}

Network Network::load_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  return load(in);
}

void Adam::step(std::span<double> params, std::span<const double> grad) {
  if (params.size() != m_.size() || grad.size() != m_.size()) throw std::invalid_argument("adam size mismatch");
  ++t_;
  const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * grad[i];
    v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * grad[i] * grad[i];
    params[i] -= cfg_.lr * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + cfg_.eps);
  }
}

void target_update(const Network& main, Network& target, TargetMode mode, double rho) {
  if (!(main.spec() == target.spec())) throw std::invalid_argument("target_update: spec mismatch");
  auto src = main.params();
  auto dst = target.params();
  if (mode == TargetMode::Hard) {
    std::copy(src.begin(), src.end(), dst.begin());
    return;
  }
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = rho * src[i] + (1.0 - rho) * dst[i];
}

LossResult squared_error_gradient(const Network& net, std::span<const RegressionSample> batch,
                                  std::vector<double>& grad, ForwardCache& cache) {
  grad.assign(net.size(), 0.0);
  LossResult r;
  if (batch.empty()) return r;
  const double inv = 1.0 / static_cast<double>(batch.size());
  std::vector<double> d_out(net.spec().output_dim, 0.0);
  for (const auto& s : batch) {
    const auto out = net.forward(s.input, s.sequence, cache);
    const double err = out[s.output_index] - s.target;
    r.loss += 0.5 * err * err * inv;
    std::fill(d_out.begin(), d_out.end(), 0.0);
    d_out[s.output_index] = err * inv;
    net.backward(cache, d_out, grad);
  }
  r.finite = std::isfinite(r.loss);
  return r;
}

}  // namespace mtcc::nn
