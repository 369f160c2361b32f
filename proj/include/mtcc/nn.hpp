#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "mtcc/rng.hpp"

namespace mtcc::nn {

enum class Activation { Relu, Linear, Tanh };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& s);

// Feed-forward network whose first hidden layer is the concatenation of an
// LSTM encoding of a sequence input (the recurrent slice) and a dense
// encoding of the flat input (the dense slice).
struct NetworkSpec {
  int input_dim = 0;
  int sequence_length = 0;
  int sequence_features = 1;
  int recurrent_units = 0;  // 0 disables the recurrent slice
  int dense_units = 0;
  std::vector<int> hidden;  // widths after the first hidden layer
  int output_dim = 1;
  Activation hidden_activation = Activation::Relu;
  Activation output_activation = Activation::Linear;
  double output_scale = 1.0;

  int first_width() const { return recurrent_units + dense_units; }
  int sequence_size() const { return recurrent_units > 0 ? sequence_length * sequence_features : 0; }
  void validate() const;

  nlohmann::json to_json() const;
  static NetworkSpec from_json(const nlohmann::json& j);
  bool operator==(const NetworkSpec&) const = default;
};

// Activations of one forward pass, kept for the backward pass.
struct ForwardCache {
  std::vector<double> input;
  std::vector<double> sequence;
  std::vector<double> gates;  // L x 4U (i, f, g, o), post-activation
  std::vector<double> cell;   // (L + 1) x U
  std::vector<double> hid;    // (L + 1) x U
  std::vector<std::vector<double>> pre;  // per layer pre-activation
  std::vector<std::vector<double>> act;  // per layer activation

  std::span<const double> output() const { return act.back(); }
};

class Network {
 public:
  Network() = default;
  explicit Network(NetworkSpec spec);

  const NetworkSpec& spec() const { return spec_; }
  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }
  std::size_t size() const { return params_.size(); }

  // Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)]; output layer uniform in
  // [-3e-3, 3e-3].
  void initialize(Rng& rng);

  // Throws std::invalid_argument on dimension mismatch.
  std::span<const double> forward(std::span<const double> input, std::span<const double> sequence,
                                  ForwardCache& cache) const;
  std::vector<double> predict(std::span<const double> input, std::span<const double> sequence = {}) const;

  // Accumulates d(loss)/d(params) into `grad` given d(loss)/d(output).
  // d_input / d_sequence receive the input gradients when non-empty.
  void backward(const ForwardCache& cache, std::span<const double> d_output, std::span<double> grad,
                std::span<double> d_input = {}, std::span<double> d_sequence = {}) const;

  void save(std::ostream& out) const;
  static Network load(std::istream& in);
  void save_file(const std::string& path) const;
  static Network load_file(const std::string& path);

  bool operator==(const Network& o) const { return spec_ == o.spec_ && params_ == o.params_; }

 private:
  struct DenseLayer {
    std::size_t w = 0, b = 0;
    int in = 0, out = 0;
  };
  struct LstmLayer {
    std::size_t wx = 0, wh = 0, b = 0;
    int in = 0, units = 0;
  };

  void build_layout();

  NetworkSpec spec_;
  std::vector<double> params_;
  LstmLayer lstm_;
  DenseLayer dense_slice_;
  std::vector<DenseLayer> layers_;  // hidden layers then the output layer
};

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class Adam {
 public:
  Adam() = default;
  Adam(std::size_t n, AdamConfig cfg) : cfg_(cfg), m_(n, 0.0), v_(n, 0.0) {}

  void step(std::span<double> params, std::span<const double> grad);
  long steps() const { return t_; }
  const AdamConfig& config() const { return cfg_; }

 private:
  AdamConfig cfg_;
  std::vector<double> m_, v_;
  long t_ = 0;
};

enum class TargetMode { Hard, Soft };

// Hard: copy. Soft: target <- rho * main + (1 - rho) * target.
// Throws std::invalid_argument if the specs differ.
void target_update(const Network& main, Network& target, TargetMode mode, double rho = 1.0);

struct LossResult {
  double loss = 0.0;
  bool finite = true;
};

struct RegressionSample {
  std::span<const double> input;
  std::span<const double> sequence;
  int output_index = 0;
  double target = 0.0;
};

// Mean of 0.5 * (target - output[index])^2 over the batch; gradient written
// (not accumulated) into `grad`.
LossResult squared_error_gradient(const Network& net, std::span<const RegressionSample> batch,
                                  std::vector<double>& grad, ForwardCache& cache);

}  // namespace mtcc::nn
