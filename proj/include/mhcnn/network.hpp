#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mhcnn/dataset.hpp"
#include "mhcnn/tensor.hpp"

namespace mhcnn {

// Two-stage LeNet-style design: conv(kxk) -> 2x2 sub-sampling, twice,
// then a fully connected sigmoid output layer.
struct NetworkConfig {
  int conv1_maps = 6;
  int conv2_maps = 12;
  int kernel_size = 5;
  int pool_scale = 2;
  int n_classes = 10;
  int input_side = 28;

  int conv1_side() const noexcept { return input_side - kernel_size + 1; }
  int pool1_side() const noexcept { return conv1_side() / pool_scale; }
  int conv2_side() const noexcept { return pool1_side() - kernel_size + 1; }
  int pool2_side() const noexcept { return conv2_side() / pool_scale; }
  int feature_dim() const noexcept {
    return conv2_maps * pool2_side() * pool2_side();
  }
  // Flattened final-layer parameter count (weights then biases).
  int solution_dim() const noexcept {
    return n_classes * feature_dim() + n_classes;
  }
};

// Throws ConfigError unless every stage divides cleanly.
void validate(const NetworkConfig& config);

// Parses "i-6c-2s-12c-2s" style shorthand into a config.
NetworkConfig design_from_name(const std::string& name);
std::string design_name(const NetworkConfig& config);

struct Network {
  NetworkConfig config;
  std::vector<Tensor> conv1_kernels;               // conv1_maps of kxk
  std::vector<double> conv1_bias;                  // per map
  std::vector<std::vector<Tensor>> conv2_kernels;  // [conv2_maps][conv1_maps] kxk
  std::vector<double> conv2_bias;
  std::vector<double> pool1_beta, pool1_b;  // sub-sampling scale/bias per map
  std::vector<double> pool2_beta, pool2_b;
  Tensor out_weights;             // n_classes x feature_dim
  std::vector<double> out_bias;   // n_classes

  bool operator==(const Network& other) const;
};

// Kernels and output weights uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)];
// conv/pool biases zero; pool scale starts at 1/pool_scale^2 (mean pooling).
Network init_network(const NetworkConfig& config, std::uint64_t seed);

// Per-sample activations kept for backprop and final-layer re-evaluation.
struct ForwardTrace {
  const Tensor* input = nullptr;  // borrowed; owner must outlive the trace
  std::vector<Tensor> conv1_out;  // tanh outputs, conv1 stage
  std::vector<Tensor> pool1_sum;  // raw 2x2 block sums
  std::vector<Tensor> pool1_out;  // tanh(beta*sum + b)
  std::vector<Tensor> conv2_out;
  std::vector<Tensor> pool2_sum;
  std::vector<Tensor> pool2_out;
  std::vector<double> features;   // flattened pool2_out
  std::vector<double> outputs;    // sigmoid activations, length n_classes
};

ForwardTrace forward(const Network& net, const Tensor& image);

std::vector<double> one_hot(int label, int n_classes);

// Batch loss: 0.5 * sqrt( sum_{samples,classes} (o-u)^2 / N ).
double loss(const std::vector<std::vector<double>>& outputs,
            const std::vector<std::vector<double>>& targets);

struct Gradients {
  std::vector<Tensor> conv1_kernels;
  std::vector<double> conv1_bias;
  std::vector<std::vector<Tensor>> conv2_kernels;
  std::vector<double> conv2_bias;
  std::vector<double> pool1_beta, pool1_b;
  std::vector<double> pool2_beta, pool2_b;
  Tensor out_weights;
  std::vector<double> out_bias;
};

Gradients zero_gradients(const NetworkConfig& config);

// Gradient of the batch loss above with respect to every parameter.
// Traces and targets are parallel arrays; targets are one-hot rows.
Gradients backward(const Network& net, const std::vector<ForwardTrace>& traces,
                   const std::vector<std::vector<double>>& targets);

// theta <- theta - alpha * grad
void sgd_step(Network& net, const Gradients& grads, double alpha);

// Fraction of samples with argmax(output) == label; ties -> lowest index.
double evaluate(const Network& net, const Dataset& test_set);

// Flat binary checkpoint: magic, version, config, parameters in
// declaration order as 64-bit little-endian floats.
void save_network(const Network& net, const std::string& path);
Network load_network(const std::string& path);

}  // namespace mhcnn
