#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mhcnn/dataset.hpp"
#include "mhcnn/metaheuristic.hpp"
#include "mhcnn/network.hpp"

namespace mhcnn {

enum class Method { CNN, CNNSA, CNNDE, CNNHS };

Method method_from_name(const std::string& name);
std::string method_name(Method method);

enum class RefineCadence { PerBatch, PerEpoch };

struct HybridConfig {
  Method method = Method::CNN;
  NetworkConfig design;
  SaConfig sa;
  DeConfig de;
  HsConfig hs;  // bounds filled per refinement around the current solution
  // Half-width of the random-branch box around the current solution. Values
  // near the weight scale keep the uniform draws from wrecking generalization.
  double hs_bound_halfwidth = 0.02;
  Perturbation perturbation;  // scale = delta_scale, mode per config
  double alpha = 1.0;
  int batch_size = 100;
  int epochs = 1;
  std::uint64_t seed = 0;
  RefineCadence cadence = RefineCadence::PerBatch;
};

struct EpochMetrics {
  std::string method;
  int epoch = 0;
  double train_loss = 0.0;        // mean per-batch loss before each update
  double test_accuracy_pct = 0.0;
  double wall_time_s = 0.0;
  std::uint64_t seed = 0;
};

struct RunMetrics {
  std::vector<EpochMetrics> epochs;
};

// Final-layer round trip: out_weights row-major, then out_bias.
std::vector<double> extract_solution(const Network& net);
void write_back(Network& net, const std::vector<double>& x);

// Batch loss as a function of the final-layer solution vector, reusing
// cached pre-final-layer features. Matches a full forward to 1e-12.
class BatchObjective {
 public:
  BatchObjective(const NetworkConfig& config, std::vector<std::vector<double>> features,
                 std::vector<std::vector<double>> targets);

  double operator()(const std::vector<double>& x) const;

  std::size_t batch_size() const noexcept { return features_.size(); }

 private:
  NetworkConfig config_;
  std::vector<std::vector<double>> features_;
  std::vector<std::vector<double>> targets_;
};

// Runs the configured engine on the batch objective starting from the
// network's current final layer and writes back the best solution.
// Returns the engine's best fitness. Exposed for tests.
double refine_final_layer(Network& net, const BatchObjective& objective,
                          const HybridConfig& config, Rng& rng);

// Minibatch SGD with optional per-batch metaheuristic refinement of the
// final layer; evaluates on test_set after every epoch. When final_net is
// non-null the trained network is copied out for checkpointing.
RunMetrics train(const HybridConfig& config, const Dataset& train_set,
                 const Dataset& test_set, Network* final_net = nullptr);

}  // namespace mhcnn
