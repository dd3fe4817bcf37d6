#include "mhcnn/hybrid.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

#include "mhcnn/errors.hpp"

namespace mhcnn {

Method method_from_name(const std::string& name) {
  if (name == "cnn" || name == "CNN") return Method::CNN;
  if (name == "cnnsa" || name == "CNNSA") return Method::CNNSA;
  if (name == "cnnde" || name == "CNNDE") return Method::CNNDE;
  if (name == "cnnhs" || name == "CNNHS") return Method::CNNHS;
  throw ConfigError("unknown method '" + name + "', valid: cnn, cnnsa, cnnde, cnnhs");
}

std::string method_name(Method method) {
  switch (method) {
    case Method::CNN: return "CNN";
    case Method::CNNSA: return "CNNSA";
    case Method::CNNDE: return "CNNDE";
    case Method::CNNHS: return "CNNHS";
  }
  throw ConfigError("invalid method enum value");
}

std::vector<double> extract_solution(const Network& net) {
  std::vector<double> x = net.out_weights.data();
  x.insert(x.end(), net.out_bias.begin(), net.out_bias.end());
  return x;
}

void write_back(Network& net, const std::vector<double>& x) {
  const std::size_t n_weights = net.out_weights.size();
  const std::size_t n_bias = net.out_bias.size();
  if (x.size() != n_weights + n_bias) {
    throw DimensionError("solution dimension " + std::to_string(x.size()) +
                         " does not match final layer size " +
                         std::to_string(n_weights + n_bias));
  }
  std::copy(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(n_weights),
            net.out_weights.data().begin());
  std::copy(x.begin() + static_cast<std::ptrdiff_t>(n_weights), x.end(),
            net.out_bias.begin());
}

BatchObjective::BatchObjective(const NetworkConfig& config,
                               std::vector<std::vector<double>> features,
                               std::vector<std::vector<double>> targets)
    : config_(config), features_(std::move(features)), targets_(std::move(targets)) {
  if (features_.empty()) throw ConfigError("batch objective over an empty batch");
  if (features_.size() != targets_.size()) {
    throw DimensionError("feature/target count mismatch: " + std::to_string(features_.size()) +
                         " vs " + std::to_string(targets_.size()));
  }
  for (const auto& f : features_) {
    if (f.size() != std::size_t(config_.feature_dim())) {
      throw DimensionError("feature dimension " + std::to_string(f.size()) +
                           " does not match config " + std::to_string(config_.feature_dim()));
    }
  }
}

double BatchObjective::operator()(const std::vector<double>& x) const {
  const std::size_t fdim = static_cast<std::size_t>(config_.feature_dim());
  const std::size_t classes = static_cast<std::size_t>(config_.n_classes);
  if (x.size() != classes * fdim + classes) {
    throw DimensionError("solution dimension " + std::to_string(x.size()) +
                         " does not match expected " + std::to_string(classes * fdim + classes));
  }
  const double* weights = x.data();
  const double* bias = x.data() + classes * fdim;

  double sq = 0.0;
  for (std::size_t s = 0; s < features_.size(); ++s) {
    const double* f = features_[s].data();
    for (std::size_t cls = 0; cls < classes; ++cls) {
      double z = bias[cls];
      const double* w = weights + cls * fdim;
      for (std::size_t i = 0; i < fdim; ++i) z += w[i] * f[i];
      const double u = 1.0 / (1.0 + std::exp(-z));
      const double e = targets_[s][cls] - u;
      sq += e * e;
    }
  }
  return 0.5 * std::sqrt(sq / double(features_.size()));
}

double refine_final_layer(Network& net, const BatchObjective& objective,
                          const HybridConfig& config, Rng& rng) {
  std::vector<double> x = extract_solution(net);
  RunResult result;
  switch (config.method) {
    case Method::CNN:
      return objective(x);  // no-op path
    case Method::CNNSA:
      result = sa_run(objective, x, config.sa, config.perturbation, rng);
      break;
    case Method::CNNDE: {
      std::vector<std::vector<double>> population;
      population.reserve(config.de.pop_size);
      population.push_back(x);
      for (int i = 1; i < config.de.pop_size; ++i) {
        population.push_back(perturb(x, config.perturbation, rng));
      }
      result = de_run(objective, config.de, population, rng);
      break;
    }
    case Method::CNNHS: {
      HsConfig hs = config.hs;
      hs.x_min.resize(x.size());
      hs.x_max.resize(x.size());
      for (std::size_t j = 0; j < x.size(); ++j) {
        hs.x_min[j] = x[j] - config.hs_bound_halfwidth;
        hs.x_max[j] = x[j] + config.hs_bound_halfwidth;
      }
      std::vector<std::vector<double>> memory;
      memory.reserve(hs.hm_size);
      memory.push_back(x);
      for (int i = 1; i < hs.hm_size; ++i) {
        memory.push_back(perturb(x, config.perturbation, rng));
      }
      result = hs_run(objective, hs, memory, config.perturbation, rng);
      break;
    }
  }
  write_back(net, result.best);
  return result.best_fitness;
}

RunMetrics train(const HybridConfig& config, const Dataset& train_set,
                 const Dataset& test_set, Network* final_net) {
  if (train_set.empty() || test_set.empty()) {
    throw ConfigError("train/test sets must be non-empty");
  }
  if (config.epochs < 1) throw ConfigError("epochs must be >= 1");
  if (config.perturbation.scale <= 0.0) throw ConfigError("delta_scale must be > 0");
  validate(config.design);

  Network net = init_network(config.design, config.seed);
  Rng engine_rng(derive_seed(config.seed, 1));

  RunMetrics metrics;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto epoch_start = std::chrono::steady_clock::now();
    const BatchPlan plan =
        make_batches(train_set.size(), static_cast<std::size_t>(config.batch_size),
                     derive_seed(config.seed, 1000 + std::uint64_t(epoch)));
    double loss_sum = 0.0;

    for (std::size_t b = 0; b < plan.batch_count(); ++b) {
      const std::vector<std::size_t> indices = plan.batch(b);

      std::vector<ForwardTrace> traces;
      std::vector<std::vector<double>> targets;
      std::vector<std::vector<double>> outputs;
      traces.reserve(indices.size());
      targets.reserve(indices.size());
      outputs.reserve(indices.size());
      for (std::size_t idx : indices) {
        traces.push_back(forward(net, train_set[idx].pixels));
        targets.push_back(one_hot(train_set[idx].label, config.design.n_classes));
        outputs.push_back(traces.back().outputs);
      }
      loss_sum += loss(outputs, targets);

      try {
        const Gradients grads = backward(net, traces, targets);
        sgd_step(net, grads, config.alpha);

        if (config.method != Method::CNN && config.cadence == RefineCadence::PerBatch) {
          // Features below the final layer changed with the SGD step, so
          // recompute them before handing the batch to the engine.
          std::vector<std::vector<double>> features;
          features.reserve(indices.size());
          for (std::size_t idx : indices) {
            features.push_back(forward(net, train_set[idx].pixels).features);
          }
          const BatchObjective objective(config.design, std::move(features), targets);
          refine_final_layer(net, objective, config, engine_rng);
        }
      } catch (const NumericError& err) {
        throw NumericError("epoch " + std::to_string(epoch) + ", batch " + std::to_string(b) +
                           ": " + err.what());
      }
    }

    if (config.method != Method::CNN && config.cadence == RefineCadence::PerEpoch) {
      const BatchPlan tail = make_batches(train_set.size(),
                                          static_cast<std::size_t>(config.batch_size),
                                          derive_seed(config.seed, 2000 + std::uint64_t(epoch)));
      const std::vector<std::size_t> indices = tail.batch(0);
      std::vector<std::vector<double>> features;
      std::vector<std::vector<double>> targets;
      for (std::size_t idx : indices) {
        features.push_back(forward(net, train_set[idx].pixels).features);
        targets.push_back(one_hot(train_set[idx].label, config.design.n_classes));
      }
      const BatchObjective objective(config.design, std::move(features), std::move(targets));
      refine_final_layer(net, objective, config, engine_rng);
    }

    const double accuracy = evaluate(net, test_set);
    const auto epoch_end = std::chrono::steady_clock::now();
    EpochMetrics em;
    em.method = method_name(config.method);
    em.epoch = epoch;
    em.train_loss = loss_sum / double(plan.batch_count());
    em.test_accuracy_pct = 100.0 * accuracy;
    em.wall_time_s = std::chrono::duration<double>(epoch_end - epoch_start).count();
    em.seed = config.seed;
    metrics.epochs.push_back(std::move(em));
  }
  if (final_net != nullptr) *final_net = std::move(net);
  return metrics;
}

}  // namespace mhcnn
