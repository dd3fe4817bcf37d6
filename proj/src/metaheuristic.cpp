#include "mhcnn/metaheuristic.hpp"

#include <cmath>
#include <sstream>
#include <string>

#include "mhcnn/errors.hpp"

namespace mhcnn {

namespace {

double checked_eval(const Objective& objective, const std::vector<double>& x,
                    long long& evaluations) {
  const double fx = objective(x);
  ++evaluations;
  if (!std::isfinite(fx)) {
    std::ostringstream os;
    os << "objective returned non-finite value at x = [";
    for (std::size_t i = 0; i < x.size() && i < 8; ++i) {
      if (i) os << ", ";
      os << x[i];
    }
    if (x.size() > 8) os << ", ...";
    os << "]";
    throw NumericError(os.str());
  }
  return fx;
}

void require_same_dim(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw DimensionError(std::string(what) + ": dimension mismatch " + std::to_string(a) +
                         " vs " + std::to_string(b));
  }
}

}  // namespace

std::vector<double> perturb(const std::vector<double>& x, const Perturbation& p, Rng& rng) {
  std::vector<double> out = x;
  for (double& v : out) v += p.sample(rng);
  return out;
}

bool sa_accept(double delta_e, double t, double k, double u) {
  if (t <= 0.0) throw ConfigError("sa_accept requires temperature > 0");
  if (k <= 0.0) throw ConfigError("sa_accept requires k > 0");
  if (delta_e <= 0.0) return true;
  return u < std::exp(-delta_e / (k * t));
}

RunResult sa_run(const Objective& objective, const std::vector<double>& x0,
                 const SaConfig& cfg, const Perturbation& perturbation, Rng& rng) {
  if (x0.empty()) throw ConfigError("sa_run requires dimension >= 1");
  if (cfg.t0 <= 0.0 || cfg.c <= 0.0 || cfg.c >= 1.0 || cfg.k <= 0.0 ||
      cfg.neighborhood_size < 1 || cfg.max_iter < 0) {
    throw ConfigError("invalid SA config");
  }

  RunResult result;
  std::vector<double> current = x0;
  double f_current = checked_eval(objective, current, result.evaluations);
  result.best = current;
  result.best_fitness = f_current;
  result.history.push_back({0, result.best_fitness, f_current});

  double temperature = cfg.t0;
  for (int iter = 1; iter <= cfg.max_iter; ++iter) {
    for (int n = 0; n < cfg.neighborhood_size; ++n) {
      std::vector<double> candidate = perturb(current, perturbation, rng);
      const double f_candidate = checked_eval(objective, candidate, result.evaluations);
      const double delta_e = f_candidate - f_current;
      if (sa_accept(delta_e, temperature, cfg.k, rng.uniform())) {
        current = std::move(candidate);
        f_current = f_candidate;
        if (f_current < result.best_fitness) {
          result.best = current;
          result.best_fitness = f_current;
        }
      }
    }
    temperature *= cfg.c;
    result.history.push_back({iter, result.best_fitness, f_current});
    if (cfg.loss_threshold && result.best_fitness < *cfg.loss_threshold) break;
  }
  result.final_temperature = temperature;
  return result;
}

std::array<std::size_t, 3> de_pick_parents(std::size_t pop_size, std::size_t target, Rng& rng) {
  if (pop_size < 4) throw ConfigError("parent selection needs population >= 4");
  std::size_t r1, r2, r3;
  do r1 = rng.uniform_index(pop_size); while (r1 == target);
  do r2 = rng.uniform_index(pop_size); while (r2 == target || r2 == r1);
  do r3 = rng.uniform_index(pop_size); while (r3 == target || r3 == r1 || r3 == r2);
  return {r1, r2, r3};
}

std::vector<double> de_mutate(const std::vector<double>& p1, const std::vector<double>& p2,
                              const std::vector<double>& p3, double f) {
  require_same_dim(p1.size(), p2.size(), "de_mutate");
  require_same_dim(p1.size(), p3.size(), "de_mutate");
  std::vector<double> out(p1.size());
  for (std::size_t j = 0; j < out.size(); ++j) out[j] = p1[j] + f * (p2[j] - p3[j]);
  return out;
}

std::vector<double> de_crossover(const std::vector<double>& target,
                                 const std::vector<double>& mutant, double cr, Rng& rng) {
  require_same_dim(target.size(), mutant.size(), "de_crossover");
  const std::size_t j_rand = rng.uniform_index(target.size());
  std::vector<double> trial = target;
  for (std::size_t j = 0; j < trial.size(); ++j) {
    if (rng.uniform() < cr || j == j_rand) trial[j] = mutant[j];
  }
  return trial;
}

RunResult de_run(const Objective& objective, const DeConfig& cfg,
                 const std::vector<std::vector<double>>& init_population, Rng& rng) {
  if (cfg.pop_size < 4) throw ConfigError("DE population must be >= 4");
  if (init_population.size() != std::size_t(cfg.pop_size)) {
    throw ConfigError("initial population size " + std::to_string(init_population.size()) +
                      " does not match configured " + std::to_string(cfg.pop_size));
  }
  if (cfg.cr < 0.0 || cfg.cr > 1.0) throw ConfigError("DE crossover rate must be in [0,1]");

  RunResult result;
  std::vector<std::vector<double>> population = init_population;
  std::vector<double> fitness(population.size());
  for (std::size_t i = 0; i < population.size(); ++i) {
    require_same_dim(population[i].size(), population[0].size(), "de_run population");
    fitness[i] = checked_eval(objective, population[i], result.evaluations);
  }

  auto record = [&](int generation) {
    std::size_t best = 0, worst = 0;
    for (std::size_t i = 1; i < fitness.size(); ++i) {
      if (fitness[i] < fitness[best]) best = i;
      if (fitness[i] > fitness[worst]) worst = i;
    }
    if (fitness[best] < result.best_fitness) {
      result.best = population[best];
      result.best_fitness = fitness[best];
    }
    result.history.push_back({generation, result.best_fitness, fitness[worst]});
  };
  record(0);

  const std::size_t pop = population.size();
  for (int gen = 1; gen <= cfg.max_iter; ++gen) {
    for (std::size_t i = 0; i < pop; ++i) {
      const auto [r1, r2, r3] = de_pick_parents(pop, i, rng);
      std::vector<double> mutant = de_mutate(population[r1], population[r2], population[r3], cfg.f);
      std::vector<double> trial = de_crossover(population[i], mutant, cfg.cr, rng);
      const double f_trial = checked_eval(objective, trial, result.evaluations);
      if (f_trial <= fitness[i]) {  // offspring wins ties
        population[i] = std::move(trial);
        fitness[i] = f_trial;
      }
    }
    record(gen);
    if (cfg.loss_threshold && result.best_fitness < *cfg.loss_threshold) break;
  }
  return result;
}

std::vector<double> hs_improvise(const std::vector<std::vector<double>>& hm,
                                 const HsConfig& cfg, const Perturbation& pitch, Rng& rng) {
  if (hm.empty()) throw UsageError("hs_improvise on empty harmony memory");
  const std::size_t dim = hm[0].size();
  require_same_dim(cfg.x_min.size(), dim, "hs_improvise bounds");
  require_same_dim(cfg.x_max.size(), dim, "hs_improvise bounds");
  std::vector<double> harmony(dim);
  for (std::size_t j = 0; j < dim; ++j) {
    if (rng.uniform() < cfg.hmcr) {
      harmony[j] = hm[rng.uniform_index(hm.size())][j];
      if (rng.uniform() < cfg.par) harmony[j] += pitch.sample(rng);
    } else {
      harmony[j] = cfg.x_min[j] + rng.uniform() * (cfg.x_max[j] - cfg.x_min[j]);
    }
  }
  return harmony;
}

RunResult hs_run(const Objective& objective, const HsConfig& cfg,
                 const std::vector<std::vector<double>>& init_memory,
                 const Perturbation& pitch, Rng& rng) {
  if (cfg.hm_size < 1) throw ConfigError("harmony memory size must be >= 1");
  if (init_memory.size() != std::size_t(cfg.hm_size)) {
    throw ConfigError("initial memory size " + std::to_string(init_memory.size()) +
                      " does not match configured " + std::to_string(cfg.hm_size));
  }
  if (cfg.hmcr < 0.0 || cfg.hmcr > 1.0 || cfg.par < 0.0 || cfg.par > 1.0) {
    throw ConfigError("HMCR and PAR must be in [0,1]");
  }
  for (std::size_t j = 0; j < cfg.x_min.size(); ++j) {
    if (cfg.x_min[j] > cfg.x_max[j]) throw ConfigError("x_min exceeds x_max at component " +
                                                       std::to_string(j));
  }

  RunResult result;
  std::vector<std::vector<double>> memory = init_memory;
  std::vector<double> fitness(memory.size());
  for (std::size_t i = 0; i < memory.size(); ++i) {
    fitness[i] = checked_eval(objective, memory[i], result.evaluations);
  }

  auto record = [&](int iteration) {
    std::size_t best = 0, worst = 0;
    for (std::size_t i = 1; i < fitness.size(); ++i) {
      if (fitness[i] < fitness[best]) best = i;
      if (fitness[i] > fitness[worst]) worst = i;
    }
    if (fitness[best] < result.best_fitness) {
      result.best = memory[best];
      result.best_fitness = fitness[best];
    }
    result.history.push_back({iteration, result.best_fitness, fitness[worst]});
    return worst;
  };
  std::size_t worst = record(0);

  for (int iter = 1; iter <= cfg.max_iter; ++iter) {
    std::vector<double> harmony = hs_improvise(memory, cfg, pitch, rng);
    const double f_new = checked_eval(objective, harmony, result.evaluations);
    if (f_new < fitness[worst]) {
      memory[worst] = std::move(harmony);
      fitness[worst] = f_new;
    }
    worst = record(iter);
    if (cfg.loss_threshold && result.best_fitness < *cfg.loss_threshold) break;
  }
  return result;
}

}  // namespace mhcnn
