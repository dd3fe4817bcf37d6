#pragma once

#include <array>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include "mhcnn/rng.hpp"

namespace mhcnn {

// Minimization objective over a flat real vector.
using Objective = std::function<double(const std::vector<double>&)>;

enum class PerturbMode { Symmetric, OneSided };

// Perturbation contract shared by SA neighbors, HS pitch adjustment and
// population/memory seeding:
//   Symmetric: x'[j] = x[j] + scale * (2u - 1), |x'-x| <= scale per component
//   OneSided:  x'[j] = x[j] + scale * u        (literal one-sided kick)
struct Perturbation {
  double scale = 0.0008;
  PerturbMode mode = PerturbMode::Symmetric;

  double sample(Rng& rng) const {
    const double u = rng.uniform();
    return mode == PerturbMode::Symmetric ? scale * (2.0 * u - 1.0) : scale * u;
  }
};

std::vector<double> perturb(const std::vector<double>& x, const Perturbation& p, Rng& rng);

struct SaConfig {
  double t0 = 1.0;             // initial temperature
  double c = 0.5;              // geometric cooling factor, in (0,1)
  double k = 1.0;              // Boltzmann-like constant
  int neighborhood_size = 10;  // candidates per temperature level
  int max_iter = 10;           // outer (cooling) iterations
  std::optional<double> loss_threshold;  // optional early stop
};

struct DeConfig {
  int pop_size = 10;
  double f = 0.8;   // mutation factor
  double cr = 0.3;  // crossover rate
  int max_iter = 10;
  std::optional<double> loss_threshold;
};

struct HsConfig {
  int hm_size = 10;
  double hmcr = 0.8;
  double par = 0.3;
  int max_iter = 10;
  std::vector<double> x_min, x_max;  // per-dimension bounds
  std::optional<double> loss_threshold;
};

// Accepts improving moves always; worsening moves with probability
// exp(-delta_e / (k*t)) compared against the uniform draw u.
bool sa_accept(double delta_e, double t, double k, double u);

struct HistoryRecord {
  int iteration = 0;
  double best_fitness = 0.0;
  // Current fitness for SA, population/memory worst for DE and HS.
  double aux_fitness = 0.0;
};

struct RunResult {
  std::vector<double> best;
  double best_fitness = std::numeric_limits<double>::infinity();
  std::vector<HistoryRecord> history;
  long long evaluations = 0;
  // Set by sa_run only.
  double final_temperature = std::numeric_limits<double>::quiet_NaN();
};

RunResult sa_run(const Objective& objective, const std::vector<double>& x0,
                 const SaConfig& cfg, const Perturbation& perturbation, Rng& rng);

// Three mutually distinct population indices, none equal to target.
// Requires pop_size >= 4.
std::array<std::size_t, 3> de_pick_parents(std::size_t pop_size, std::size_t target, Rng& rng);

// DE/rand/1 mutation: p1 + f * (p2 - p3), componentwise.
std::vector<double> de_mutate(const std::vector<double>& p1, const std::vector<double>& p2,
                              const std::vector<double>& p3, double f);

// Binomial crossover with a forced component j_rand, so the trial always
// inherits at least one mutant component.
std::vector<double> de_crossover(const std::vector<double>& target,
                                 const std::vector<double>& mutant, double cr, Rng& rng);

RunResult de_run(const Objective& objective, const DeConfig& cfg,
                 const std::vector<std::vector<double>>& init_population, Rng& rng);

// One new harmony: per component, memory consideration with probability
// hmcr (then pitch adjustment with probability par), else a uniform draw
// in [x_min, x_max].
std::vector<double> hs_improvise(const std::vector<std::vector<double>>& hm,
                                 const HsConfig& cfg, const Perturbation& pitch, Rng& rng);

RunResult hs_run(const Objective& objective, const HsConfig& cfg,
                 const std::vector<std::vector<double>>& init_memory,
                 const Perturbation& pitch, Rng& rng);

}  // namespace mhcnn
