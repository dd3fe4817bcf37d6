// Command-line benchmark harness: single training runs, run matrices over
// methods x designs x repeats, and plot-data emission from raw metrics.

#include <atomic>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <thread>

#include <CLI11.hpp>

#include "mhcnn/dataset.hpp"
#include "mhcnn/errors.hpp"
#include "mhcnn/hybrid.hpp"
#include "mhcnn/metrics.hpp"
#include "mhcnn/network.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitPartialFailure = 1;
constexpr int kExitConfigError = 2;
constexpr int kExitDataError = 3;

struct DatasetOptions {
  std::string train_images, train_labels, test_images, test_labels;
  std::size_t subset = 0;       // 0 = all
  std::size_t test_subset = 0;  // 0 = all
  std::uint64_t subset_seed = 42;
};

struct TrainOptions {
  std::string method = "cnn";
  std::string design = "i-6c-2s-12c-2s";
  int epochs = 1;
  std::uint64_t seed = 0;
  int batch_size = 100;
  double alpha = 1.0;
  double delta_scale = 0.0008;
  std::string perturb_mode = "symmetric";
  std::string cadence = "per-batch";
  double t0 = 1.0;
  double cooling = 0.5;
  int sa_neighborhood = 10;
  int sa_iters = 10;
  int de_pop = 10;
  double de_f = 0.8;
  double de_cr = 0.3;
  int de_iters = 10;
  int hs_size = 10;
  double hs_hmcr = 0.8;
  double hs_par = 0.3;
  int hs_iters = 10;
  double hs_bound = 0.02;
  double loss_threshold = 0.0;  // 0 = disabled
};

void add_dataset_options(CLI::App* cmd, DatasetOptions& opts) {
  cmd->add_option("--train-images", opts.train_images, "IDX training image file")->required();
  cmd->add_option("--train-labels", opts.train_labels, "IDX training label file")->required();
  cmd->add_option("--test-images", opts.test_images, "IDX test image file")->required();
  cmd->add_option("--test-labels", opts.test_labels, "IDX test label file")->required();
  cmd->add_option("--subset", opts.subset, "Train on a seeded subset of this size (0 = all)");
  cmd->add_option("--test-subset", opts.test_subset, "Test subset size (0 = all)");
  cmd->add_option("--subset-seed", opts.subset_seed, "Seed for subset selection");
}

void add_train_options(CLI::App* cmd, TrainOptions& opts) {
  cmd->add_option("--design", opts.design, "Architecture, e.g. i-6c-2s-12c-2s");
  cmd->add_option("--epochs", opts.epochs, "Training epochs")->check(CLI::PositiveNumber);
  cmd->add_option("--seed", opts.seed, "Run seed");
  cmd->add_option("--batch-size", opts.batch_size, "Minibatch size")->check(CLI::PositiveNumber);
  cmd->add_option("--alpha", opts.alpha, "SGD learning rate");
  cmd->add_option("--delta-scale", opts.delta_scale, "Perturbation half-width");
  cmd->add_option("--perturb-mode", opts.perturb_mode, "symmetric|onesided")
      ->check(CLI::IsMember({"symmetric", "onesided"}));
  cmd->add_option("--cadence", opts.cadence, "Refinement cadence: per-batch|per-epoch")
      ->check(CLI::IsMember({"per-batch", "per-epoch"}));
  cmd->add_option("--t0", opts.t0, "SA initial temperature");
  cmd->add_option("--cooling", opts.cooling, "SA geometric cooling factor");
  cmd->add_option("--sa-neighborhood", opts.sa_neighborhood, "SA neighbors per temperature");
  cmd->add_option("--sa-iters", opts.sa_iters, "SA outer iterations");
  cmd->add_option("--de-pop", opts.de_pop, "DE population size");
  cmd->add_option("--de-f", opts.de_f, "DE mutation factor");
  cmd->add_option("--de-cr", opts.de_cr, "DE crossover rate");
  cmd->add_option("--de-iters", opts.de_iters, "DE generations");
  cmd->add_option("--hs-size", opts.hs_size, "HS harmony memory size");
  cmd->add_option("--hs-hmcr", opts.hs_hmcr, "HS memory consideration rate");
  cmd->add_option("--hs-par", opts.hs_par, "HS pitch adjusting rate");
  cmd->add_option("--hs-iters", opts.hs_iters, "HS improvisations");
  cmd->add_option("--hs-bound", opts.hs_bound, "HS bound half-width around current solution");
  cmd->add_option("--loss-threshold", opts.loss_threshold,
                  "Stop an engine early below this batch loss (0 = disabled)");
}

mhcnn::HybridConfig build_config(const TrainOptions& opts, const std::string& method,
                                 std::uint64_t seed) {
  mhcnn::HybridConfig config;
  config.method = mhcnn::method_from_name(method);
  config.design = mhcnn::design_from_name(opts.design);
  config.epochs = opts.epochs;
  config.seed = seed;
  config.batch_size = opts.batch_size;
  config.alpha = opts.alpha;
  config.perturbation.scale = opts.delta_scale;
  config.perturbation.mode = opts.perturb_mode == "onesided"
                                 ? mhcnn::PerturbMode::OneSided
                                 : mhcnn::PerturbMode::Symmetric;
  config.cadence = opts.cadence == "per-epoch" ? mhcnn::RefineCadence::PerEpoch
                                               : mhcnn::RefineCadence::PerBatch;
  config.sa.t0 = opts.t0;
  config.sa.c = opts.cooling;
  config.sa.neighborhood_size = opts.sa_neighborhood;
  config.sa.max_iter = opts.sa_iters;
  config.de.pop_size = opts.de_pop;
  config.de.f = opts.de_f;
  config.de.cr = opts.de_cr;
  config.de.max_iter = opts.de_iters;
  config.hs.hm_size = opts.hs_size;
  config.hs.hmcr = opts.hs_hmcr;
  config.hs.par = opts.hs_par;
  config.hs.max_iter = opts.hs_iters;
  config.hs_bound_halfwidth = opts.hs_bound;
  if (opts.loss_threshold > 0.0) {
    config.sa.loss_threshold = opts.loss_threshold;
    config.de.loss_threshold = opts.loss_threshold;
    config.hs.loss_threshold = opts.loss_threshold;
  }
  return config;
}

struct LoadedData {
  mhcnn::Dataset train, test;
};

LoadedData load_data(const DatasetOptions& opts) {
  LoadedData data;
  data.train = mhcnn::load_dataset(opts.train_images, opts.train_labels);
  data.test = mhcnn::load_dataset(opts.test_images, opts.test_labels);
  if (opts.subset > 0) data.train = mhcnn::subset(data.train, opts.subset, opts.subset_seed);
  if (opts.test_subset > 0) {
    data.test = mhcnn::subset(data.test, opts.test_subset, opts.subset_seed + 1);
  }
  return data;
}

std::vector<mhcnn::EpochRecord> to_records(const std::string& design,
                                           const mhcnn::RunMetrics& metrics) {
  std::vector<mhcnn::EpochRecord> rows;
  for (const mhcnn::EpochMetrics& em : metrics.epochs) {
    mhcnn::EpochRecord r;
    r.design = design;
    r.method = em.method;
    r.epoch = em.epoch;
    r.seed = em.seed;
    r.train_loss = em.train_loss;
    r.accuracy_pct = em.test_accuracy_pct;
    r.time_s = em.wall_time_s;
    rows.push_back(std::move(r));
  }
  return rows;
}

int cmd_train(const DatasetOptions& data_opts, const TrainOptions& train_opts,
              const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  const LoadedData data = load_data(data_opts);
  const mhcnn::HybridConfig config = build_config(train_opts, train_opts.method, train_opts.seed);
  mhcnn::Network final_net;
  const mhcnn::RunMetrics metrics = mhcnn::train(config, data.train, data.test, &final_net);

  const std::string csv_path = out_dir + "/metrics.csv";
  mhcnn::write_raw_csv(csv_path, to_records(train_opts.design, metrics));
  mhcnn::save_network(final_net, out_dir + "/network.bin");

  std::cout << "wrote " << csv_path << " and " << out_dir << "/network.bin\n";
  for (const mhcnn::EpochMetrics& em : metrics.epochs) {
    std::cout << em.method << " epoch " << em.epoch << ": loss " << em.train_loss
              << ", accuracy " << em.test_accuracy_pct << "%, " << em.wall_time_s << "s\n";
  }
  return kExitOk;
}

struct BenchTask {
  std::string design;
  std::string method;
  std::uint64_t seed = 0;
};

int cmd_bench(const DatasetOptions& data_opts, const TrainOptions& train_opts,
              const std::vector<std::string>& methods, const std::vector<std::string>& designs,
              int repeats, const std::string& seed_policy, int jobs,
              const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  const LoadedData data = load_data(data_opts);

  std::vector<BenchTask> tasks;
  std::uint64_t run_index = 0;
  for (const std::string& design : designs) {
    for (const std::string& method : methods) {
      for (int rep = 0; rep < repeats; ++rep) {
        const std::uint64_t seed =
            seed_policy == "fixed" ? train_opts.seed : train_opts.seed + run_index;
        tasks.push_back({design, method, seed});
        ++run_index;
      }
    }
  }

  std::vector<std::vector<mhcnn::EpochRecord>> results(tasks.size());
  std::vector<std::string> failures(tasks.size());
  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;

  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= tasks.size()) return;
      const BenchTask& task = tasks[i];
      try {
        TrainOptions opts = train_opts;
        opts.design = task.design;
        const mhcnn::HybridConfig config = build_config(opts, task.method, task.seed);
        const mhcnn::RunMetrics metrics = mhcnn::train(config, data.train, data.test);
        results[i] = to_records(task.design, metrics);
        std::lock_guard<std::mutex> lock(log_mutex);
        std::cout << "done: " << task.design << " " << task.method << " seed " << task.seed
                  << '\n';
      } catch (const std::exception& err) {
        failures[i] = err.what();
        std::lock_guard<std::mutex> lock(log_mutex);
        std::cerr << "failed: " << task.design << " " << task.method << " seed " << task.seed
                  << ": " << err.what() << '\n';
      }
    }
  };

  const int n_threads = std::max(1, std::min<int>(jobs, static_cast<int>(tasks.size())));
  std::vector<std::thread> pool;
  for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  for (std::thread& t : pool) t.join();

  std::vector<mhcnn::EpochRecord> raw;
  bool any_failed = false;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    if (!failures[i].empty()) {
      any_failed = true;
      continue;
    }
    raw.insert(raw.end(), results[i].begin(), results[i].end());
  }

  mhcnn::write_raw_csv(out_dir + "/raw.csv", raw);
  mhcnn::write_aggregate_csv(out_dir + "/aggregate.csv", mhcnn::aggregate(raw));
  std::cout << "wrote " << out_dir << "/raw.csv and " << out_dir << "/aggregate.csv\n";
  return any_failed ? kExitPartialFailure : kExitOk;
}

int cmd_emit_plotdata(const std::string& input, const std::string& output) {
  std::vector<mhcnn::EpochRecord> rows;
  try {
    rows = mhcnn::read_raw_csv(input);
  } catch (const mhcnn::DataError& err) {
    // Schema problems in the input are configuration errors for this command.
    std::cerr << "config error: " << err.what() << '\n';
    return kExitConfigError;
  }
  mhcnn::write_plot_csv(output, mhcnn::emit_plotdata(rows));
  std::cout << "wrote " << output << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"CNN training with metaheuristic final-layer refinement"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Flat key=value config file; flags override");

  DatasetOptions data_opts;
  TrainOptions train_opts;
  std::string out_dir = "out";

  CLI::App* train = app.add_subcommand("train", "Run one training configuration");
  train->add_option("--method", train_opts.method, "cnn|cnnsa|cnnde|cnnhs")
      ->check(CLI::IsMember({"cnn", "cnnsa", "cnnde", "cnnhs"}));
  add_dataset_options(train, data_opts);
  add_train_options(train, train_opts);
  train->add_option("--out-dir", out_dir, "Output directory");

  std::vector<std::string> methods{"cnn", "cnnsa", "cnnde", "cnnhs"};
  std::vector<std::string> designs{"i-6c-2s-12c-2s"};
  int repeats = 5;
  int jobs = 1;
  std::string seed_policy = "vary";

  CLI::App* bench = app.add_subcommand("bench", "Run a methods x designs x repeats matrix");
  bench->add_option("--methods", methods, "Methods to benchmark")
      ->check(CLI::IsMember({"cnn", "cnnsa", "cnnde", "cnnhs"}));
  bench->add_option("--designs", designs, "Designs to benchmark");
  bench->add_option("--repeats", repeats, "Repeated runs per cell")->check(CLI::PositiveNumber);
  bench->add_option("--seed-policy", seed_policy, "vary: base_seed + run index; fixed: base_seed")
      ->check(CLI::IsMember({"vary", "fixed"}));
  bench->add_option("--jobs", jobs, "Parallel runs")->check(CLI::PositiveNumber);
  add_dataset_options(bench, data_opts);
  add_train_options(bench, train_opts);
  bench->add_option("--out-dir", out_dir, "Output directory");

  std::string plot_input, plot_output = "plot.csv";
  CLI::App* plot = app.add_subcommand("emit-plotdata", "Convert raw metrics to plot-ready CSV");
  plot->add_option("--input", plot_input, "Raw metrics CSV")->required();
  plot->add_option("--output", plot_output, "Output CSV path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfigError;
  }

  try {
    if (train->parsed()) return cmd_train(data_opts, train_opts, out_dir);
    if (bench->parsed()) {
      return cmd_bench(data_opts, train_opts, methods, designs, repeats, seed_policy, jobs,
                       out_dir);
    }
    return cmd_emit_plotdata(plot_input, plot_output);
  } catch (const mhcnn::ConfigError& err) {
    std::cerr << "config error: " << err.what() << '\n';
    return kExitConfigError;
  } catch (const mhcnn::DataError& err) {
    std::cerr << "data error: " << err.what() << '\n';
    return kExitDataError;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kExitPartialFailure;
  }
}
