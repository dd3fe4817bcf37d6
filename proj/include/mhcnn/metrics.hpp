#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace mhcnn {

// One raw benchmark row: a single (design, method, seed) run at one epoch.
struct EpochRecord {
  std::string design;
  std::string method;
  int epoch = 0;
  std::uint64_t seed = 0;
  double train_loss = 0.0;
  double accuracy_pct = 0.0;
  double time_s = 0.0;
};

// Mean/std over repeated runs, grouped by (design, method, epoch).
struct AggregateRow {
  std::string design;
  std::string method;
  int epoch = 0;
  int n_runs = 0;
  double acc_mean = 0.0;
  double acc_std = 0.0;
  double time_mean = 0.0;
  double time_std = 0.0;
};

// Error complement of an aggregate row: error = 100 - accuracy.
struct PlotRow {
  std::string design;
  std::string method;
  int epoch = 0;
  double error_mean = 0.0;
  double error_std = 0.0;
  double time_mean = 0.0;
  double time_std = 0.0;
};

// Pinned headers; a mismatch on read is a schema error, never a misparse.
inline constexpr const char* kRawCsvHeader =
    "design,method,epoch,seed,train_loss,accuracy_pct,time_s";
inline constexpr const char* kAggregateCsvHeader =
    "design,method,epoch,n_runs,acc_mean,acc_std,time_mean,time_std";
inline constexpr const char* kPlotCsvHeader =
    "design,method,epoch,error_mean,error_std,time_mean,time_std";

void write_raw_csv(const std::string& path, const std::vector<EpochRecord>& rows);
std::vector<EpochRecord> read_raw_csv(const std::string& path);

// Sample standard deviation (n-1); 0 when n == 1. Groups keep first-seen
// order of (design, method) and ascending epoch within a group.
std::vector<AggregateRow> aggregate(const std::vector<EpochRecord>& rows);
void write_aggregate_csv(const std::string& path, const std::vector<AggregateRow>& rows);

std::vector<PlotRow> emit_plotdata(const std::vector<EpochRecord>& rows);
void write_plot_csv(const std::string& path, const std::vector<PlotRow>& rows);

}  // namespace mhcnn
