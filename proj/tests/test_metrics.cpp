#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include <unistd.h>

#include "mhcnn/errors.hpp"
#include "mhcnn/metrics.hpp"

using namespace mhcnn;

namespace {

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("mhcnn_metrics_" + std::to_string(::getpid()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string file(const char* name) const { return (path / name).string(); }
};

std::vector<EpochRecord> bench_fixture() {
  // 2 methods x 1 design x 5 seeds x 1 epoch = 10 raw rows, 2 aggregate rows.
  std::vector<EpochRecord> rows;
  const double acc_a[5] = {88.12, 90.0, 86.5, 89.25, 91.0};
  const double acc_b[5] = {92.5, 91.75, 93.0, 90.5, 94.25};
  for (int s = 0; s < 5; ++s) {
    rows.push_back({"i-6c-2s-12c-2s", "CNN", 1, std::uint64_t(s + 1), 0.4, acc_a[s],
                    10.0 + s});
    rows.push_back({"i-6c-2s-12c-2s", "CNNSA", 1, std::uint64_t(s + 1), 0.35, acc_b[s],
                    18.0 + s});
  }
  return rows;
}

double mean_of(const double* v, int n) {
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += v[i];
  return s / n;
}

double sample_std_of(const double* v, int n) {
  const double m = mean_of(v, n);
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += (v[i] - m) * (v[i] - m);
  return std::sqrt(s / (n - 1));
}

}  // namespace

TEST_CASE("raw CSV round trip preserves every field exactly") {
  TempDir tmp;
  std::vector<EpochRecord> rows = bench_fixture();
  rows[0].train_loss = 0.123456789012345678;  // not representable in short decimal
  write_raw_csv(tmp.file("raw.csv"), rows);

  std::vector<EpochRecord> loaded = read_raw_csv(tmp.file("raw.csv"));
  REQUIRE(loaded.size() == rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(loaded[i].design == rows[i].design);
    CHECK(loaded[i].method == rows[i].method);
    CHECK(loaded[i].epoch == rows[i].epoch);
    CHECK(loaded[i].seed == rows[i].seed);
    CHECK(loaded[i].train_loss == rows[i].train_loss);
    CHECK(loaded[i].accuracy_pct == rows[i].accuracy_pct);
    CHECK(loaded[i].time_s == rows[i].time_s);
  }
}

TEST_CASE("writing the same rows twice gives byte-identical files") {
  TempDir tmp;
  const std::vector<EpochRecord> rows = bench_fixture();
  write_raw_csv(tmp.file("a.csv"), rows);
  write_raw_csv(tmp.file("b.csv"), rows);
  std::ifstream a(tmp.file("a.csv")), b(tmp.file("b.csv"));
  std::string sa((std::istreambuf_iterator<char>(a)), std::istreambuf_iterator<char>());
  std::string sb((std::istreambuf_iterator<char>(b)), std::istreambuf_iterator<char>());
  CHECK(sa == sb);
  CHECK(sa.rfind(kRawCsvHeader, 0) == 0);
}

TEST_CASE("schema mismatch is rejected with both headers named") {
  TempDir tmp;
  std::ofstream out(tmp.file("wrong.csv"));
  out << "design,method,epoch,accuracy\n1,2,3,4\n";
  out.close();
  try {
    read_raw_csv(tmp.file("wrong.csv"));
    FAIL("expected DataError");
  } catch (const DataError& err) {
    const std::string msg = err.what();
    CHECK(msg.find(kRawCsvHeader) != std::string::npos);
    CHECK(msg.find("design,method,epoch,accuracy") != std::string::npos);
  }
  CHECK_THROWS_AS(read_raw_csv(tmp.file("missing.csv")), DataError);
}

TEST_CASE("malformed rows are rejected") {
  TempDir tmp;
  std::ofstream out(tmp.file("bad.csv"));
  out << kRawCsvHeader << "\n";
  out << "i-6c-2s-12c-2s,CNN,1,1,0.4,not_a_number,10\n";
  out.close();
  CHECK_THROWS_AS(read_raw_csv(tmp.file("bad.csv")), DataError);
}

TEST_CASE("aggregate matches an independent recomputation") {
  const std::vector<EpochRecord> rows = bench_fixture();
  const std::vector<AggregateRow> agg = aggregate(rows);
  REQUIRE(agg.size() == 2);

  const double acc_a[5] = {88.12, 90.0, 86.5, 89.25, 91.0};
  const double acc_b[5] = {92.5, 91.75, 93.0, 90.5, 94.25};
  const double time_a[5] = {10, 11, 12, 13, 14};

  CHECK(agg[0].design == "i-6c-2s-12c-2s");
  CHECK(agg[0].method == "CNN");  // first-seen group order
  CHECK(agg[0].epoch == 1);
  CHECK(agg[0].n_runs == 5);
  CHECK(agg[0].acc_mean == doctest::Approx(mean_of(acc_a, 5)).epsilon(1e-9));
  CHECK(agg[0].acc_std == doctest::Approx(sample_std_of(acc_a, 5)).epsilon(1e-9));
  CHECK(agg[0].time_mean == doctest::Approx(mean_of(time_a, 5)).epsilon(1e-9));
  CHECK(agg[0].time_std == doctest::Approx(sample_std_of(time_a, 5)).epsilon(1e-9));

  CHECK(agg[1].method == "CNNSA");
  CHECK(agg[1].acc_mean == doctest::Approx(mean_of(acc_b, 5)).epsilon(1e-9));
  CHECK(agg[1].acc_std == doctest::Approx(sample_std_of(acc_b, 5)).epsilon(1e-9));
}

TEST_CASE("aggregate of a single run has zero std") {
  std::vector<EpochRecord> rows{{"i-6c-2s-12c-2s", "CNN", 1, 1, 0.5, 77.0, 9.0}};
  const std::vector<AggregateRow> agg = aggregate(rows);
  REQUIRE(agg.size() == 1);
  CHECK(agg[0].n_runs == 1);
  CHECK(agg[0].acc_mean == 77.0);
  CHECK(agg[0].acc_std == 0.0);
  CHECK(agg[0].time_std == 0.0);
}

TEST_CASE("aggregate keeps epochs separate and ascending within a group") {
  std::vector<EpochRecord> rows;
  for (int epoch = 2; epoch >= 1; --epoch) {
    for (int s = 1; s <= 2; ++s) {
      rows.push_back({"i-8c-2s-16c-2s", "CNNHS", epoch, std::uint64_t(s), 0.3,
                      80.0 + epoch, 5.0 * epoch});
    }
  }
  const std::vector<AggregateRow> agg = aggregate(rows);
  REQUIRE(agg.size() == 2);
  CHECK(agg[0].epoch == 1);
  CHECK(agg[1].epoch == 2);
  CHECK(agg[0].acc_mean == 81.0);
  CHECK(agg[1].acc_mean == 82.0);
}

TEST_CASE("aggregate of no rows is empty") {
  CHECK(aggregate({}).empty());
  CHECK(emit_plotdata({}).empty());
}

TEST_CASE("plot data is the error complement with the same spread") {
  const std::vector<EpochRecord> rows = bench_fixture();
  const std::vector<AggregateRow> agg = aggregate(rows);
  const std::vector<PlotRow> plot = emit_plotdata(rows);
  REQUIRE(plot.size() == agg.size());
  for (std::size_t i = 0; i < plot.size(); ++i) {
    CHECK(plot[i].error_mean == doctest::Approx(100.0 - agg[i].acc_mean).epsilon(1e-12));
    CHECK(plot[i].error_std == agg[i].acc_std);  // shifting by 100 keeps the std
    CHECK(plot[i].time_mean == agg[i].time_mean);
    CHECK(plot[i].time_std == agg[i].time_std);
  }
  // 88.12% accuracy corresponds to an 11.88% error rate.
  std::vector<EpochRecord> one{{"d", "CNN", 1, 1, 0.1, 88.12, 1.0}};
  CHECK(emit_plotdata(one)[0].error_mean == doctest::Approx(11.88).epsilon(1e-12));
}

TEST_CASE("aggregate and plot CSVs carry their pinned headers") {
  TempDir tmp;
  const std::vector<EpochRecord> rows = bench_fixture();
  write_aggregate_csv(tmp.file("agg.csv"), aggregate(rows));
  write_plot_csv(tmp.file("plot.csv"), emit_plotdata(rows));

  std::ifstream agg(tmp.file("agg.csv")), plot(tmp.file("plot.csv"));
  std::string line;
  std::getline(agg, line);
  CHECK(line == kAggregateCsvHeader);
  std::getline(plot, line);
  CHECK(line == kPlotCsvHeader);
}
