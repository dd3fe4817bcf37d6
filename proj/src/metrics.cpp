#include "mhcnn/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "mhcnn/errors.hpp"

namespace mhcnn {

namespace {

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream is(line);
  while (std::getline(is, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.push_back("");
  return fields;
}

double parse_double(const std::string& s, const std::string& context) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw DataError(context + ": cannot parse number '" + s + "'");
  }
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError(path + ": cannot open for writing");
  return out;
}

}  // namespace

void write_raw_csv(const std::string& path, const std::vector<EpochRecord>& rows) {
  std::ofstream out = open_out(path);
  out << kRawCsvHeader << '\n';
  for (const EpochRecord& r : rows) {
    out << r.design << ',' << r.method << ',' << r.epoch << ',' << r.seed << ','
        << fmt_double(r.train_loss) << ',' << fmt_double(r.accuracy_pct) << ','
        << fmt_double(r.time_s) << '\n';
  }
  if (!out) throw DataError(path + ": write failed");
}

std::vector<EpochRecord> read_raw_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError(path + ": cannot open file");
  std::string line;
  if (!std::getline(in, line)) throw DataError(path + ": empty file, expected header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kRawCsvHeader) {
    throw DataError(path + ": schema mismatch, expected header '" + kRawCsvHeader +
                    "', got '" + line + "'");
  }
  std::vector<EpochRecord> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    const std::string where = path + ":" + std::to_string(lineno);
    if (fields.size() != 7) {
      throw DataError(where + ": expected 7 fields, got " + std::to_string(fields.size()));
    }
    EpochRecord r;
    r.design = fields[0];
    r.method = fields[1];
    r.epoch = static_cast<int>(parse_double(fields[2], where));
    r.seed = static_cast<std::uint64_t>(parse_double(fields[3], where));
    r.train_loss = parse_double(fields[4], where);
    r.accuracy_pct = parse_double(fields[5], where);
    r.time_s = parse_double(fields[6], where);
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<AggregateRow> aggregate(const std::vector<EpochRecord>& rows) {
  // Group key ordered by first appearance, epochs ascending inside.
  std::vector<std::pair<std::string, std::string>> group_order;
  std::map<std::pair<std::string, std::string>, std::map<int, std::vector<const EpochRecord*>>>
      groups;
  for (const EpochRecord& r : rows) {
    const auto key = std::make_pair(r.design, r.method);
    if (groups.find(key) == groups.end()) group_order.push_back(key);
    groups[key][r.epoch].push_back(&r);
  }

  auto mean_std = [](const std::vector<double>& xs) {
    const double n = double(xs.size());
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= n;
    double var = 0.0;
    if (xs.size() > 1) {
      for (double x : xs) var += (x - mean) * (x - mean);
      var /= n - 1.0;
    }
    return std::make_pair(mean, std::sqrt(var));
  };

  std::vector<AggregateRow> out;
  for (const auto& key : group_order) {
    for (const auto& [epoch, members] : groups[key]) {
      std::vector<double> accs, times;
      for (const EpochRecord* r : members) {
        accs.push_back(r->accuracy_pct);
        times.push_back(r->time_s);
      }
      AggregateRow a;
      a.design = key.first;
      a.method = key.second;
      a.epoch = epoch;
      a.n_runs = static_cast<int>(members.size());
      std::tie(a.acc_mean, a.acc_std) = mean_std(accs);
      std::tie(a.time_mean, a.time_std) = mean_std(times);
      out.push_back(std::move(a));
    }
  }
  return out;
}

void write_aggregate_csv(const std::string& path, const std::vector<AggregateRow>& rows) {
  std::ofstream out = open_out(path);
  out << kAggregateCsvHeader << '\n';
  for (const AggregateRow& r : rows) {
    out << r.design << ',' << r.method << ',' << r.epoch << ',' << r.n_runs << ','
        << fmt_double(r.acc_mean) << ',' << fmt_double(r.acc_std) << ','
        << fmt_double(r.time_mean) << ',' << fmt_double(r.time_std) << '\n';
  }
  if (!out) throw DataError(path + ": write failed");
}

std::vector<PlotRow> emit_plotdata(const std::vector<EpochRecord>& rows) {
  std::vector<PlotRow> out;
  for (const AggregateRow& a : aggregate(rows)) {
    PlotRow p;
    p.design = a.design;
    p.method = a.method;
    p.epoch = a.epoch;
    p.error_mean = 100.0 - a.acc_mean;
    p.error_std = a.acc_std;  // std is invariant under the complement
    p.time_mean = a.time_mean;
    p.time_std = a.time_std;
    out.push_back(std::move(p));
  }
  return out;
}

void write_plot_csv(const std::string& path, const std::vector<PlotRow>& rows) {
  std::ofstream out = open_out(path);
  out << kPlotCsvHeader << '\n';
  for (const PlotRow& r : rows) {
    out << r.design << ',' << r.method << ',' << r.epoch << ',' << fmt_double(r.error_mean)
        << ',' << fmt_double(r.error_std) << ',' << fmt_double(r.time_mean) << ','
        << fmt_double(r.time_std) << '\n';
  }
  if (!out) throw DataError(path + ": write failed");
}

}  // namespace mhcnn
