#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <unistd.h>

namespace {

namespace fs = std::filesystem;

struct CliFixture {
  std::string cli;
  fs::path data;
  fs::path work;

  CliFixture() {
    const char* cli_env = std::getenv("MHCNN_CLI");
    const char* data_env = std::getenv("MHCNN_DATA");
    REQUIRE_MESSAGE(cli_env != nullptr, "MHCNN_CLI must point at the built binary");
    REQUIRE_MESSAGE(data_env != nullptr, "MHCNN_DATA must point at the IDX data directory");
    cli = cli_env;
    data = data_env;
    work = fs::temp_directory_path() / ("mhcnn_cli_" + std::to_string(::getpid()));
    fs::create_directories(work);
  }
  ~CliFixture() { fs::remove_all(work); }

  // Runs the CLI with the given arguments, captures stdout+stderr, returns
  // the exit code.
  int run(const std::string& args, std::string* output = nullptr) const {
    const std::string log = (work / "last_output.txt").string();
    const std::string cmd = cli + " " + args + " > " + log + " 2>&1";
    const int status = std::system(cmd.c_str());
    if (output) {
      std::ifstream in(log);
      std::stringstream ss;
      ss << in.rdbuf();
      *output = ss.str();
    }
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  std::string dataset_args() const {
    return " --train-images " + (data / "train-images-idx3-ubyte").string() +
           " --train-labels " + (data / "train-labels-idx1-ubyte").string() +
           " --test-images " + (data / "t10k-images-idx3-ubyte").string() +
           " --test-labels " + (data / "t10k-labels-idx1-ubyte").string();
  }

  std::string slurp(const fs::path& p) const {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }
};

}  // namespace

TEST_CASE("unknown method is a usage error that names the valid choices") {
  CliFixture f;
  std::string out;
  const int code = f.run("train --method cnnxx" + f.dataset_args(), &out);
  CHECK(code == 2);
  CHECK(out.find("cnnsa") != std::string::npos);
  CHECK(out.find("cnnde") != std::string::npos);
  CHECK(out.find("cnnhs") != std::string::npos);
}

TEST_CASE("missing subcommand and missing required options exit 2") {
  CliFixture f;
  CHECK(f.run("") == 2);
  CHECK(f.run("train --method cnn") == 2);  // dataset paths are required
}

TEST_CASE("missing dataset file is a data error") {
  CliFixture f;
  std::string out;
  const int code = f.run(
      "train --method cnn --train-images /nonexistent/imgs --train-labels /nonexistent/lbls"
      " --test-images /nonexistent/imgs --test-labels /nonexistent/lbls"
      " --out-dir " + (f.work / "x").string(),
      &out);
  CHECK(code == 3);
  CHECK(out.find("data error") != std::string::npos);
}

TEST_CASE("tiny training run writes one CSV row per epoch plus a checkpoint") {
  CliFixture f;
  const fs::path out_dir = f.work / "train_out";
  std::string out;
  const int code = f.run("train --method cnn --epochs 2 --subset 300 --test-subset 100"
                         " --seed 5 --out-dir " + out_dir.string() + f.dataset_args(),
                         &out);
  REQUIRE_MESSAGE(code == 0, out);
  CHECK(fs::exists(out_dir / "network.bin"));

  const std::string csv = f.slurp(out_dir / "metrics.csv");
  // Header plus exactly one row per epoch.
  int lines = 0;
  for (char c : csv) lines += c == '\n';
  CHECK(lines == 3);
  CHECK(csv.rfind("design,method,epoch,seed,train_loss,accuracy_pct,time_s", 0) == 0);
  CHECK(csv.find("i-6c-2s-12c-2s,CNN,1,5,") != std::string::npos);
  CHECK(csv.find("i-6c-2s-12c-2s,CNN,2,5,") != std::string::npos);
}

TEST_CASE("repeated runs are identical except for timings") {
  CliFixture f;
  const std::string common = "train --method cnnsa --epochs 1 --subset 200 --test-subset 100"
                             " --sa-iters 2 --seed 11" + f.dataset_args();
  const fs::path d1 = f.work / "r1", d2 = f.work / "r2";
  REQUIRE(f.run(common + " --out-dir " + d1.string()) == 0);
  REQUIRE(f.run(common + " --out-dir " + d2.string()) == 0);

  // Strip the final time_s column, then compare byte for byte.
  auto strip_time = [&](const fs::path& p) {
    std::istringstream in(f.slurp(p / "metrics.csv"));
    std::string line, out;
    while (std::getline(in, line)) {
      out += line.substr(0, line.rfind(','));
      out += '\n';
    }
    return out;
  };
  CHECK(strip_time(d1) == strip_time(d2));
  CHECK(f.slurp(d1 / "network.bin") == f.slurp(d2 / "network.bin"));
}

TEST_CASE("bench with a fixed seed aggregates identical repeats") {
  CliFixture f;
  const fs::path out_dir = f.work / "bench_out";
  std::string out;
  const int code = f.run("bench --methods cnn --repeats 2 --seed 3 --seed-policy fixed"
                         " --epochs 1 --subset 200 --test-subset 100 --jobs 2"
                         " --out-dir " + out_dir.string() + f.dataset_args(),
                         &out);
  REQUIRE_MESSAGE(code == 0, out);

  const std::string agg = f.slurp(out_dir / "aggregate.csv");
  CHECK(agg.rfind("design,method,epoch,n_runs,acc_mean,acc_std,time_mean,time_std", 0) == 0);
  CHECK(agg.find("i-6c-2s-12c-2s,CNN,1,2,") != std::string::npos);
  // Same seed twice: zero accuracy spread.
  std::istringstream in(agg);
  std::string line;
  std::getline(in, line);
  std::getline(in, line);
  std::istringstream fields(line);
  std::string field;
  for (int i = 0; i < 6; ++i) std::getline(fields, field, ',');
  CHECK(field == "0");
}

TEST_CASE("emit-plotdata converts raw metrics and rejects other schemas") {
  CliFixture f;
  const fs::path raw = f.work / "raw.csv";
  {
    std::ofstream o(raw);
    o << "design,method,epoch,seed,train_loss,accuracy_pct,time_s\n";
    o << "i-6c-2s-12c-2s,CNN,1,1,0.4,88.12,10\n";
    o << "i-6c-2s-12c-2s,CNN,1,2,0.4,90.12,12\n";
  }
  const fs::path plot = f.work / "plot.csv";
  REQUIRE(f.run("emit-plotdata --input " + raw.string() + " --output " + plot.string()) == 0);
  const std::string got = f.slurp(plot);
  CHECK(got.rfind("design,method,epoch,error_mean,error_std,time_mean,time_std", 0) == 0);
  CHECK(got.find("i-6c-2s-12c-2s,CNN,1,10.8") != std::string::npos);  // 100 - 89.12

  const fs::path wrong = f.work / "wrong.csv";
  {
    std::ofstream o(wrong);
    o << "method,epoch,acc\nCNN,1,90\n";
  }
  std::string out;
  const int code = f.run("emit-plotdata --input " + wrong.string() +
                         " --output " + plot.string(), &out);
  CHECK(code == 2);
  CHECK(out.find("schema mismatch") != std::string::npos);
}
