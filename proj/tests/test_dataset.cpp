#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <unistd.h>

#include "mhcnn/dataset.hpp"
#include "mhcnn/errors.hpp"
#include "mhcnn/rng.hpp"

using namespace mhcnn;

namespace {

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("mhcnn_test_" + std::to_string(::getpid()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string file(const char* name) const { return (path / name).string(); }
};

Dataset synthetic_samples(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  Dataset data;
  for (std::size_t i = 0; i < n; ++i) {
    Tensor img({28, 28});
    for (double& v : img.data()) v = double(rng.uniform_index(256)) / 255.0;
    data.push_back({std::move(img), int(rng.uniform_index(10))});
  }
  return data;
}

}  // namespace

TEST_CASE("IDX write/load round trip is byte exact") {
  TempDir tmp;
  Dataset samples = synthetic_samples(23, 11);
  std::vector<Tensor> images;
  std::vector<int> labels;
  for (const auto& s : samples) {
    images.push_back(s.pixels);
    labels.push_back(s.label);
  }
  write_idx_images(tmp.file("imgs"), images);
  write_idx_labels(tmp.file("lbls"), labels);

  Dataset loaded = load_dataset(tmp.file("imgs"), tmp.file("lbls"));
  REQUIRE(loaded.size() == samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    CHECK(loaded[i].label == samples[i].label);
    for (std::size_t p = 0; p < 28 * 28; ++p) {
      // Pixels were generated on the /255 grid, so they survive exactly.
      CHECK(loaded[i].pixels[p] == samples[i].pixels[p]);
    }
  }
}

TEST_CASE("loaded pixels are normalized to [0,1]") {
  TempDir tmp;
  Dataset samples = synthetic_samples(5, 3);
  std::vector<Tensor> images;
  for (const auto& s : samples) images.push_back(s.pixels);
  write_idx_images(tmp.file("imgs"), images);
  for (const Tensor& img : load_idx_images(tmp.file("imgs"))) {
    for (double v : img.data()) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
  }
}

TEST_CASE("bad magic is a format error") {
  TempDir tmp;
  std::ofstream out(tmp.file("bad"), std::ios::binary);
  const char zeros[16] = {};
  out.write(zeros, sizeof zeros);
  out.close();
  CHECK_THROWS_AS(load_idx_images(tmp.file("bad")), DataError);
  CHECK_THROWS_AS(load_idx_labels(tmp.file("bad")), DataError);
}

TEST_CASE("truncated payload names expected and actual byte counts") {
  TempDir tmp;
  Dataset samples = synthetic_samples(4, 5);
  std::vector<Tensor> images;
  for (const auto& s : samples) images.push_back(s.pixels);
  write_idx_images(tmp.file("imgs"), images);
  // Chop off the last image.
  std::filesystem::resize_file(tmp.file("imgs"), 16 + 3 * 28 * 28 + 10);
  try {
    load_idx_images(tmp.file("imgs"));
    FAIL("expected DataError");
  } catch (const DataError& err) {
    const std::string msg = err.what();
    CHECK(msg.find("3136") != std::string::npos);  // expected 4*784
    CHECK(msg.find("2362") != std::string::npos);  // got 3*784 + 10
  }
}

TEST_CASE("non-28x28 images are rejected") {
  TempDir tmp;
  std::ofstream out(tmp.file("odd"), std::ios::binary);
  const unsigned char header[] = {0, 0, 8, 3, 0, 0, 0, 1, 0, 0, 0, 16, 0, 0, 0, 16};
  out.write(reinterpret_cast<const char*>(header), sizeof header);
  for (int i = 0; i < 256; ++i) out.put('\0');
  out.close();
  CHECK_THROWS_AS(load_idx_images(tmp.file("odd")), DataError);
}

TEST_CASE("make_batches counts and drop rule") {
  CHECK(make_batches(600, 100, 1).batch_count() == 6);
  CHECK(make_batches(650, 100, 1).batch_count() == 6);  // 50 dropped
  CHECK_THROWS_AS(make_batches(50, 100, 1), ConfigError);
  CHECK_THROWS_AS(make_batches(50, 0, 1), ConfigError);
}

TEST_CASE("batch plan is a permutation and deterministic") {
  const BatchPlan a = make_batches(257, 16, 99);
  const BatchPlan b = make_batches(257, 16, 99);
  CHECK(a.order == b.order);
  CHECK(make_batches(257, 16, 100).order != a.order);

  std::vector<std::size_t> sorted = a.order;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < sorted.size(); ++i) CHECK(sorted[i] == i);
}

TEST_CASE("subset basics") {
  Dataset data = synthetic_samples(40, 17);
  CHECK(subset(data, 0, 1).empty());
  CHECK_THROWS_AS(subset(data, 41, 1), ConfigError);

  Dataset full = subset(data, 40, 5);
  CHECK(full.size() == 40);
  // Permutation of the full set: every label multiset preserved.
  std::vector<int> la, lb;
  for (const auto& s : data) la.push_back(s.label);
  for (const auto& s : full) lb.push_back(s.label);
  std::sort(la.begin(), la.end());
  std::sort(lb.begin(), lb.end());
  CHECK(la == lb);

  Dataset s1 = subset(data, 13, 7);
  Dataset s2 = subset(data, 13, 7);
  REQUIRE(s1.size() == 13);
  for (std::size_t i = 0; i < s1.size(); ++i) {
    CHECK(s1[i].label == s2[i].label);
    CHECK(s1[i].pixels.data() == s2[i].pixels.data());
  }
}
