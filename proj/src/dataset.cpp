#include "mhcnn/dataset.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>

#include "mhcnn/errors.hpp"
#include "mhcnn/rng.hpp"

namespace mhcnn {

namespace {

constexpr std::uint32_t kImagesMagic = 0x00000803;
constexpr std::uint32_t kLabelsMagic = 0x00000801;

std::uint32_t read_be32(std::istream& in, const std::string& path) {
  unsigned char buf[4];
  if (!in.read(reinterpret_cast<char*>(buf), 4)) {
    throw DataError(path + ": truncated header, expected 4 more bytes");
  }
  return (std::uint32_t(buf[0]) << 24) | (std::uint32_t(buf[1]) << 16) |
         (std::uint32_t(buf[2]) << 8) | std::uint32_t(buf[3]);
}

void write_be32(std::ostream& out, std::uint32_t v) {
  const unsigned char buf[4] = {
      static_cast<unsigned char>(v >> 24), static_cast<unsigned char>(v >> 16),
      static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
  out.write(reinterpret_cast<const char*>(buf), 4);
}

std::vector<unsigned char> read_payload(std::istream& in, std::size_t expected,
                                        const std::string& path) {
  std::vector<unsigned char> bytes(expected);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(expected));
  const std::size_t got = static_cast<std::size_t>(in.gcount());
  if (got != expected) {
    throw DataError(path + ": truncated payload, expected " + std::to_string(expected) +
                    " bytes, got " + std::to_string(got));
  }
  return bytes;
}

std::ifstream open_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(path + ": cannot open file");
  return in;
}

}  // namespace

std::vector<Tensor> load_idx_images(const std::string& path) {
  std::ifstream in = open_file(path);
  const std::uint32_t magic = read_be32(in, path);
  if (magic != kImagesMagic) {
    throw DataError(path + ": bad image magic " + std::to_string(magic));
  }
  const std::uint32_t n = read_be32(in, path);
  const std::uint32_t rows = read_be32(in, path);
  const std::uint32_t cols = read_be32(in, path);
  if (rows != 28 || cols != 28) {
    throw DataError(path + ": unsupported image shape " + std::to_string(rows) + "x" +
                    std::to_string(cols) + ", expected 28x28");
  }
  const auto bytes = read_payload(in, std::size_t(n) * rows * cols, path);
  std::vector<Tensor> images;
  images.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Tensor img({rows, cols});
    for (std::size_t p = 0; p < std::size_t(rows) * cols; ++p) {
      img[p] = bytes[i * rows * cols + p] / 255.0;
    }
    images.push_back(std::move(img));
  }
  return images;
}

std::vector<int> load_idx_labels(const std::string& path) {
  std::ifstream in = open_file(path);
  const std::uint32_t magic = read_be32(in, path);
  if (magic != kLabelsMagic) {
    throw DataError(path + ": bad label magic " + std::to_string(magic));
  }
  const std::uint32_t n = read_be32(in, path);
  const auto bytes = read_payload(in, n, path);
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (bytes[i] > 9) {
      throw DataError(path + ": label " + std::to_string(int(bytes[i])) +
                      " out of range at index " + std::to_string(i));
    }
    labels[i] = bytes[i];
  }
  return labels;
}

Dataset load_dataset(const std::string& images_path, const std::string& labels_path) {
  auto images = load_idx_images(images_path);
  auto labels = load_idx_labels(labels_path);
  if (images.size() != labels.size()) {
    throw DataError("count mismatch: " + std::to_string(images.size()) + " images vs " +
                    std::to_string(labels.size()) + " labels");
  }
  Dataset data;
  data.reserve(images.size());
  for (std::size_t i = 0; i < images.size(); ++i) {
    data.push_back({std::move(images[i]), labels[i]});
  }
  return data;
}

void write_idx_images(const std::string& path, const std::vector<Tensor>& images) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(path + ": cannot open for writing");
  write_be32(out, kImagesMagic);
  write_be32(out, static_cast<std::uint32_t>(images.size()));
  write_be32(out, 28);
  write_be32(out, 28);
  for (const Tensor& img : images) {
    if (img.shape() != std::vector<std::size_t>{28, 28}) {
      throw DataError(path + ": image shape " + shape_string(img.shape()) +
                      " unsupported, expected 28x28");
    }
    for (double v : img.data()) {
      const double scaled = std::round(v * 255.0);
      out.put(static_cast<char>(static_cast<unsigned char>(
          scaled < 0 ? 0 : (scaled > 255 ? 255 : scaled))));
    }
  }
}

void write_idx_labels(const std::string& path, const std::vector<int>& labels) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(path + ": cannot open for writing");
  write_be32(out, kLabelsMagic);
  write_be32(out, static_cast<std::uint32_t>(labels.size()));
  for (int l : labels) out.put(static_cast<char>(static_cast<unsigned char>(l)));
}

namespace {

std::vector<std::size_t> shuffled_indices(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  for (std::size_t i = n; i > 1; --i) {
    std::swap(order[i - 1], order[rng.uniform_index(i)]);
  }
  return order;
}

}  // namespace

BatchPlan make_batches(std::size_t n_samples, std::size_t batch_size, std::uint64_t seed) {
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (batch_size > n_samples) {
    throw ConfigError("batch_size " + std::to_string(batch_size) + " exceeds sample count " +
                      std::to_string(n_samples));
  }
  return BatchPlan{batch_size, seed, shuffled_indices(n_samples, seed)};
}

Dataset subset(const Dataset& data, std::size_t k, std::uint64_t seed) {
  if (k > data.size()) {
    throw ConfigError("subset size " + std::to_string(k) + " exceeds dataset size " +
                      std::to_string(data.size()));
  }
  const auto order = shuffled_indices(data.size(), seed);
  Dataset out;
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i) out.push_back(data[order[i]]);
  return out;
}

}  // namespace mhcnn
