#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mhcnn/tensor.hpp"

namespace mhcnn {

// One normalized MNIST sample: 28x28 pixels in [0,1], label in 0..9.
struct LabeledImage {
  Tensor pixels;
  int label = 0;
};

using Dataset = std::vector<LabeledImage>;

// IDX readers. Images: magic 0x00000803, big-endian counts (n, rows, cols),
// then n*rows*cols unsigned bytes; byte v maps to pixel v/255. Labels:
// magic 0x00000801, count n, then n bytes. Only 28x28 images are accepted.
std::vector<Tensor> load_idx_images(const std::string& path);
std::vector<int> load_idx_labels(const std::string& path);

// Loads and pairs image/label files; counts must agree.
Dataset load_dataset(const std::string& images_path, const std::string& labels_path);

// IDX writers, bit-exact inverses of the readers for byte-valued pixels.
void write_idx_images(const std::string& path, const std::vector<Tensor>& images);
void write_idx_labels(const std::string& path, const std::vector<int>& labels);

// Deterministic shuffled minibatch schedule. Trailing partial batch dropped.
struct BatchPlan {
  std::size_t batch_size = 0;
  std::uint64_t seed = 0;
  std::vector<std::size_t> order;  // permutation of 0..n-1

  std::size_t batch_count() const noexcept { return order.size() / batch_size; }

  // Indices of batch b: order[b*batch_size .. (b+1)*batch_size).
  std::vector<std::size_t> batch(std::size_t b) const {
    return {order.begin() + static_cast<std::ptrdiff_t>(b * batch_size),
            order.begin() + static_cast<std::ptrdiff_t>((b + 1) * batch_size)};
  }
};

BatchPlan make_batches(std::size_t n_samples, std::size_t batch_size, std::uint64_t seed);

// First k samples of a seeded Fisher-Yates shuffle of `data`.
Dataset subset(const Dataset& data, std::size_t k, std::uint64_t seed);

}  // namespace mhcnn
