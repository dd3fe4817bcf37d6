#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace mhcnn {

// Dense row-major n-dimensional array of doubles.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape, double fill = 0.0);
  Tensor(std::vector<std::size_t> shape, std::vector<double> data);

  const std::vector<std::size_t>& shape() const noexcept { return shape_; }
  std::size_t size() const noexcept { return data_.size(); }
  std::size_t rank() const noexcept { return shape_.size(); }

  // 2-D accessors; rank is checked on construction, not per access.
  std::size_t rows() const noexcept { return shape_[0]; }
  std::size_t cols() const noexcept { return shape_[1]; }
  double& operator()(std::size_t i, std::size_t j) noexcept {
    return data_[i * shape_[1] + j];
  }
  double operator()(std::size_t i, std::size_t j) const noexcept {
    return data_[i * shape_[1] + j];
  }

  double& operator[](std::size_t i) noexcept { return data_[i]; }
  double operator[](std::size_t i) const noexcept { return data_[i]; }

  std::vector<double>& data() noexcept { return data_; }
  const std::vector<double>& data() const noexcept { return data_; }

  bool same_shape(const Tensor& other) const noexcept {
    return shape_ == other.shape_;
  }

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

std::string shape_string(const std::vector<std::size_t>& shape);

// Valid 2-D cross-correlation (no kernel flip):
//   out[i,j] = sum_{u,v} input[i+u, j+v] * kernel[u,v]
// Output shape (H-k+1) x (W-k+1). Throws DimensionError when the kernel
// does not fit inside the input.
Tensor conv2d_valid(const Tensor& input, const Tensor& kernel);

// Adjoint of conv2d_valid with respect to its input: scatters grad_out
// back to an input-shaped tensor. Used by backprop.
Tensor conv2d_adjoint_input(const Tensor& grad_out, const Tensor& kernel,
                            std::size_t in_rows, std::size_t in_cols);

// Non-overlapping 2x2 block sums; both dimensions must be even.
Tensor block_sum_2x2(const Tensor& input);

// Adjoint of block_sum_2x2: replicates each entry over its 2x2 block.
Tensor upsample_2x2(const Tensor& input);

Tensor tanh_map(const Tensor& input);

// Derivative of tanh computed from the forward output: 1 - y^2.
Tensor tanh_prime_from_output(const Tensor& y);

}  // namespace mhcnn
