#include "mhcnn/tensor.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include "mhcnn/errors.hpp"

namespace mhcnn {

namespace {

std::size_t shape_product(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) {
    if (d == 0) throw DimensionError("zero dimension in shape " + shape_string(shape));
    n *= d;
  }
  return n;
}

void check_finite(const Tensor& t, const char* op) {
  for (double v : t.data()) {
    if (!std::isfinite(v)) {
      throw NumericError(std::string("non-finite value produced by ") + op);
    }
  }
}

void require_2d(const Tensor& t, const char* what) {
  if (t.rank() != 2) {
    throw DimensionError(std::string(what) + " must be 2-D, got shape " +
                         shape_string(t.shape()));
  }
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape, double fill)
    : shape_(std::move(shape)), data_(shape_product(shape_), fill) {}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (shape_product(shape_) != data_.size()) {
    throw DimensionError("data length " + std::to_string(data_.size()) +
                         " does not match shape " + shape_string(shape_));
  }
}

std::string shape_string(const std::vector<std::size_t>& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

Tensor conv2d_valid(const Tensor& input, const Tensor& kernel) {
  require_2d(input, "conv2d_valid input");
  require_2d(kernel, "conv2d_valid kernel");
  if (input.rows() < kernel.rows() || input.cols() < kernel.cols()) {
    throw DimensionError("kernel " + shape_string(kernel.shape()) +
                         " does not fit input " + shape_string(input.shape()));
  }
  const std::size_t out_r = input.rows() - kernel.rows() + 1;
  const std::size_t out_c = input.cols() - kernel.cols() + 1;
  Tensor out({out_r, out_c});
  for (std::size_t i = 0; i < out_r; ++i) {
    for (std::size_t j = 0; j < out_c; ++j) {
      double acc = 0.0;
      for (std::size_t u = 0; u < kernel.rows(); ++u) {
        for (std::size_t v = 0; v < kernel.cols(); ++v) {
          acc += input(i + u, j + v) * kernel(u, v);
        }
      }
      out(i, j) = acc;
    }
  }
  check_finite(out, "conv2d_valid");
  return out;
}

Tensor conv2d_adjoint_input(const Tensor& grad_out, const Tensor& kernel,
                            std::size_t in_rows, std::size_t in_cols) {
  require_2d(grad_out, "conv2d_adjoint_input grad");
  require_2d(kernel, "conv2d_adjoint_input kernel");
  if (grad_out.rows() + kernel.rows() != in_rows + 1 ||
      grad_out.cols() + kernel.cols() != in_cols + 1) {
    throw DimensionError("grad " + shape_string(grad_out.shape()) + " and kernel " +
                         shape_string(kernel.shape()) + " inconsistent with input " +
                         shape_string({in_rows, in_cols}));
  }
  Tensor din({in_rows, in_cols});
  for (std::size_t i = 0; i < grad_out.rows(); ++i) {
    for (std::size_t j = 0; j < grad_out.cols(); ++j) {
      const double g = grad_out(i, j);
      for (std::size_t u = 0; u < kernel.rows(); ++u) {
        for (std::size_t v = 0; v < kernel.cols(); ++v) {
          din(i + u, j + v) += g * kernel(u, v);
        }
      }
    }
  }
  check_finite(din, "conv2d_adjoint_input");
  return din;
}

Tensor block_sum_2x2(const Tensor& input) {
  require_2d(input, "block_sum_2x2 input");
  if (input.rows() % 2 != 0 || input.cols() % 2 != 0) {
    throw DimensionError("block_sum_2x2 needs even dimensions, got " +
                         shape_string(input.shape()));
  }
  Tensor out({input.rows() / 2, input.cols() / 2});
  for (std::size_t i = 0; i < out.rows(); ++i) {
    for (std::size_t j = 0; j < out.cols(); ++j) {
      out(i, j) = input(2 * i, 2 * j) + input(2 * i, 2 * j + 1) +
                  input(2 * i + 1, 2 * j) + input(2 * i + 1, 2 * j + 1);
    }
  }
  check_finite(out, "block_sum_2x2");
  return out;
}

Tensor upsample_2x2(const Tensor& input) {
  require_2d(input, "upsample_2x2 input");
  Tensor out({input.rows() * 2, input.cols() * 2});
  for (std::size_t i = 0; i < input.rows(); ++i) {
    for (std::size_t j = 0; j < input.cols(); ++j) {
      const double v = input(i, j);
      out(2 * i, 2 * j) = v;
      out(2 * i, 2 * j + 1) = v;
      out(2 * i + 1, 2 * j) = v;
      out(2 * i + 1, 2 * j + 1) = v;
    }
  }
  return out;
}

Tensor tanh_map(const Tensor& input) {
  Tensor out = input;
  for (double& v : out.data()) v = std::tanh(v);
  check_finite(out, "tanh_map");
  return out;
}

Tensor tanh_prime_from_output(const Tensor& y) {
  Tensor out = y;
  for (double& v : out.data()) v = 1.0 - v * v;
  check_finite(out, "tanh_prime_from_output");
  return out;
}

}  // namespace mhcnn
