#pragma once

#include <stdexcept>
#include <string>

namespace mhcnn {

// Shape disagreement between operands; message carries both shapes.
struct DimensionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Invalid configuration values (bad sizes, empty sets, out-of-range rates).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Dataset/file problems: bad magic, truncation, unsupported shapes.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// NaN/Inf produced where finite values are required.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// API misuse (empty memory, missing trace).
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace mhcnn
