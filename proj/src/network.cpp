#include "mhcnn/network.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "mhcnn/errors.hpp"
#include "mhcnn/rng.hpp"

namespace mhcnn {

void validate(const NetworkConfig& c) {
  if (c.conv1_maps < 1 || c.conv2_maps < 1 || c.kernel_size < 1 || c.pool_scale < 1 ||
      c.n_classes < 1 || c.input_side < 1) {
    throw ConfigError("network config fields must be positive");
  }
  if (c.pool_scale != 2) {
    throw ConfigError("only pool_scale 2 is supported");
  }
  int side = c.input_side;
  for (int stage = 0; stage < 2; ++stage) {
    side = side - c.kernel_size + 1;
    if (side < 1) throw ConfigError("kernel does not fit at stage " + std::to_string(stage + 1));
    if (side % c.pool_scale != 0) {
      throw ConfigError("stage " + std::to_string(stage + 1) + " map side " +
                        std::to_string(side) + " not divisible by pool scale");
    }
    side /= c.pool_scale;
  }
}

NetworkConfig design_from_name(const std::string& name) {
  // Expected form: i-<m1>c-<s>s-<m2>c-<s>s
  NetworkConfig c;
  int m1 = 0, m2 = 0, s1 = 0, s2 = 0;
  if (std::sscanf(name.c_str(), "i-%dc-%ds-%dc-%ds", &m1, &s1, &m2, &s2) != 4 ||
      s1 != 2 || s2 != 2) {
    throw ConfigError("unrecognized design '" + name +
                      "', expected form i-6c-2s-12c-2s");
  }
  c.conv1_maps = m1;
  c.conv2_maps = m2;
  validate(c);
  return c;
}

std::string design_name(const NetworkConfig& c) {
  std::ostringstream os;
  os << "i-" << c.conv1_maps << "c-" << c.pool_scale << "s-" << c.conv2_maps << "c-"
     << c.pool_scale << "s";
  return os.str();
}

bool Network::operator==(const Network& o) const {
  auto teq = [](const Tensor& a, const Tensor& b) {
    return a.shape() == b.shape() && a.data() == b.data();
  };
  if (conv1_bias != o.conv1_bias || conv2_bias != o.conv2_bias ||
      pool1_beta != o.pool1_beta || pool1_b != o.pool1_b || pool2_beta != o.pool2_beta ||
      pool2_b != o.pool2_b || out_bias != o.out_bias || !teq(out_weights, o.out_weights)) {
    return false;
  }
  if (conv1_kernels.size() != o.conv1_kernels.size() ||
      conv2_kernels.size() != o.conv2_kernels.size()) {
    return false;
  }
  for (std::size_t i = 0; i < conv1_kernels.size(); ++i) {
    if (!teq(conv1_kernels[i], o.conv1_kernels[i])) return false;
  }
  for (std::size_t i = 0; i < conv2_kernels.size(); ++i) {
    if (conv2_kernels[i].size() != o.conv2_kernels[i].size()) return false;
    for (std::size_t j = 0; j < conv2_kernels[i].size(); ++j) {
      if (!teq(conv2_kernels[i][j], o.conv2_kernels[i][j])) return false;
    }
  }
  return true;
}

Network init_network(const NetworkConfig& config, std::uint64_t seed) {
  validate(config);
  Network net;
  net.config = config;
  Rng rng(seed);
  const std::size_t k = static_cast<std::size_t>(config.kernel_size);

  auto uniform_sym = [&](double s) { return s * (2.0 * rng.uniform() - 1.0); };

  const double s1 = 1.0 / std::sqrt(double(k * k));
  for (int m = 0; m < config.conv1_maps; ++m) {
    Tensor w({k, k});
    for (double& v : w.data()) v = uniform_sym(s1);
    net.conv1_kernels.push_back(std::move(w));
  }
  net.conv1_bias.assign(config.conv1_maps, 0.0);

  const double s2 = 1.0 / std::sqrt(double(config.conv1_maps) * k * k);
  for (int m = 0; m < config.conv2_maps; ++m) {
    std::vector<Tensor> row;
    for (int p = 0; p < config.conv1_maps; ++p) {
      Tensor w({k, k});
      for (double& v : w.data()) v = uniform_sym(s2);
      row.push_back(std::move(w));
    }
    net.conv2_kernels.push_back(std::move(row));
  }
  net.conv2_bias.assign(config.conv2_maps, 0.0);

  const double beta0 = 1.0 / double(config.pool_scale * config.pool_scale);
  net.pool1_beta.assign(config.conv1_maps, beta0);
  net.pool1_b.assign(config.conv1_maps, 0.0);
  net.pool2_beta.assign(config.conv2_maps, beta0);
  net.pool2_b.assign(config.conv2_maps, 0.0);

  const std::size_t fdim = static_cast<std::size_t>(config.feature_dim());
  const double so = 1.0 / std::sqrt(double(fdim));
  net.out_weights = Tensor({static_cast<std::size_t>(config.n_classes), fdim});
  for (double& v : net.out_weights.data()) v = uniform_sym(so);
  net.out_bias.assign(config.n_classes, 0.0);
  return net;
}

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

Tensor affine_tanh_pool(const Tensor& block_sums, double beta, double b) {
  Tensor out = block_sums;
  for (double& v : out.data()) v = std::tanh(beta * v + b);
  return out;
}

}  // namespace

ForwardTrace forward(const Network& net, const Tensor& image) {
  const NetworkConfig& c = net.config;
  if (image.rank() != 2 || image.rows() != std::size_t(c.input_side) ||
      image.cols() != std::size_t(c.input_side)) {
    throw DimensionError("image shape " + shape_string(image.shape()) +
                         " does not match input side " + std::to_string(c.input_side));
  }
  ForwardTrace t;
  t.input = &image;

  for (int m = 0; m < c.conv1_maps; ++m) {
    Tensor pre = conv2d_valid(image, net.conv1_kernels[m]);
    for (double& v : pre.data()) v = std::tanh(v + net.conv1_bias[m]);
    Tensor sums = block_sum_2x2(pre);
    t.pool1_out.push_back(affine_tanh_pool(sums, net.pool1_beta[m], net.pool1_b[m]));
    t.pool1_sum.push_back(std::move(sums));
    t.conv1_out.push_back(std::move(pre));
  }

  for (int m = 0; m < c.conv2_maps; ++m) {
    Tensor acc({std::size_t(c.conv2_side()), std::size_t(c.conv2_side())});
    for (int p = 0; p < c.conv1_maps; ++p) {
      Tensor part = conv2d_valid(t.pool1_out[p], net.conv2_kernels[m][p]);
      for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += part[i];
    }
    for (double& v : acc.data()) v = std::tanh(v + net.conv2_bias[m]);
    Tensor sums = block_sum_2x2(acc);
    t.pool2_out.push_back(affine_tanh_pool(sums, net.pool2_beta[m], net.pool2_b[m]));
    t.pool2_sum.push_back(std::move(sums));
    t.conv2_out.push_back(std::move(acc));
  }

  t.features.reserve(static_cast<std::size_t>(c.feature_dim()));
  for (const Tensor& map : t.pool2_out) {
    t.features.insert(t.features.end(), map.data().begin(), map.data().end());
  }

  t.outputs.resize(c.n_classes);
  const std::size_t fdim = t.features.size();
  for (int cls = 0; cls < c.n_classes; ++cls) {
    double z = net.out_bias[cls];
    const double* w = &net.out_weights.data()[std::size_t(cls) * fdim];
    for (std::size_t i = 0; i < fdim; ++i) z += w[i] * t.features[i];
    t.outputs[cls] = sigmoid(z);
  }
  return t;
}

std::vector<double> one_hot(int label, int n_classes) {
  if (label < 0 || label >= n_classes) {
    throw ConfigError("label " + std::to_string(label) + " out of range for " +
                      std::to_string(n_classes) + " classes");
  }
  std::vector<double> t(n_classes, 0.0);
  t[label] = 1.0;
  return t;
}

double loss(const std::vector<std::vector<double>>& outputs,
            const std::vector<std::vector<double>>& targets) {
  const std::size_t n = outputs.size();
  if (n == 0) throw ConfigError("loss over an empty batch");
  if (targets.size() != n) {
    throw DimensionError("outputs/targets count mismatch: " + std::to_string(n) + " vs " +
                         std::to_string(targets.size()));
  }
  double sq = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (outputs[i].size() != targets[i].size()) {
      throw DimensionError("output/target width mismatch at sample " + std::to_string(i));
    }
    for (std::size_t j = 0; j < outputs[i].size(); ++j) {
      const double e = targets[i][j] - outputs[i][j];
      sq += e * e;
    }
  }
  return 0.5 * std::sqrt(sq / double(n));
}

Gradients zero_gradients(const NetworkConfig& c) {
  Gradients g;
  const std::size_t k = static_cast<std::size_t>(c.kernel_size);
  g.conv1_kernels.assign(c.conv1_maps, Tensor({k, k}));
  g.conv1_bias.assign(c.conv1_maps, 0.0);
  g.conv2_kernels.assign(c.conv2_maps, std::vector<Tensor>(c.conv1_maps, Tensor({k, k})));
  g.conv2_bias.assign(c.conv2_maps, 0.0);
  g.pool1_beta.assign(c.conv1_maps, 0.0);
  g.pool1_b.assign(c.conv1_maps, 0.0);
  g.pool2_beta.assign(c.conv2_maps, 0.0);
  g.pool2_b.assign(c.conv2_maps, 0.0);
  g.out_weights = Tensor({std::size_t(c.n_classes), std::size_t(c.feature_dim())});
  g.out_bias.assign(c.n_classes, 0.0);
  return g;
}

Gradients backward(const Network& net, const std::vector<ForwardTrace>& traces,
                   const std::vector<std::vector<double>>& targets) {
  const NetworkConfig& c = net.config;
  const std::size_t n = traces.size();
  if (n == 0) throw UsageError("backward over an empty batch");
  if (targets.size() != n) {
    throw DimensionError("trace/target count mismatch: " + std::to_string(n) + " vs " +
                         std::to_string(targets.size()));
  }
  for (const ForwardTrace& t : traces) {
    if (t.input == nullptr || t.outputs.size() != std::size_t(c.n_classes)) {
      throw UsageError("trace does not match a forward call on this network");
    }
  }

  Gradients g = zero_gradients(c);

  // Total squared error drives the shared 1/sqrt(S*N) factor of the
  // square-root loss. At S == 0 the loss is at its minimum; gradient is 0.
  double sq = 0.0;
  for (std::size_t s = 0; s < n; ++s) {
    for (int cls = 0; cls < c.n_classes; ++cls) {
      const double e = traces[s].outputs[cls] - targets[s][cls];
      sq += e * e;
    }
  }
  if (sq == 0.0) return g;
  const double coef = 0.5 / std::sqrt(sq * double(n));

  const std::size_t fdim = static_cast<std::size_t>(c.feature_dim());
  const std::size_t p2 = static_cast<std::size_t>(c.pool2_side());

  for (std::size_t s = 0; s < n; ++s) {
    const ForwardTrace& t = traces[s];

    // Output layer.
    std::vector<double> delta_z(c.n_classes);
    for (int cls = 0; cls < c.n_classes; ++cls) {
      const double u = t.outputs[cls];
      delta_z[cls] = coef * (u - targets[s][cls]) * u * (1.0 - u);
    }
    std::vector<double> dfeat(fdim, 0.0);
    for (int cls = 0; cls < c.n_classes; ++cls) {
      const double d = delta_z[cls];
      g.out_bias[cls] += d;
      double* gw = &g.out_weights.data()[std::size_t(cls) * fdim];
      const double* w = &net.out_weights.data()[std::size_t(cls) * fdim];
      for (std::size_t i = 0; i < fdim; ++i) {
        gw[i] += d * t.features[i];
        dfeat[i] += d * w[i];
      }
    }

    // Stage 2 pooling and convolution.
    std::vector<Tensor> dpool1(c.conv1_maps,
                               Tensor({std::size_t(c.pool1_side()), std::size_t(c.pool1_side())}));
    for (int m = 0; m < c.conv2_maps; ++m) {
      Tensor dpre({p2, p2});
      for (std::size_t i = 0; i < p2 * p2; ++i) {
        const double a = t.pool2_out[m][i];
        dpre[i] = dfeat[std::size_t(m) * p2 * p2 + i] * (1.0 - a * a);
      }
      for (std::size_t i = 0; i < p2 * p2; ++i) {
        g.pool2_beta[m] += dpre[i] * t.pool2_sum[m][i];
        g.pool2_b[m] += dpre[i];
      }
      for (double& v : dpre.data()) v *= net.pool2_beta[m];
      Tensor dconv = upsample_2x2(dpre);
      for (std::size_t i = 0; i < dconv.size(); ++i) {
        const double a = t.conv2_out[m][i];
        dconv[i] *= 1.0 - a * a;
        g.conv2_bias[m] += dconv[i];
      }
      for (int p = 0; p < c.conv1_maps; ++p) {
        Tensor dw = conv2d_valid(t.pool1_out[p], dconv);
        for (std::size_t i = 0; i < dw.size(); ++i) g.conv2_kernels[m][p][i] += dw[i];
        Tensor din = conv2d_adjoint_input(dconv, net.conv2_kernels[m][p],
                                          dpool1[p].rows(), dpool1[p].cols());
        for (std::size_t i = 0; i < din.size(); ++i) dpool1[p][i] += din[i];
      }
    }

    // Stage 1 pooling and convolution.
    for (int m = 0; m < c.conv1_maps; ++m) {
      Tensor dpre = dpool1[m];
      for (std::size_t i = 0; i < dpre.size(); ++i) {
        const double a = t.pool1_out[m][i];
        dpre[i] *= 1.0 - a * a;
        g.pool1_beta[m] += dpre[i] * t.pool1_sum[m][i];
        g.pool1_b[m] += dpre[i];
      }
      for (double& v : dpre.data()) v *= net.pool1_beta[m];
      Tensor dconv = upsample_2x2(dpre);
      for (std::size_t i = 0; i < dconv.size(); ++i) {
        const double a = t.conv1_out[m][i];
        dconv[i] *= 1.0 - a * a;
        g.conv1_bias[m] += dconv[i];
      }
      Tensor dw = conv2d_valid(*t.input, dconv);
      for (std::size_t i = 0; i < dw.size(); ++i) g.conv1_kernels[m][i] += dw[i];
    }
  }
  return g;
}

void sgd_step(Network& net, const Gradients& g, double alpha) {
  const NetworkConfig& c = net.config;
  auto axpy = [alpha](std::vector<double>& x, const std::vector<double>& d) {
    for (std::size_t i = 0; i < x.size(); ++i) x[i] -= alpha * d[i];
  };
  for (int m = 0; m < c.conv1_maps; ++m) {
    axpy(net.conv1_kernels[m].data(), g.conv1_kernels[m].data());
  }
  axpy(net.conv1_bias, g.conv1_bias);
  for (int m = 0; m < c.conv2_maps; ++m) {
    for (int p = 0; p < c.conv1_maps; ++p) {
      axpy(net.conv2_kernels[m][p].data(), g.conv2_kernels[m][p].data());
    }
  }
  axpy(net.conv2_bias, g.conv2_bias);
  axpy(net.pool1_beta, g.pool1_beta);
  axpy(net.pool1_b, g.pool1_b);
  axpy(net.pool2_beta, g.pool2_beta);
  axpy(net.pool2_b, g.pool2_b);
  axpy(net.out_weights.data(), g.out_weights.data());
  axpy(net.out_bias, g.out_bias);
  for (double v : net.out_weights.data()) {
    if (!std::isfinite(v)) throw NumericError("non-finite weight after sgd_step");
  }
}

double evaluate(const Network& net, const Dataset& test_set) {
  if (test_set.empty()) throw ConfigError("evaluate on an empty test set");
  std::size_t correct = 0;
  for (const LabeledImage& sample : test_set) {
    const ForwardTrace t = forward(net, sample.pixels);
    int arg = 0;
    for (int cls = 1; cls < net.config.n_classes; ++cls) {
      if (t.outputs[cls] > t.outputs[arg]) arg = cls;
    }
    if (arg == sample.label) ++correct;
  }
  return double(correct) / double(test_set.size());
}

namespace {

constexpr std::uint32_t kNetMagic = 0x4d48434eu;  // "MHCN"
constexpr std::uint32_t kNetVersion = 1;

void put_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16),
                        static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& in, const std::string& path) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw DataError(path + ": truncated checkpoint");
  return std::uint32_t(b[0]) | (std::uint32_t(b[1]) << 8) | (std::uint32_t(b[2]) << 16) |
         (std::uint32_t(b[3]) << 24);
}

void put_f64(std::ostream& out, double v) {
  static_assert(sizeof(double) == 8);
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(bits >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

double get_f64(std::istream& in, const std::string& path) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), 8)) throw DataError(path + ": truncated checkpoint");
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= std::uint64_t(b[i]) << (8 * i);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

template <typename Fn>
void visit_params(Network& net, Fn&& fn) {
  for (Tensor& t : net.conv1_kernels)
    for (double& v : t.data()) fn(v);
  for (double& v : net.conv1_bias) fn(v);
  for (auto& row : net.conv2_kernels)
    for (Tensor& t : row)
      for (double& v : t.data()) fn(v);
  for (double& v : net.conv2_bias) fn(v);
  for (double& v : net.pool1_beta) fn(v);
  for (double& v : net.pool1_b) fn(v);
  for (double& v : net.pool2_beta) fn(v);
  for (double& v : net.pool2_b) fn(v);
  for (double& v : net.out_weights.data()) fn(v);
  for (double& v : net.out_bias) fn(v);
}

}  // namespace

void save_network(const Network& net, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(path + ": cannot open for writing");
  put_u32(out, kNetMagic);
  put_u32(out, kNetVersion);
  const NetworkConfig& c = net.config;
  for (int field : {c.conv1_maps, c.conv2_maps, c.kernel_size, c.pool_scale, c.n_classes,
                    c.input_side}) {
    put_u32(out, static_cast<std::uint32_t>(field));
  }
  visit_params(const_cast<Network&>(net), [&](double& v) { put_f64(out, v); });
  if (!out) throw DataError(path + ": write failed");
}

Network load_network(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(path + ": cannot open file");
  if (get_u32(in, path) != kNetMagic) throw DataError(path + ": bad checkpoint magic");
  const std::uint32_t version = get_u32(in, path);
  if (version != kNetVersion) {
    throw DataError(path + ": unsupported checkpoint version " + std::to_string(version));
  }
  NetworkConfig c;
  c.conv1_maps = static_cast<int>(get_u32(in, path));
  c.conv2_maps = static_cast<int>(get_u32(in, path));
  c.kernel_size = static_cast<int>(get_u32(in, path));
  c.pool_scale = static_cast<int>(get_u32(in, path));
  c.n_classes = static_cast<int>(get_u32(in, path));
  c.input_side = static_cast<int>(get_u32(in, path));
  Network net = init_network(c, 0);
  visit_params(net, [&](double& v) { v = get_f64(in, path); });
  return net;
}

}  // namespace mhcnn
