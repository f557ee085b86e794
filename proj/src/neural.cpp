#include "ctcs/neural.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "ctcs/rng.hpp"

namespace ctcs {

namespace {

Scalar sigmoid(Scalar x) {
  if (x >= 0) {
    const Scalar e = std::exp(-x);
    return 1.0 / (1.0 + e);
  }
  const Scalar e = std::exp(x);
  return e / (1.0 + e);
}

void write_bytes(std::ostream& os, const void* data, std::size_t n) {
  os.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
  if (!os) throw IoError("checkpoint write failed");
}

void read_bytes(std::istream& is, void* data, std::size_t n) {
  is.read(static_cast<char*>(data), static_cast<std::streamsize>(n));
  if (!is) throw IoError("checkpoint read failed (truncated stream)");
}

template <typename T>
void write_pod(std::ostream& os, const T& value) {
  write_bytes(os, &value, sizeof(T));
}

template <typename T>
T read_pod(std::istream& is) {
  T value{};
  read_bytes(is, &value, sizeof(T));
  return value;
}

void write_tag(std::ostream& os, const char tag[4]) { write_bytes(os, tag, 4); }

void expect_tag(std::istream& is, const char tag[4], const char* what) {
  char got[4];
  read_bytes(is, got, 4);
  if (std::string(got, 4) != std::string(tag, 4)) {
    throw IoError(std::string("checkpoint: bad ") + what + " tag");
  }
}

void write_matrix(std::ostream& os, const MatX& m) {
  write_pod<std::int64_t>(os, m.rows());
  write_pod<std::int64_t>(os, m.cols());
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) write_pod<double>(os, m(r, c));
}

MatX read_matrix(std::istream& is) {
  const auto rows = read_pod<std::int64_t>(is);
  const auto cols = read_pod<std::int64_t>(is);
  if (rows < 0 || cols < 0 || rows * cols > (1ll << 28)) throw IoError("checkpoint: bad matrix shape");
  MatX m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = read_pod<double>(is);
  return m;
}

void write_vector(std::ostream& os, const VecX& v) {
  write_pod<std::int64_t>(os, v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) write_pod<double>(os, v[i]);
}

VecX read_vector(std::istream& is) {
  const auto n = read_pod<std::int64_t>(is);
  if (n < 0 || n > (1ll << 28)) throw IoError("checkpoint: bad vector size");
  VecX v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = read_pod<double>(is);
  return v;
}

void write_string(std::ostream& os, const std::string& s) {
  write_pod<std::uint64_t>(os, s.size());
  write_bytes(os, s.data(), s.size());
}

std::string read_string(std::istream& is) {
  const auto n = read_pod<std::uint64_t>(is);
  if (n > (1ull << 24)) throw IoError("checkpoint: bad string size");
  std::string s(n, '\0');
  read_bytes(is, s.data(), n);
  return s;
}

}  // namespace

Approximator::Approximator(std::vector<int> layer_sizes, std::uint64_t seed, Scalar dropout_rate)
    : layer_sizes_(std::move(layer_sizes)), dropout_rate_(dropout_rate), rng_(seed) {
  if (layer_sizes_.size() < 2) {
    throw ContractViolation("approximator: need at least input and output layer sizes");
  }
  for (int n : layer_sizes_) {
    if (n <= 0) throw ContractViolation("approximator: layer sizes must be positive");
  }
  if (!(dropout_rate_ >= 0.0 && dropout_rate_ < 1.0)) {
    throw ContractViolation("approximator: dropout rate must lie in [0,1)");
  }
  const std::size_t layers = layer_sizes_.size() - 1;
  weights_.resize(layers);
  biases_.resize(layers);
  for (std::size_t l = 0; l < layers; ++l) {
    const int fan_in = layer_sizes_[l];
    const int fan_out = layer_sizes_[l + 1];
    const Scalar limit = std::sqrt(6.0 / static_cast<Scalar>(fan_in + fan_out));
    weights_[l].resize(fan_out, fan_in);
    for (Eigen::Index r = 0; r < weights_[l].rows(); ++r)
      for (Eigen::Index c = 0; c < weights_[l].cols(); ++c)
        weights_[l](r, c) = uniform_range(rng_, -limit, limit);
    biases_[l] = VecX::Zero(fan_out);
  }
}

VecX Approximator::forward(const VecX& input, NetMode mode) {
  if (input.size() != input_size()) {
    throw ContractViolation("forward: input size mismatch");
  }
  const std::size_t layers = weights_.size();
  cache_.input = input;
  cache_.hidden.assign(layers - 1, VecX());
  cache_.activations.assign(layers, VecX());
  cache_.drop_scale.assign(layers - 1, VecX());

  VecX a = input;
  for (std::size_t l = 0; l + 1 < layers; ++l) {
    cache_.activations[l] = a;
    VecX z = weights_[l] * a + biases_[l];
    VecX h(z.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) h[i] = sigmoid(z[i]);
    cache_.hidden[l] = h;
    VecX scale = VecX::Ones(h.size());
    if (mode == NetMode::Train && dropout_rate_ > 0.0) {
      const Scalar keep = 1.0 - dropout_rate_;
      for (Eigen::Index i = 0; i < scale.size(); ++i) {
        scale[i] = uniform01(rng_) < dropout_rate_ ? 0.0 : 1.0 / keep;
      }
    }
    cache_.drop_scale[l] = scale;
    a = h.cwiseProduct(scale);
  }
  cache_.activations[layers - 1] = a;
  cache_.valid = true;
  return weights_[layers - 1] * a + biases_[layers - 1];
}

ParamGrads Approximator::grad_params(const VecX& upstream) const {
  if (!cache_.valid) {
    throw ContractViolation("grad_params: no cached forward pass");
  }
  if (upstream.size() != output_size()) {
    throw ContractViolation("grad_params: upstream size mismatch");
  }
  const std::size_t layers = weights_.size();
  ParamGrads grads;
  grads.weights.resize(layers);
  grads.biases.resize(layers);

  VecX g = upstream;  // gradient w.r.t. the current layer's pre-activation
  for (std::size_t l = layers; l-- > 0;) {
    grads.weights[l] = g * cache_.activations[l].transpose();
    grads.biases[l] = g;
    if (l > 0) {
      VecX ga = weights_[l].transpose() * g;
      ga = ga.cwiseProduct(cache_.drop_scale[l - 1]);
      const VecX& h = cache_.hidden[l - 1];
      g = ga.cwiseProduct(h.cwiseProduct((1.0 - h.array()).matrix()));
    }
  }
  return grads;
}

VecX Approximator::grad_input(const VecX& input) const {
  if (output_size() != 1) {
    throw ContractViolation("grad_input: requires a scalar-output network");
  }
  if (input.size() != input_size()) {
    throw ContractViolation("grad_input: input size mismatch");
  }
  const std::size_t layers = weights_.size();
  std::vector<VecX> hidden(layers - 1);
  VecX a = input;
  for (std::size_t l = 0; l + 1 < layers; ++l) {
    VecX z = weights_[l] * a + biases_[l];
    VecX h(z.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) h[i] = sigmoid(z[i]);
    hidden[l] = h;
    a = h;
  }
  VecX g = VecX::Ones(1);
  for (std::size_t l = layers; l-- > 0;) {
    VecX ga = weights_[l].transpose() * g;
    if (l == 0) return ga;
    const VecX& h = hidden[l - 1];
    g = ga.cwiseProduct(h.cwiseProduct((1.0 - h.array()).matrix()));
  }
  return g;  // unreached
}

const std::vector<VecX>& Approximator::cached_hidden() const {
  if (!cache_.valid) throw ContractViolation("cached_hidden: no cached forward pass");
  return cache_.hidden;
}

void Approximator::set_all_zero() {
  for (auto& w : weights_) w.setZero();
  for (auto& b : biases_) b.setZero();
}

void soft_update(Approximator& target, const Approximator& online, Scalar tau) {
  if (target.layer_sizes() != online.layer_sizes()) {
    throw ContractViolation("soft_update: layer shapes differ");
  }
  for (std::size_t l = 0; l < target.layer_count(); ++l) {
    target.weight(l) = tau * online.weight(l) + (1.0 - tau) * target.weight(l);
    target.bias(l) = tau * online.bias(l) + (1.0 - tau) * target.bias(l);
  }
}

AdamState make_adam(const Approximator& net, Scalar learning_rate) {
  AdamState opt;
  opt.learning_rate = learning_rate;
  opt.m_weights.resize(net.layer_count());
  opt.v_weights.resize(net.layer_count());
  opt.m_biases.resize(net.layer_count());
  opt.v_biases.resize(net.layer_count());
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    opt.m_weights[l] = MatX::Zero(net.weight(l).rows(), net.weight(l).cols());
    opt.v_weights[l] = MatX::Zero(net.weight(l).rows(), net.weight(l).cols());
    opt.m_biases[l] = VecX::Zero(net.bias(l).size());
    opt.v_biases[l] = VecX::Zero(net.bias(l).size());
  }
  return opt;
}

void adam_step(Approximator& net, const ParamGrads& grads, AdamState& opt) {
  if (grads.weights.size() != net.layer_count() || opt.m_weights.size() != net.layer_count()) {
    throw ContractViolation("adam_step: shape mismatch");
  }
  opt.step_count += 1;
  const Scalar bc1 = 1.0 - std::pow(opt.beta1, static_cast<Scalar>(opt.step_count));
  const Scalar bc2 = 1.0 - std::pow(opt.beta2, static_cast<Scalar>(opt.step_count));
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    auto update = [&](auto& param, auto& m, auto& v, const auto& g) {
      m = opt.beta1 * m + (1.0 - opt.beta1) * g;
      v = (opt.beta2 * v.array() + (1.0 - opt.beta2) * g.array().square()).matrix();
      param.array() -=
          opt.learning_rate * (m.array() / bc1) / ((v.array() / bc2).sqrt() + opt.epsilon);
    };
    update(net.weight(l), opt.m_weights[l], opt.v_weights[l], grads.weights[l]);
    update(net.bias(l), opt.m_biases[l], opt.v_biases[l], grads.biases[l]);
  }
}

Scalar grad_global_norm(const ParamGrads& grads) {
  Scalar sq = 0.0;
  for (const auto& w : grads.weights) sq += w.squaredNorm();
  for (const auto& b : grads.biases) sq += b.squaredNorm();
  return std::sqrt(sq);
}

void clip_grads(ParamGrads& grads, Scalar max_norm) {
  const Scalar norm = grad_global_norm(grads);
  if (norm <= max_norm || norm == 0.0) return;
  const Scalar scale = max_norm / norm;
  for (auto& w : grads.weights) w *= scale;
  for (auto& b : grads.biases) b *= scale;
}

void save_network(std::ostream& os, const Approximator& net) {
  write_tag(os, "CNET");
  write_pod<std::uint32_t>(os, 1);  // format version
  write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(net.layer_sizes_.size()));
  for (int n : net.layer_sizes_) write_pod<std::int32_t>(os, n);
  write_pod<double>(os, net.dropout_rate_);
  for (std::size_t l = 0; l < net.weights_.size(); ++l) {
    write_matrix(os, net.weights_[l]);
    write_vector(os, net.biases_[l]);
  }
  save_rng(os, net.rng_);
}

Approximator load_network(std::istream& is) {
  expect_tag(is, "CNET", "network");
  if (read_pod<std::uint32_t>(is) != 1) throw IoError("checkpoint: unsupported network version");
  const auto n_sizes = read_pod<std::uint32_t>(is);
  if (n_sizes < 2 || n_sizes > 64) throw IoError("checkpoint: bad layer count");
  Approximator net;
  net.layer_sizes_.resize(n_sizes);
  for (auto& n : net.layer_sizes_) n = read_pod<std::int32_t>(is);
  net.dropout_rate_ = read_pod<double>(is);
  net.weights_.resize(n_sizes - 1);
  net.biases_.resize(n_sizes - 1);
  for (std::size_t l = 0; l + 1 < n_sizes; ++l) {
    net.weights_[l] = read_matrix(is);
    net.biases_[l] = read_vector(is);
    if (net.weights_[l].rows() != net.layer_sizes_[l + 1] ||
        net.weights_[l].cols() != net.layer_sizes_[l]) {
      throw IoError("checkpoint: weight shape disagrees with layer sizes");
    }
  }
  net.rng_ = load_rng(is);
  return net;
}

void save_adam(std::ostream& os, const AdamState& opt) {
  write_tag(os, "CADM");
  write_pod<std::uint32_t>(os, 1);
  write_pod<double>(os, opt.learning_rate);
  write_pod<double>(os, opt.beta1);
  write_pod<double>(os, opt.beta2);
  write_pod<double>(os, opt.epsilon);
  write_pod<std::int64_t>(os, opt.step_count);
  write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(opt.m_weights.size()));
  for (std::size_t l = 0; l < opt.m_weights.size(); ++l) {
    write_matrix(os, opt.m_weights[l]);
    write_matrix(os, opt.v_weights[l]);
    write_vector(os, opt.m_biases[l]);
    write_vector(os, opt.v_biases[l]);
  }
}

AdamState load_adam(std::istream& is) {
  expect_tag(is, "CADM", "optimizer");
  if (read_pod<std::uint32_t>(is) != 1) throw IoError("checkpoint: unsupported optimizer version");
  AdamState opt;
  opt.learning_rate = read_pod<double>(is);
  opt.beta1 = read_pod<double>(is);
  opt.beta2 = read_pod<double>(is);
  opt.epsilon = read_pod<double>(is);
  opt.step_count = read_pod<std::int64_t>(is);
  const auto layers = read_pod<std::uint32_t>(is);
  if (layers > 64) throw IoError("checkpoint: bad optimizer layer count");
  opt.m_weights.resize(layers);
  opt.v_weights.resize(layers);
  opt.m_biases.resize(layers);
  opt.v_biases.resize(layers);
  for (std::size_t l = 0; l < layers; ++l) {
    opt.m_weights[l] = read_matrix(is);
    opt.v_weights[l] = read_matrix(is);
    opt.m_biases[l] = read_vector(is);
    opt.v_biases[l] = read_vector(is);
  }
  return opt;
}

void save_rng(std::ostream& os, const std::mt19937_64& gen) {
  std::ostringstream ss;
  ss << gen;
  write_tag(os, "CRNG");
  write_string(os, ss.str());
}

std::mt19937_64 load_rng(std::istream& is) {
  expect_tag(is, "CRNG", "rng");
  std::istringstream ss(read_string(is));
  std::mt19937_64 gen;
  ss >> gen;
  if (!ss) throw IoError("checkpoint: bad rng state");
  return gen;
}

}  // namespace ctcs
