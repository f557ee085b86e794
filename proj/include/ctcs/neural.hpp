#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>
#include <vector>

#include "ctcs/types.hpp"

namespace ctcs {

enum class NetMode { Train, Eval };

struct ParamGrads {
  std::vector<MatX> weights;
  std::vector<VecX> biases;
};

/// Feed-forward network with sigmoid hidden layers and a linear output.
/// Dropout (inverted convention) is applied after each hidden activation in
/// training mode only, so evaluation needs no rescaling. The last training
/// or evaluation forward pass is cached for the parameter-gradient pass.
class Approximator {
 public:
  Approximator() = default;
  Approximator(std::vector<int> layer_sizes, std::uint64_t seed, Scalar dropout_rate = 0.15);

  /// Evaluates the network. Train mode draws a fresh dropout mask from the
  /// internal stream. Throws ContractViolation on an input size mismatch.
  VecX forward(const VecX& input, NetMode mode);

  /// Exact reverse-mode gradients of (upstream . output) with respect to
  /// every weight and bias, reusing the dropout mask of the paired forward
  /// pass. Throws ContractViolation when no forward pass has been cached.
  ParamGrads grad_params(const VecX& upstream) const;

  /// Gradient of the scalar output with respect to the input, evaluated
  /// without dropout. Only valid for single-output networks. Does not
  /// disturb the forward cache.
  VecX grad_input(const VecX& input) const;

  const std::vector<int>& layer_sizes() const { return layer_sizes_; }
  int input_size() const { return layer_sizes_.front(); }
  int output_size() const { return layer_sizes_.back(); }
  Scalar dropout_rate() const { return dropout_rate_; }

  std::size_t layer_count() const { return weights_.size(); }
  const MatX& weight(std::size_t l) const { return weights_[l]; }
  const VecX& bias(std::size_t l) const { return biases_[l]; }
  MatX& weight(std::size_t l) { return weights_[l]; }
  VecX& bias(std::size_t l) { return biases_[l]; }

  /// Hidden activations (pre-dropout) of the last cached forward pass.
  const std::vector<VecX>& cached_hidden() const;

  std::mt19937_64& rng() { return rng_; }
  const std::mt19937_64& rng() const { return rng_; }

  void set_all_zero();

  friend void save_network(std::ostream& os, const Approximator& net);
  friend Approximator load_network(std::istream& is);

 private:
  std::vector<int> layer_sizes_;
  std::vector<MatX> weights_;
  std::vector<VecX> biases_;
  Scalar dropout_rate_ = 0.15;
  std::mt19937_64 rng_;

  struct ForwardCache {
    bool valid = false;
    VecX input;
    std::vector<VecX> hidden;      // sigmoid outputs, pre-dropout
    std::vector<VecX> activations; // post-dropout layer inputs to the next layer
    std::vector<VecX> drop_scale;  // 0 or 1/(1-p) per hidden unit (all ones in eval)
  };
  ForwardCache cache_;
};

/// target <- tau * online + (1 - tau) * target, layer by layer.
void soft_update(Approximator& target, const Approximator& online, Scalar tau);

/// First/second moment accumulators mirroring a network's parameters.
struct AdamState {
  Scalar learning_rate = 1e-3;
  Scalar beta1 = 0.9;
  Scalar beta2 = 0.999;
  Scalar epsilon = 1e-8;
  long step_count = 0;
  std::vector<MatX> m_weights, v_weights;
  std::vector<VecX> m_biases, v_biases;
};

AdamState make_adam(const Approximator& net, Scalar learning_rate = 1e-3);

/// One bias-corrected Adam update in place.
void adam_step(Approximator& net, const ParamGrads& grads, AdamState& opt);

Scalar grad_global_norm(const ParamGrads& grads);
void clip_grads(ParamGrads& grads, Scalar max_norm);

// Versioned binary round trips; weights, moments, and the dropout stream
// state are restored bit-exactly.
void save_network(std::ostream& os, const Approximator& net);
Approximator load_network(std::istream& is);
void save_adam(std::ostream& os, const AdamState& opt);
AdamState load_adam(std::istream& is);
void save_rng(std::ostream& os, const std::mt19937_64& gen);
std::mt19937_64 load_rng(std::istream& is);

}  // namespace ctcs
