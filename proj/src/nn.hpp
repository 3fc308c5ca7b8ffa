#pragma once

#include <cstdint>
#include <string>

#include "tensor.hpp"

namespace adec {

enum class Activation { Linear, Relu, Sigmoid, LeakyRelu };

struct LayerSpec {
  std::size_t in = 0;
  std::size_t out = 0;
  Activation act = Activation::Linear;
};

enum class NetRole { Encoder, Decoder, Discriminator, Critic };

struct Parameter {
  std::string name;
  Shape shape;
  std::vector<double> data;
  std::vector<double> grad;  // same length as data, zero-initialized

  std::size_t size() const { return data.size(); }
};

// Fully-connected network. Parameters are ordered W0, b0, W1, b1, ... and
// the flatten order (row-major within each tensor, tensors in that order) is
// the canonical one used by checkpoints and gradient diagnostics.
class Network {
 public:
  Network() = default;
  Network(NetRole role, std::vector<LayerSpec> layers, std::string prefix);

  // Records the forward pass on the tape. With trainable=false the
  // parameters enter the graph as constants, so backward() leaves them
  // untouched; this realizes per-loss gradient-flow isolation.
  Tensor forward(Tape& tape, Tensor x, bool trainable = true) const;

  NetRole role() const { return role_; }
  const std::vector<LayerSpec>& layers() const { return layers_; }
  std::vector<Parameter>& params() { return params_; }
  const std::vector<Parameter>& params() const { return params_; }
  std::size_t param_count() const;
  std::size_t input_dim() const { return layers_.front().in; }
  std::size_t output_dim() const { return layers_.back().out; }

  void zero_grads();
  bool grads_all_zero() const;
  std::vector<double> flatten_grads() const;
  std::vector<double> flatten_params() const;
  void assign_flat_params(const std::vector<double>& flat);

 private:
  NetRole role_ = NetRole::Encoder;
  std::vector<LayerSpec> layers_;
  mutable std::vector<Parameter> params_;
};

// Architectures. Encoder n-500-500-2000-d, ReLU hidden, linear bottleneck.
// Decoder mirrors it. Discriminator and critic are n-500-500-1 with
// LeakyReLU(0.2) hidden; sigmoid output for the discriminator, linear for
// the critic.
Network build_encoder(std::size_t n, std::size_t d = 10);
Network build_decoder(std::size_t n, std::size_t d = 10);
Network build_discriminator(std::size_t n);
Network build_critic(std::size_t n);

// He-uniform for relu/leaky-relu layers, Glorot-uniform for linear/sigmoid;
// biases zero. Reproducible from seed.
void init_params(Network& net, std::uint64_t seed);

struct OptimizerState {
  enum class Kind { SgdMomentum, Adam };

  Kind kind = Kind::SgdMomentum;
  double lr = 1e-3;
  double momentum = 0.9;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t step_count = 0;
  // Per-parameter buffers: momentum (SGD) or first/second moments (Adam).
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;

  static OptimizerState sgd(double lr, double momentum = 0.9);
  static OptimizerState adam(double lr);

  // Applies one update from the accumulated grads, then zeroes them.
  void step(Network& net);
};

}  // namespace adec
