#include "nn.hpp"

#include <cmath>
#include <random>

namespace adec {

Network::Network(NetRole role, std::vector<LayerSpec> layers,
                 std::string prefix)
    : role_(role), layers_(std::move(layers)) {
  for (std::size_t l = 0; l + 1 < layers_.size(); ++l)
    if (layers_[l].out != layers_[l + 1].in)
      throw DimensionError("layer dims do not chain at layer " +
                           std::to_string(l));
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const LayerSpec& ls = layers_[l];
    if (ls.in == 0 || ls.out == 0)
      throw DimensionError("layer dims must be positive");
    Parameter w;
    w.name = prefix + "/W" + std::to_string(l);
    w.shape = {ls.in, ls.out};
    w.data.assign(ls.in * ls.out, 0.0);
    w.grad.assign(ls.in * ls.out, 0.0);
    Parameter b;
    b.name = prefix + "/b" + std::to_string(l);
    b.shape = {1, ls.out};
    b.data.assign(ls.out, 0.0);
    b.grad.assign(ls.out, 0.0);
    params_.push_back(std::move(w));
    params_.push_back(std::move(b));
  }
}

Tensor Network::forward(Tape& tape, Tensor x, bool trainable) const {
  Tensor h = x;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    Parameter& w = params_[2 * l];
    Parameter& b = params_[2 * l + 1];
    Tensor tw = trainable
                    ? tape.leaf(w.shape, w.data.data(), w.grad.data())
                    : tape.constant(w.shape, w.data);
    Tensor tb = trainable
                    ? tape.leaf(b.shape, b.data.data(), b.grad.data())
                    : tape.constant(b.shape, b.data);
    h = tape.add_row(tape.matmul(h, tw), tb);
    switch (layers_[l].act) {
      case Activation::Linear: break;
      case Activation::Relu: h = tape.relu(h); break;
      case Activation::Sigmoid: h = tape.sigmoid(h); break;
      case Activation::LeakyRelu: h = tape.leaky_relu(h, 0.2); break;
    }
  }
  return h;
}

std::size_t Network::param_count() const {
  std::size_t n = 0;
  for (const Parameter& p : params_) n += p.size();
  return n;
}

void Network::zero_grads() {
  for (Parameter& p : params_)
    std::fill(p.grad.begin(), p.grad.end(), 0.0);
}

bool Network::grads_all_zero() const {
  for (const Parameter& p : params_)
    for (double g : p.grad)
      if (g != 0.0) return false;
  return true;
}

std::vector<double> Network::flatten_grads() const {
  std::vector<double> out;
  out.reserve(param_count());
  for (const Parameter& p : params_)
    out.insert(out.end(), p.grad.begin(), p.grad.end());
  return out;
}

std::vector<double> Network::flatten_params() const {
  std::vector<double> out;
  out.reserve(param_count());
  for (const Parameter& p : params_)
    out.insert(out.end(), p.data.begin(), p.data.end());
  return out;
}

void Network::assign_flat_params(const std::vector<double>& flat) {
  if (flat.size() != param_count())
    throw DimensionError("flat parameter vector has wrong length");
  std::size_t off = 0;
  for (Parameter& p : params_) {
    std::copy(flat.begin() + static_cast<std::ptrdiff_t>(off),
              flat.begin() + static_cast<std::ptrdiff_t>(off + p.size()),
              p.data.begin());
    off += p.size();
  }
}

Network build_encoder(std::size_t n, std::size_t d) {
  if (n < 1) throw ContractError("encoder input dim must be >= 1");
  std::vector<LayerSpec> ls = {{n, 500, Activation::Relu},
                               {500, 500, Activation::Relu},
                               {500, 2000, Activation::Relu},
                               {2000, d, Activation::Linear}};
  return Network(NetRole::Encoder, std::move(ls), "phi");
}

Network build_decoder(std::size_t n, std::size_t d) {
  if (n < 1) throw ContractError("decoder output dim must be >= 1");
  std::vector<LayerSpec> ls = {{d, 2000, Activation::Relu},
                               {2000, 500, Activation::Relu},
                               {500, 500, Activation::Relu},
                               {500, n, Activation::Linear}};
  return Network(NetRole::Decoder, std::move(ls), "theta");
}

Network build_discriminator(std::size_t n) {
  if (n < 1) throw ContractError("discriminator input dim must be >= 1");
  std::vector<LayerSpec> ls = {{n, 500, Activation::LeakyRelu},
                               {500, 500, Activation::LeakyRelu},
                               {500, 1, Activation::Sigmoid}};
  return Network(NetRole::Discriminator, std::move(ls), "omega");
}

Network build_critic(std::size_t n) {
  if (n < 1) throw ContractError("critic input dim must be >= 1");
  std::vector<LayerSpec> ls = {{n, 500, Activation::LeakyRelu},
                               {500, 500, Activation::LeakyRelu},
                               {500, 1, Activation::Linear}};
  return Network(NetRole::Critic, std::move(ls), "psi");
}

void init_params(Network& net, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const auto& layers = net.layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const LayerSpec& ls = layers[l];
    bool he = ls.act == Activation::Relu || ls.act == Activation::LeakyRelu;
    double fan_in = static_cast<double>(ls.in);
    double fan_out = static_cast<double>(ls.out);
    double limit = he ? std::sqrt(6.0 / fan_in)
                      : std::sqrt(6.0 / (fan_in + fan_out));
    std::uniform_real_distribution<double> u(-limit, limit);
    Parameter& w = net.params()[2 * l];
    for (double& x : w.data) x = u(rng);
    Parameter& b = net.params()[2 * l + 1];
    std::fill(b.data.begin(), b.data.end(), 0.0);
  }
  net.zero_grads();
}

OptimizerState OptimizerState::sgd(double lr, double momentum) {
  OptimizerState s;
  s.kind = Kind::SgdMomentum;
  s.lr = lr;
  s.momentum = momentum;
  return s;
}

OptimizerState OptimizerState::adam(double lr) {
  OptimizerState s;
  s.kind = Kind::Adam;
  s.lr = lr;
  return s;
}

void OptimizerState::step(Network& net) {
  auto& params = net.params();
  if (m.empty()) {
    m.resize(params.size());
    for (std::size_t i = 0; i < params.size(); ++i)
      m[i].assign(params[i].size(), 0.0);
    if (kind == Kind::Adam) {
      v.resize(params.size());
      for (std::size_t i = 0; i < params.size(); ++i)
        v[i].assign(params[i].size(), 0.0);
    }
  }
  if (m.size() != params.size())
    throw ContractError("optimizer state does not match network");
  ++step_count;
  if (kind == Kind::SgdMomentum) {
    for (std::size_t i = 0; i < params.size(); ++i) {
      Parameter& p = params[i];
      for (std::size_t k = 0; k < p.size(); ++k) {
        m[i][k] = momentum * m[i][k] + p.grad[k];
        p.data[k] -= lr * m[i][k];
      }
    }
  } else {
    double c1 = 1.0 - std::pow(beta1, static_cast<double>(step_count));
    double c2 = 1.0 - std::pow(beta2, static_cast<double>(step_count));
    for (std::size_t i = 0; i < params.size(); ++i) {
      Parameter& p = params[i];
      for (std::size_t k = 0; k < p.size(); ++k) {
        double g = p.grad[k];
        m[i][k] = beta1 * m[i][k] + (1.0 - beta1) * g;
        v[i][k] = beta2 * v[i][k] + (1.0 - beta2) * g * g;
        double mhat = m[i][k] / c1;
        double vhat = v[i][k] / c2;
        p.data[k] -= lr * mhat / (std::sqrt(vhat) + eps);
      }
    }
  }
  net.zero_grads();
}

}  // namespace adec
