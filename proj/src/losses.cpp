#include "losses.hpp"

namespace adec {

InterpolationDraws make_draws(std::size_t batch, std::mt19937_64& rng,
                              double fixed_alpha) {
  InterpolationDraws d;
  d.alpha.resize(batch);
  d.gamma.resize(batch);
  std::uniform_real_distribution<double> ua(0.0, 0.5);
  std::uniform_real_distribution<double> ug(0.0, 1.0);
  for (std::size_t i = 0; i < batch; ++i)
    d.alpha[i] = fixed_alpha >= 0.0 ? fixed_alpha : ua(rng);
  for (std::size_t i = 0; i < batch; ++i) d.gamma[i] = ug(rng);
  return d;
}

Tensor mse_mean(Tape& tape, Tensor x, Tensor xhat) {
  std::size_t B = x.rows();
  return tape.scale(tape.sum(tape.square(tape.sub(x, xhat))),
                    1.0 / static_cast<double>(B));
}

namespace {

Tensor interpolant(Tape& tape, Tensor z, const InterpolationDraws& draws) {
  std::size_t B = z.rows();
  std::vector<double> a(draws.alpha.begin(), draws.alpha.begin() + B);
  std::vector<double> one_minus(B);
  for (std::size_t i = 0; i < B; ++i) one_minus[i] = 1.0 - a[i];
  Tensor ac = tape.constant({B, 1}, std::move(a));
  Tensor amc = tape.constant({B, 1}, std::move(one_minus));
  Tensor z2 = tape.flip_rows(z);
  return tape.add(tape.mul_col(z, ac), tape.mul_col(z2, amc));
}

}  // namespace

Tensor pretrain_ae_loss(Tape& tape, const std::vector<double>& xb,
                        std::size_t B, const Network& enc, const Network& dec,
                        const Network& critic, const InterpolationDraws& draws,
                        double lambda) {
  if (lambda < 0.0) throw ContractError("pretrain_ae_loss: lambda < 0");
  std::size_t n = enc.input_dim();
  Tensor x = tape.constant({B, n}, xb);
  Tensor z = enc.forward(tape, x, true);
  Tensor xhat = dec.forward(tape, z, true);
  Tensor rec = mse_mean(tape, x, xhat);
  if (lambda == 0.0) return rec;
  Tensor zmix = interpolant(tape, z, draws);
  Tensor xhat_a = dec.forward(tape, zmix, true);
  Tensor c = critic.forward(tape, xhat_a, false);
  Tensor reg = tape.scale(tape.sum(tape.square(c)),
                          lambda / static_cast<double>(B));
  return tape.add(rec, reg);
}

Tensor critic_loss(Tape& tape, const std::vector<double>& xb, std::size_t B,
                   const Network& enc, const Network& dec,
                   const Network& critic, const InterpolationDraws& draws) {
  std::size_t n = enc.input_dim();
  Tensor x = tape.constant({B, n}, xb);
  // Autoencoder outputs are constants here: gradients reach the critic only.
  Tensor z = enc.forward(tape, x, false);
  Tensor xhat = tape.detach(dec.forward(tape, z, false));
  Tensor zmix = interpolant(tape, z, draws);
  Tensor xhat_a = tape.detach(dec.forward(tape, zmix, false));

  Tensor c_interp = critic.forward(tape, xhat_a, true);
  std::vector<double> a(draws.alpha.begin(), draws.alpha.begin() + B);
  Tensor ac = tape.constant({B, 1}, std::move(a));
  Tensor t1 = tape.scale(tape.sum(tape.square(tape.sub(c_interp, ac))),
                         1.0 / static_cast<double>(B));

  std::vector<double> mix(B * n);
  for (std::size_t i = 0; i < B; ++i) {
    double g = draws.gamma[i];
    for (std::size_t k = 0; k < n; ++k)
      mix[i * n + k] = g * xb[i * n + k] + (1.0 - g) * xhat.value()[i * n + k];
  }
  Tensor mixc = tape.constant({B, n}, std::move(mix));
  Tensor c_mix = critic.forward(tape, mixc, true);
  Tensor t2 = tape.scale(tape.sum(tape.square(c_mix)),
                         1.0 / static_cast<double>(B));
  return tape.add(t1, t2);
}

Tensor encoder_cluster_loss(Tape& tape, const std::vector<double>& xb,
                            std::size_t B, const Network& enc,
                            const Network& dec, const Network& disc,
                            Centroids& mu, std::vector<double>& mu_grad,
                            const double* p_rows, bool train_mu,
                            Tensor* out_q) {
  std::size_t n = enc.input_dim();
  Tensor x = tape.constant({B, n}, xb);
  Tensor z = enc.forward(tape, x, true);
  Tensor muT = train_mu
                   ? tape.leaf({mu.K, mu.d}, mu.mu.data(), mu_grad.data())
                   : tape.constant({mu.K, mu.d}, mu.mu);
  Tensor q = build_soft_assign(tape, z, muT);
  if (out_q) *out_q = q;
  Tensor kl = tape.scale(build_kl_from_q(tape, q, p_rows),
                         1.0 / static_cast<double>(B));
  Tensor xhat = dec.forward(tape, z, false);
  Tensor d = disc.forward(tape, xhat, false);
  Tensor adv = tape.mean(tape.log(
      tape.clamp_min(tape.add_scalar(tape.scale(d, -1.0), 1.0), kLogClamp)));
  return tape.add(kl, adv);
}

Tensor decoder_loss(Tape& tape, const std::vector<double>& xb, std::size_t B,
                    const Network& enc, const Network& dec) {
  std::size_t n = enc.input_dim();
  Tensor x = tape.constant({B, n}, xb);
  Tensor z = tape.detach(enc.forward(tape, x, false));
  Tensor xhat = dec.forward(tape, z, true);
  return mse_mean(tape, x, xhat);
}

Tensor discriminator_value_neg(Tape& tape, const std::vector<double>& xb,
                               std::size_t B, const Network& enc,
                               const Network& dec, const Network& disc) {
  std::size_t n = enc.input_dim();
  Tensor x = tape.constant({B, n}, xb);
  Tensor d_real = disc.forward(tape, x, true);
  Tensor z = enc.forward(tape, x, false);
  Tensor xhat = tape.detach(dec.forward(tape, z, false));
  Tensor d_fake = disc.forward(tape, xhat, true);
  Tensor t1 = tape.mean(tape.log(tape.clamp_min(d_real, kLogClamp)));
  Tensor t2 = tape.mean(tape.log(tape.clamp_min(
      tape.add_scalar(tape.scale(d_fake, -1.0), 1.0), kLogClamp)));
  return tape.scale(tape.add(t1, t2), -1.0);
}

Tensor encoder_adversarial_term(Tape& tape, const std::vector<double>& xb,
                                std::size_t B, const Network& enc,
                                const Network& dec, const Network& disc) {
  std::size_t n = enc.input_dim();
  Tensor x = tape.constant({B, n}, xb);
  Tensor z = enc.forward(tape, x, true);
  Tensor xhat = dec.forward(tape, z, false);
  Tensor d = disc.forward(tape, xhat, false);
  return tape.mean(tape.log(
      tape.clamp_min(tape.add_scalar(tape.scale(d, -1.0), 1.0), kLogClamp)));
}

Tensor reconstruction_loss(Tape& tape, const std::vector<double>& xb,
                           std::size_t B, const Network& enc,
                           const Network& dec) {
  std::size_t n = enc.input_dim();
  Tensor x = tape.constant({B, n}, xb);
  Tensor z = enc.forward(tape, x, true);
  Tensor xhat = dec.forward(tape, z, true);
  return mse_mean(tape, x, xhat);
}

}  // namespace adec
