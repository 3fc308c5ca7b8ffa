#pragma once

#include <random>

#include "clustering.hpp"
#include "nn.hpp"

namespace adec {

// Per-sample interpolation coefficients for one pretraining step. Pairs are
// formed by reversing the batch against itself, so under shuffling every
// pairing is equally likely.
struct InterpolationDraws {
  std::vector<double> alpha;  // in [0, 0.5]
  std::vector<double> gamma;  // in [0, 1]
};

InterpolationDraws make_draws(std::size_t batch, std::mt19937_64& rng,
                              double fixed_alpha = -1.0);

// Mean over batch rows of the squared distance between x and xhat.
Tensor mse_mean(Tape& tape, Tensor x, Tensor xhat);

// Reconstruction + critic-fooling regularizer. Gradients flow to encoder
// and decoder only; the critic enters as constants.
Tensor pretrain_ae_loss(Tape& tape, const std::vector<double>& xb,
                        std::size_t B, const Network& enc, const Network& dec,
                        const Network& critic, const InterpolationDraws& draws,
                        double lambda);

// Critic regression target alpha on interpolants, 0 on real/reconstruction
// mixes. Interpolants and reconstructions are detached; gradients flow to
// the critic only.
Tensor critic_loss(Tape& tape, const std::vector<double>& xb, std::size_t B,
                   const Network& enc, const Network& dec,
                   const Network& critic, const InterpolationDraws& draws);

// KL(P||Q)/B + mean log(1 - D(G(E(x)))). Gradients flow to the encoder and,
// when train_mu is set, the centroids; decoder and discriminator enter as
// constants. P rows are B x K constants. The built Q is returned through
// out_q when requested.
Tensor encoder_cluster_loss(Tape& tape, const std::vector<double>& xb,
                            std::size_t B, const Network& enc,
                            const Network& dec, const Network& disc,
                            Centroids& mu, std::vector<double>& mu_grad,
                            const double* p_rows, bool train_mu,
                            Tensor* out_q = nullptr);

// mean ||x - G(detach(E(x)))||^2; gradients flow to the decoder only.
Tensor decoder_loss(Tape& tape, const std::vector<double>& xb, std::size_t B,
                    const Network& enc, const Network& dec);

// Negation of V_D = mean log D(x) + mean log(1 - D(G(E(x)))); minimizing the
// returned scalar ascends V_D w.r.t. the discriminator. Encoder and decoder
// enter as constants. Log arguments are clamped at 1e-12.
Tensor discriminator_value_neg(Tape& tape, const std::vector<double>& xb,
                               std::size_t B, const Network& enc,
                               const Network& dec, const Network& disc);

// The adversarial regularizer of the encoder loss alone:
// mean log(1 - D(G(E(x)))), gradients to the encoder only.
Tensor encoder_adversarial_term(Tape& tape, const std::vector<double>& xb,
                                std::size_t B, const Network& enc,
                                const Network& dec, const Network& disc);

// Full reconstruction through the encoder (the IDEC self-supervised term).
Tensor reconstruction_loss(Tape& tape, const std::vector<double>& xb,
                           std::size_t B, const Network& enc,
                           const Network& dec);

inline constexpr double kLogClamp = 1e-12;

}  // namespace adec
