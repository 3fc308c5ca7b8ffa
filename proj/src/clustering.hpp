#pragma once

#include <cstdint>

#include "tensor.hpp"

namespace adec {

// N x K row-stochastic soft assignment (Student-t kernel) with its
// companion target distribution.
struct SoftAssignment {
  std::vector<double> Q;  // N x K
  std::size_t N = 0;
  std::size_t K = 0;
  double alpha = 1.0;  // Student-t degrees of freedom
};

struct TargetDistribution {
  std::vector<double> P;  // N x K
  std::size_t N = 0;
  std::size_t K = 0;
};

struct Centroids {
  std::vector<double> mu;  // K x d
  std::size_t K = 0;
  std::size_t d = 0;
};

// q_ij = (1 + ||z_i - mu_j||^2 / alpha)^(-(alpha+1)/2), row-normalized.
SoftAssignment soft_assign(const std::vector<double>& Z, std::size_t N,
                           std::size_t d, const Centroids& mu,
                           double alpha = 1.0);

// p_ij = (q_ij^2 / f_j) / sum_j' (q_ij'^2 / f_j'), f_j = sum_i q_ij.
TargetDistribution target_distribution(const SoftAssignment& q);

// sum_ij p_ij log(p_ij / q_ij), with 0 log 0 := 0.
double kl_loss(const TargetDistribution& p, const SoftAssignment& q);
double kl_loss_rows(const double* P, const double* Q, std::size_t N,
                    std::size_t K);

// Per-row argmax, ties broken toward the lowest index.
std::vector<int> predict_labels(const SoftAssignment& q);
std::vector<int> predict_labels_rows(const double* Q, std::size_t N,
                                     std::size_t K);

// k-means++ seeding + Lloyd iterations, best of `restarts` by
// within-cluster sum of squares. Empty clusters are reseeded to the point
// farthest from its centroid.
Centroids kmeans_init(const std::vector<double>& Z, std::size_t N,
                      std::size_t d, std::size_t K, std::size_t restarts,
                      std::uint64_t seed);
std::vector<int> kmeans_assign(const std::vector<double>& Z, std::size_t N,
                               std::size_t d, const Centroids& mu);

// Closed-form gradient of the clustering part of L_E w.r.t. z_i (alpha = 1):
//   2 sum_j (1 + ||z_i - mu_j||^2)^-1 (p_ij - q_ij)(z_i - mu_j)
// plus the caller-supplied adversarial term.
std::vector<double> grad_le_z(const double* z_i, const Centroids& mu,
                              const double* p_row, const double* q_row,
                              const double* adv_term = nullptr);

// Closed-form gradient of L_E w.r.t. mu_j (alpha = 1):
//   -2 sum_i (1 + ||z_i - mu_j||^2)^-1 (p_ij - q_ij)(z_i - mu_j)
std::vector<double> grad_le_mu(const std::vector<double>& Z, std::size_t N,
                               std::size_t d, const Centroids& mu,
                               std::size_t j, const double* P,
                               const double* Q);

// Tape builders for the autodiff route (alpha = 1). Z is B x d on the tape,
// mu is K x d on the tape.
Tensor build_soft_assign(Tape& tape, Tensor Z, Tensor mu);
// KL(P||Q) as a plain sum over the given rows; P entries are constants.
Tensor build_kl_from_q(Tape& tape, Tensor Q, const double* P);

}  // namespace adec
