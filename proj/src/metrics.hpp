#pragma once

#include <functional>
#include <optional>

#include "losses.hpp"

namespace adec {

// Minimum-cost perfect assignment on a square cost matrix; returns the
// column assigned to each row.
std::vector<std::size_t> hungarian(const std::vector<double>& cost,
                                   std::size_t K);

// Clustering accuracy under the optimal cluster-to-class permutation.
double accuracy(const std::vector<int>& y_true, const std::vector<int>& y_pred);

// Best map from predicted cluster id to true class id (maximum agreement).
std::vector<int> align_clusters(const std::vector<int>& y_true,
                                const std::vector<int>& y_pred);

// I(a;b) / (0.5 (H(a)+H(b))), natural log; 0 when both entropies vanish.
double nmi(const std::vector<int>& y_true, const std::vector<int>& y_pred);

// a.b / (|a||b|); empty when either norm is below 1e-15 (undefined, recorded
// as missing rather than zero).
std::optional<double> gradient_cosine(const std::vector<double>& a,
                                      const std::vector<double>& b);

// Linear-autoencoder decomposition instance: encoder A (d x n, orthonormal
// rows), decoder B (n x d), two-cluster assignment, balance gamma.
struct DecompositionInstance {
  std::vector<double> X;  // N x n
  std::size_t N = 0;
  std::size_t n = 0;
  std::vector<double> A;  // d x n
  std::vector<double> B;  // n x d
  std::size_t d = 0;
  std::vector<int> assign;  // 0/1 per point, both clusters non-empty
  double gamma = 0.0;
};

struct DecompositionReport {
  double lk = 0.0;        // latent k-means loss
  double lr_latent = 0.0; // sum ||z_i - zhat_i||^2
  double lr_data = 0.0;   // sum ||x_i - xhat_i||^2
  double j1 = 0.0, j2 = 0.0, j3 = 0.0;
  double lhs_latent = 0.0, lhs_data = 0.0, rhs = 0.0;
  double residual_latent_rel = 0.0;
  double residual_data_rel = 0.0;  // NaN when d != n
  bool data_form_applicable = false;
};

DecompositionReport check_decomposition(const DecompositionInstance& inst);

// Central-difference check of an analytic gradient. loss() must re-evaluate
// the scalar loss from the current contents of params. At most max_coords
// coordinates are probed (all of them when the group is small). Relative
// error uses denominator max(|analytic|, 1e-8).
double finite_diff_check(const std::function<double()>& loss, double* params,
                         std::size_t count,
                         const std::vector<double>& analytic_grad,
                         double h = 1e-5, std::size_t max_coords = 200,
                         std::uint64_t seed = 0);

// Cosine between the pseudo-supervised KL gradient (targets p_rows) and the
// same loss with Hungarian-aligned one-hot ground-truth rows, both w.r.t.
// the encoder parameters.
std::optional<double> delta_fr(const Network& enc, Centroids& mu,
                               const std::vector<double>& xb, std::size_t B,
                               const std::vector<double>& p_rows,
                               const std::vector<double>& onehot_rows);

enum class SelfSupervisedKind { Reconstruction, Adversarial };

// Cosine between the KL clustering gradient and the self-supervised
// gradient (reconstruction for IDEC, the adversarial regularizer for ADEC),
// both w.r.t. the encoder parameters.
std::optional<double> delta_fd(const Network& enc, const Network& dec,
                               const Network* disc, Centroids& mu,
                               const std::vector<double>& xb, std::size_t B,
                               const std::vector<double>& p_rows,
                               SelfSupervisedKind kind);

// One-hot targets for a batch: row i has a 1 at the cluster mapped to the
// sample's true class (inverse of align_clusters' map).
std::vector<double> onehot_targets(const std::vector<int>& cluster_to_class,
                                   const std::vector<int>& y_true_batch,
                                   std::size_t K);

}  // namespace adec
