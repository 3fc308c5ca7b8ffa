#include "clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace adec {

SoftAssignment soft_assign(const std::vector<double>& Z, std::size_t N,
                           std::size_t d, const Centroids& mu, double alpha) {
  if (mu.d != d) throw DimensionError("soft_assign: embedding dims differ");
  SoftAssignment out;
  out.N = N;
  out.K = mu.K;
  out.alpha = alpha;
  out.Q.resize(N * mu.K);
  double expo = -(alpha + 1.0) / 2.0;
  for (std::size_t i = 0; i < N; ++i) {
    double rowsum = 0.0;
    for (std::size_t j = 0; j < mu.K; ++j) {
      double sq = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        double diff = Z[i * d + k] - mu.mu[j * d + k];
        sq += diff * diff;
      }
      double v = std::pow(1.0 + sq / alpha, expo);
      out.Q[i * mu.K + j] = v;
      rowsum += v;
    }
    for (std::size_t j = 0; j < mu.K; ++j) out.Q[i * mu.K + j] /= rowsum;
  }
  return out;
}

TargetDistribution target_distribution(const SoftAssignment& q) {
  TargetDistribution out;
  out.N = q.N;
  out.K = q.K;
  out.P.resize(q.N * q.K);
  std::vector<double> f(q.K, 0.0);
  for (std::size_t i = 0; i < q.N; ++i)
    for (std::size_t j = 0; j < q.K; ++j) f[j] += q.Q[i * q.K + j];
  for (std::size_t i = 0; i < q.N; ++i) {
    double rowsum = 0.0;
    for (std::size_t j = 0; j < q.K; ++j) {
      double v = q.Q[i * q.K + j];
      v = v * v / f[j];
      out.P[i * q.K + j] = v;
      rowsum += v;
    }
    for (std::size_t j = 0; j < q.K; ++j) out.P[i * q.K + j] /= rowsum;
  }
  return out;
}

double kl_loss_rows(const double* P, const double* Q, std::size_t N,
                    std::size_t K) {
  double s = 0.0;
  for (std::size_t i = 0; i < N * K; ++i)
    if (P[i] > 0.0) s += P[i] * std::log(P[i] / Q[i]);
  return s;
}

double kl_loss(const TargetDistribution& p, const SoftAssignment& q) {
  if (p.N != q.N || p.K != q.K)
    throw DimensionError("kl_loss: shape mismatch");
  return kl_loss_rows(p.P.data(), q.Q.data(), p.N, p.K);
}

std::vector<int> predict_labels_rows(const double* Q, std::size_t N,
                                     std::size_t K) {
  std::vector<int> out(N, 0);
  for (std::size_t i = 0; i < N; ++i) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < K; ++j)
      if (Q[i * K + j] > Q[i * K + best]) best = j;
    out[i] = static_cast<int>(best);
  }
  return out;
}

std::vector<int> predict_labels(const SoftAssignment& q) {
  return predict_labels_rows(q.Q.data(), q.N, q.K);
}

namespace {

double sq_dist(const double* a, const double* b, std::size_t d) {
  double s = 0.0;
  for (std::size_t k = 0; k < d; ++k) {
    double diff = a[k] - b[k];
    s += diff * diff;
  }
  return s;
}

struct LloydResult {
  std::vector<double> mu;
  double wcss = std::numeric_limits<double>::infinity();
};

LloydResult lloyd_once(const std::vector<double>& Z, std::size_t N,
                       std::size_t d, std::size_t K, std::mt19937_64& rng) {
  // k-means++ seeding.
  std::vector<double> mu(K * d);
  std::vector<double> dist2(N, std::numeric_limits<double>::infinity());
  std::uniform_int_distribution<std::size_t> ui(0, N - 1);
  std::size_t first = ui(rng);
  std::copy(Z.begin() + first * d, Z.begin() + (first + 1) * d, mu.begin());
  for (std::size_t c = 1; c < K; ++c) {
    double total = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      double ds = sq_dist(Z.data() + i * d, mu.data() + (c - 1) * d, d);
      dist2[i] = std::min(dist2[i], ds);
      total += dist2[i];
    }
    std::uniform_real_distribution<double> ur(0.0, total);
    double r = ur(rng);
    std::size_t pick = N - 1;
    double acc = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      acc += dist2[i];
      if (acc >= r) {
        pick = i;
        break;
      }
    }
    std::copy(Z.begin() + pick * d, Z.begin() + (pick + 1) * d,
              mu.begin() + c * d);
  }

  std::vector<int> assign(N, -1);
  std::vector<std::size_t> counts(K);
  std::vector<double> sums(K * d);
  for (int iter = 0; iter < 300; ++iter) {
    for (std::size_t i = 0; i < N; ++i) {
      std::size_t best = 0;
      double bd = sq_dist(Z.data() + i * d, mu.data(), d);
      for (std::size_t j = 1; j < K; ++j) {
        double ds = sq_dist(Z.data() + i * d, mu.data() + j * d, d);
        if (ds < bd) {
          bd = ds;
          best = j;
        }
      }
      assign[i] = static_cast<int>(best);
    }
    std::fill(counts.begin(), counts.end(), std::size_t{0});
    std::fill(sums.begin(), sums.end(), 0.0);
    for (std::size_t i = 0; i < N; ++i) {
      auto j = static_cast<std::size_t>(assign[i]);
      ++counts[j];
      for (std::size_t k = 0; k < d; ++k) sums[j * d + k] += Z[i * d + k];
    }
    double shift = 0.0;
    for (std::size_t j = 0; j < K; ++j) {
      if (counts[j] == 0) {
        // Reseed to the point farthest from its centroid.
        std::size_t far = 0;
        double fd = -1.0;
        for (std::size_t i = 0; i < N; ++i) {
          double ds = sq_dist(Z.data() + i * d,
                              mu.data() + static_cast<std::size_t>(assign[i]) * d, d);
          if (ds > fd) {
            fd = ds;
            far = i;
          }
        }
        for (std::size_t k = 0; k < d; ++k) {
          double nv = Z[far * d + k];
          shift += std::abs(nv - mu[j * d + k]);
          mu[j * d + k] = nv;
        }
        continue;
      }
      for (std::size_t k = 0; k < d; ++k) {
        double nv = sums[j * d + k] / static_cast<double>(counts[j]);
        shift += std::abs(nv - mu[j * d + k]);
        mu[j * d + k] = nv;
      }
    }
    if (shift < 1e-6) break;
  }

  LloydResult res;
  res.mu = std::move(mu);
  res.wcss = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    double bd = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < K; ++j)
      bd = std::min(bd, sq_dist(Z.data() + i * d, res.mu.data() + j * d, d));
    res.wcss += bd;
  }
  return res;
}

}  // namespace

Centroids kmeans_init(const std::vector<double>& Z, std::size_t N,
                      std::size_t d, std::size_t K, std::size_t restarts,
                      std::uint64_t seed) {
  if (N < K) throw ContractError("kmeans_init: fewer points than clusters");
  if (restarts == 0) restarts = 1;
  std::mt19937_64 rng(seed);
  LloydResult best;
  for (std::size_t r = 0; r < restarts; ++r) {
    LloydResult res = lloyd_once(Z, N, d, K, rng);
    if (res.wcss < best.wcss) best = std::move(res);
  }
  Centroids c;
  c.K = K;
  c.d = d;
  c.mu = std::move(best.mu);
  return c;
}

std::vector<int> kmeans_assign(const std::vector<double>& Z, std::size_t N,
                               std::size_t d, const Centroids& mu) {
  std::vector<int> out(N);
  for (std::size_t i = 0; i < N; ++i) {
    std::size_t best = 0;
    double bd = sq_dist(Z.data() + i * d, mu.mu.data(), d);
    for (std::size_t j = 1; j < mu.K; ++j) {
      double ds = sq_dist(Z.data() + i * d, mu.mu.data() + j * d, d);
      if (ds < bd) {
        bd = ds;
        best = j;
      }
    }
    out[i] = static_cast<int>(best);
  }
  return out;
}

std::vector<double> grad_le_z(const double* z_i, const Centroids& mu,
                              const double* p_row, const double* q_row,
                              const double* adv_term) {
  std::vector<double> g(mu.d, 0.0);
  for (std::size_t j = 0; j < mu.K; ++j) {
    double sq = sq_dist(z_i, mu.mu.data() + j * mu.d, mu.d);
    double w = 2.0 * (p_row[j] - q_row[j]) / (1.0 + sq);
    for (std::size_t k = 0; k < mu.d; ++k)
      g[k] += w * (z_i[k] - mu.mu[j * mu.d + k]);
  }
  if (adv_term)
    for (std::size_t k = 0; k < mu.d; ++k) g[k] += adv_term[k];
  return g;
}

std::vector<double> grad_le_mu(const std::vector<double>& Z, std::size_t N,
                               std::size_t d, const Centroids& mu,
                               std::size_t j, const double* P,
                               const double* Q) {
  std::vector<double> g(d, 0.0);
  for (std::size_t i = 0; i < N; ++i) {
    double sq = sq_dist(Z.data() + i * d, mu.mu.data() + j * d, d);
    double w = -2.0 * (P[i * mu.K + j] - Q[i * mu.K + j]) / (1.0 + sq);
    for (std::size_t k = 0; k < d; ++k)
      g[k] += w * (Z[i * d + k] - mu.mu[j * d + k]);
  }
  return g;
}

Tensor build_soft_assign(Tape& tape, Tensor Z, Tensor mu) {
  // ||z_i - mu_j||^2 = ||z_i||^2 + ||mu_j||^2 - 2 z_i . mu_j
  Tensor zsq = tape.sum_rows(tape.square(Z));              // B x 1
  Tensor msq = tape.transpose(tape.sum_rows(tape.square(mu)));  // 1 x K
  Tensor cross = tape.scale(tape.matmul(Z, tape.transpose(mu)), -2.0);
  Tensor sq = tape.add_col(tape.add_row(cross, msq), zsq);
  Tensor unnorm = tape.recip(tape.add_scalar(sq, 1.0));  // alpha = 1 kernel
  return tape.div_col(unnorm, tape.sum_rows(unnorm));
}

Tensor build_kl_from_q(Tape& tape, Tensor Q, const double* P) {
  std::size_t B = Q.rows(), K = Q.cols();
  std::vector<double> pvals(P, P + B * K);
  std::vector<double> plogp(B * K, 0.0);
  for (std::size_t i = 0; i < B * K; ++i)
    if (pvals[i] > 0.0) plogp[i] = pvals[i] * std::log(pvals[i]);
  Tensor pc = tape.constant({B, K}, std::move(pvals));
  Tensor cross = tape.sum(tape.mul(pc, tape.log(Q)));
  double const_part = 0.0;
  for (double v : plogp) const_part += v;
  return tape.add_scalar(tape.scale(cross, -1.0), const_part);
}

}  // namespace adec
