#include "metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace adec {

std::vector<std::size_t> hungarian(const std::vector<double>& cost,
                                   std::size_t K) {
  if (K == 0) throw ContractError("hungarian: empty matrix");
  if (cost.size() != K * K)
    throw DimensionError("hungarian: matrix is not KxK");
  for (double c : cost)
    if (!std::isfinite(c)) throw DomainError("hungarian: non-finite cost");

  const double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> u(K + 1, 0.0), v(K + 1, 0.0);
  std::vector<std::size_t> p(K + 1, 0), way(K + 1, 0);
  for (std::size_t i = 1; i <= K; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(K + 1, kInf);
    std::vector<char> used(K + 1, 0);
    do {
      used[j0] = 1;
      std::size_t i0 = p[j0], j1 = 0;
      double delta = kInf;
      for (std::size_t j = 1; j <= K; ++j) {
        if (used[j]) continue;
        double cur = cost[(i0 - 1) * K + (j - 1)] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= K; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<std::size_t> assign(K, 0);
  for (std::size_t j = 1; j <= K; ++j)
    if (p[j] != 0) assign[p[j] - 1] = j - 1;
  return assign;
}

namespace {

std::size_t label_span(const std::vector<int>& a, const std::vector<int>& b) {
  int mx = 0;
  for (int v : a) mx = std::max(mx, v);
  for (int v : b) mx = std::max(mx, v);
  return static_cast<std::size_t>(mx + 1);
}

// cont[class * K + cluster]
std::vector<double> contingency(const std::vector<int>& y_true,
                                const std::vector<int>& y_pred,
                                std::size_t K) {
  std::vector<double> cont(K * K, 0.0);
  for (std::size_t i = 0; i < y_true.size(); ++i)
    cont[static_cast<std::size_t>(y_true[i]) * K +
         static_cast<std::size_t>(y_pred[i])] += 1.0;
  return cont;
}

}  // namespace

double accuracy(const std::vector<int>& y_true,
                const std::vector<int>& y_pred) {
  if (y_true.empty() || y_true.size() != y_pred.size())
    throw ContractError("accuracy: empty or mismatched label vectors");
  std::size_t K = label_span(y_true, y_pred);
  std::vector<double> cont = contingency(y_true, y_pred, K);
  // Profit matrix (cluster j matched to class c): maximize agreement.
  std::vector<double> cost(K * K);
  double mx = 0.0;
  for (double c : cont) mx = std::max(mx, c);
  for (std::size_t j = 0; j < K; ++j)
    for (std::size_t c = 0; c < K; ++c)
      cost[j * K + c] = mx - cont[c * K + j];
  std::vector<std::size_t> map = hungarian(cost, K);
  double correct = 0.0;
  for (std::size_t j = 0; j < K; ++j) correct += cont[map[j] * K + j];
  return correct / static_cast<double>(y_true.size());
}

std::vector<int> align_clusters(const std::vector<int>& y_true,
                                const std::vector<int>& y_pred) {
  if (y_true.empty() || y_true.size() != y_pred.size())
    throw ContractError("align_clusters: empty or mismatched label vectors");
  std::size_t K = label_span(y_true, y_pred);
  std::vector<double> cont = contingency(y_true, y_pred, K);
  std::vector<double> cost(K * K);
  double mx = 0.0;
  for (double c : cont) mx = std::max(mx, c);
  for (std::size_t j = 0; j < K; ++j)
    for (std::size_t c = 0; c < K; ++c)
      cost[j * K + c] = mx - cont[c * K + j];
  std::vector<std::size_t> map = hungarian(cost, K);
  return std::vector<int>(map.begin(), map.end());
}

double nmi(const std::vector<int>& y_true, const std::vector<int>& y_pred) {
  if (y_true.empty() || y_true.size() != y_pred.size())
    throw ContractError("nmi: empty or mismatched label vectors");
  std::size_t K = label_span(y_true, y_pred);
  double N = static_cast<double>(y_true.size());
  std::vector<double> cont = contingency(y_true, y_pred, K);
  std::vector<double> pa(K, 0.0), pb(K, 0.0);
  for (std::size_t a = 0; a < K; ++a)
    for (std::size_t b = 0; b < K; ++b) {
      pa[a] += cont[a * K + b];
      pb[b] += cont[a * K + b];
    }
  double ha = 0.0, hb = 0.0, mi = 0.0;
  for (std::size_t a = 0; a < K; ++a)
    if (pa[a] > 0.0) ha -= pa[a] / N * std::log(pa[a] / N);
  for (std::size_t b = 0; b < K; ++b)
    if (pb[b] > 0.0) hb -= pb[b] / N * std::log(pb[b] / N);
  for (std::size_t a = 0; a < K; ++a)
    for (std::size_t b = 0; b < K; ++b) {
      double nab = cont[a * K + b];
      if (nab > 0.0)
        mi += nab / N * std::log(N * nab / (pa[a] * pb[b]));
    }
  double denom = 0.5 * (ha + hb);
  if (denom <= 0.0) return 0.0;
  return mi / denom;
}

std::optional<double> gradient_cosine(const std::vector<double>& a,
                                      const std::vector<double>& b) {
  if (a.size() != b.size())
    throw DimensionError("gradient_cosine: length mismatch");
  double na = 0.0, nb = 0.0, dot = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    na += a[i] * a[i];
    nb += b[i] * b[i];
    dot += a[i] * b[i];
  }
  na = std::sqrt(na);
  nb = std::sqrt(nb);
  if (na < 1e-15 || nb < 1e-15) return std::nullopt;
  return dot / (na * nb);
}

DecompositionReport check_decomposition(const DecompositionInstance& inst) {
  std::size_t N = inst.N, n = inst.n, d = inst.d;
  if (N == 0 || n == 0 || d == 0)
    throw ContractError("check_decomposition: empty instance");
  std::size_t n1 = 0, n2 = 0;
  for (int a : inst.assign) (a == 0 ? n1 : n2) += 1;
  if (n1 == 0 || n2 == 0)
    throw ContractError("check_decomposition: a cluster is empty");

  // z_i = A x_i, zhat_i = A B z_i, xhat_i = B z_i.
  std::vector<double> Z(N * d, 0.0), Zhat(N * d, 0.0), Xhat(N * n, 0.0);
  for (std::size_t i = 0; i < N; ++i)
    for (std::size_t k = 0; k < d; ++k) {
      double s = 0.0;
      for (std::size_t c = 0; c < n; ++c)
        s += inst.A[k * n + c] * inst.X[i * n + c];
      Z[i * d + k] = s;
    }
  for (std::size_t i = 0; i < N; ++i)
    for (std::size_t c = 0; c < n; ++c) {
      double s = 0.0;
      for (std::size_t k = 0; k < d; ++k)
        s += inst.B[c * d + k] * Z[i * d + k];
      Xhat[i * n + c] = s;
    }
  for (std::size_t i = 0; i < N; ++i)
    for (std::size_t k = 0; k < d; ++k) {
      double s = 0.0;
      for (std::size_t c = 0; c < n; ++c)
        s += inst.A[k * n + c] * Xhat[i * n + c];
      Zhat[i * d + k] = s;
    }

  std::vector<double> zbar(d, 0.0), mu1(d, 0.0), mu2(d, 0.0);
  for (std::size_t i = 0; i < N; ++i)
    for (std::size_t k = 0; k < d; ++k) {
      zbar[k] += Z[i * d + k];
      (inst.assign[i] == 0 ? mu1[k] : mu2[k]) += Z[i * d + k];
    }
  for (std::size_t k = 0; k < d; ++k) {
    zbar[k] /= static_cast<double>(N);
    mu1[k] /= static_cast<double>(n1);
    mu2[k] /= static_cast<double>(n2);
  }

  auto sq = [d](const double* a, const double* b) {
    double s = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
      double diff = a[k] - b[k];
      s += diff * diff;
    }
    return s;
  };

  DecompositionReport rep;
  for (std::size_t i = 0; i < N; ++i) {
    const double* m = inst.assign[i] == 0 ? mu1.data() : mu2.data();
    rep.lk += sq(Z.data() + i * d, m);
    rep.lr_latent += sq(Z.data() + i * d, Zhat.data() + i * d);
  }
  for (std::size_t i = 0; i < N; ++i)
    for (std::size_t c = 0; c < n; ++c) {
      double diff = inst.X[i * n + c] - Xhat[i * n + c];
      rep.lr_data += diff * diff;
    }

  // Pairwise cluster distances d(Ca,Cb) = sum_{i in Ca} sum_{j in Cb}
  // ||z_i - z_j||^2.
  double d11 = 0.0, d22 = 0.0, d12 = 0.0;
  for (std::size_t i = 0; i < N; ++i)
    for (std::size_t j = 0; j < N; ++j) {
      double ds = sq(Z.data() + i * d, Z.data() + j * d);
      if (inst.assign[i] == 0 && inst.assign[j] == 0) d11 += ds;
      else if (inst.assign[i] == 1 && inst.assign[j] == 1) d22 += ds;
      else if (inst.assign[i] == 0 && inst.assign[j] == 1) d12 += ds;
    }
  double Nn = static_cast<double>(N);
  double fn1 = static_cast<double>(n1), fn2 = static_cast<double>(n2);
  rep.j1 = d12 / Nn + d11 / (2.0 * Nn) + d22 / (2.0 * Nn);
  rep.j2 = fn1 * fn2 / Nn *
           (2.0 * d12 / (fn1 * fn2) - d11 / (fn1 * fn1) - d22 / (fn2 * fn2));
  for (std::size_t i = 0; i < N; ++i) {
    rep.j3 += sq(Zhat.data() + i * d, zbar.data());
    double dot = 0.0;
    for (std::size_t k = 0; k < d; ++k)
      dot += (Z[i * d + k] - zbar[k]) * (Zhat[i * d + k] - zbar[k]);
    rep.j3 -= 2.0 * dot;
  }

  rep.rhs = (1.0 + inst.gamma) * rep.j1 - 0.5 * rep.j2 + inst.gamma * rep.j3;
  rep.lhs_latent = rep.lk + inst.gamma * rep.lr_latent;
  rep.lhs_data = rep.lk + inst.gamma * rep.lr_data;
  double denom_l =
      std::max({std::abs(rep.lhs_latent), std::abs(rep.rhs), 1e-12});
  rep.residual_latent_rel = std::abs(rep.lhs_latent - rep.rhs) / denom_l;
  rep.data_form_applicable = (d == n);
  if (rep.data_form_applicable) {
    double denom_d =
        std::max({std::abs(rep.lhs_data), std::abs(rep.rhs), 1e-12});
    rep.residual_data_rel = std::abs(rep.lhs_data - rep.rhs) / denom_d;
  } else {
    rep.residual_data_rel = std::numeric_limits<double>::quiet_NaN();
  }
  return rep;
}

double finite_diff_check(const std::function<double()>& loss, double* params,
                         std::size_t count,
                         const std::vector<double>& analytic_grad, double h,
                         std::size_t max_coords, std::uint64_t seed) {
  if (analytic_grad.size() != count)
    throw DimensionError("finite_diff_check: gradient length mismatch");
  std::vector<std::size_t> coords;
  if (count <= max_coords) {
    coords.resize(count);
    for (std::size_t i = 0; i < count; ++i) coords[i] = i;
  } else {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> ui(0, count - 1);
    coords.resize(max_coords);
    for (auto& c : coords) c = ui(rng);
  }
  double max_rel = 0.0;
  for (std::size_t c : coords) {
    double orig = params[c];
    params[c] = orig + h;
    double lp = loss();
    params[c] = orig - h;
    double lm = loss();
    params[c] = orig;
    double fd = (lp - lm) / (2.0 * h);
    double rel = std::abs(fd - analytic_grad[c]) /
                 std::max(std::abs(analytic_grad[c]), 1e-8);
    max_rel = std::max(max_rel, rel);
  }
  return max_rel;
}

namespace {

std::vector<double> encoder_kl_gradient(const Network& enc, Centroids& mu,
                                        const std::vector<double>& xb,
                                        std::size_t B, const double* p_rows) {
  Network& e = const_cast<Network&>(enc);
  e.zero_grads();
  Tape tape;
  Tensor x = tape.constant({B, enc.input_dim()}, xb);
  Tensor z = enc.forward(tape, x, true);
  Tensor muc = tape.constant({mu.K, mu.d}, mu.mu);
  Tensor q = build_soft_assign(tape, z, muc);
  Tensor kl = tape.scale(build_kl_from_q(tape, q, p_rows),
                         1.0 / static_cast<double>(B));
  tape.backward(kl);
  std::vector<double> g = enc.flatten_grads();
  e.zero_grads();
  return g;
}

}  // namespace

std::optional<double> delta_fr(const Network& enc, Centroids& mu,
                               const std::vector<double>& xb, std::size_t B,
                               const std::vector<double>& p_rows,
                               const std::vector<double>& onehot_rows) {
  std::vector<double> g_pseudo =
      encoder_kl_gradient(enc, mu, xb, B, p_rows.data());
  std::vector<double> g_sup =
      encoder_kl_gradient(enc, mu, xb, B, onehot_rows.data());
  return gradient_cosine(g_pseudo, g_sup);
}

std::optional<double> delta_fd(const Network& enc, const Network& dec,
                               const Network* disc, Centroids& mu,
                               const std::vector<double>& xb, std::size_t B,
                               const std::vector<double>& p_rows,
                               SelfSupervisedKind kind) {
  std::vector<double> g_pseudo =
      encoder_kl_gradient(enc, mu, xb, B, p_rows.data());
  Network& e = const_cast<Network&>(enc);
  e.zero_grads();
  {
    Tape tape;
    Tensor l = kind == SelfSupervisedKind::Reconstruction
                   ? reconstruction_loss(tape, xb, B, enc, dec)
                   : encoder_adversarial_term(tape, xb, B, enc, dec, *disc);
    tape.backward(l);
  }
  std::vector<double> g_self = enc.flatten_grads();
  e.zero_grads();
  return gradient_cosine(g_pseudo, g_self);
}

std::vector<double> onehot_targets(const std::vector<int>& cluster_to_class,
                                   const std::vector<int>& y_true_batch,
                                   std::size_t K) {
  // Invert the cluster->class map; unmapped classes fall back to their own
  // index so every row still carries a single 1.
  std::vector<int> class_to_cluster(K);
  for (std::size_t c = 0; c < K; ++c)
    class_to_cluster[c] = static_cast<int>(c % K);
  for (std::size_t j = 0; j < cluster_to_class.size() && j < K; ++j) {
    auto cls = static_cast<std::size_t>(cluster_to_class[j]);
    if (cls < K) class_to_cluster[cls] = static_cast<int>(j);
  }
  std::vector<double> out(y_true_batch.size() * K, 0.0);
  for (std::size_t i = 0; i < y_true_batch.size(); ++i) {
    auto cls = static_cast<std::size_t>(y_true_batch[i]) % K;
    out[i * K + static_cast<std::size_t>(class_to_cluster[cls])] = 1.0;
  }
  return out;
}

}  // namespace adec
