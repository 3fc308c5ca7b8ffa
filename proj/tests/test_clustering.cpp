#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <random>

#include "clustering.hpp"
#include "doctest.h"

using namespace adec;

namespace {

SoftAssignment random_q(std::mt19937_64& rng, std::size_t N, std::size_t K) {
  std::uniform_real_distribution<double> u(0.05, 1.0);
  SoftAssignment s;
  s.N = N;
  s.K = K;
  s.Q.resize(N * K);
  for (std::size_t i = 0; i < N; ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < K; ++j) sum += (s.Q[i * K + j] = u(rng));
    for (std::size_t j = 0; j < K; ++j) s.Q[i * K + j] /= sum;
  }
  return s;
}

}  // namespace

TEST_CASE("soft assignment values") {
  Centroids mu{{1, 0, 3, 0}, 2, 2};
  std::vector<double> z{0, 0};
  SoftAssignment s = soft_assign(z, 1, 2, mu, 1.0);
  CHECK(s.Q[0] == doctest::Approx(5.0 / 6.0).epsilon(1e-12));
  CHECK(s.Q[1] == doctest::Approx(1.0 / 6.0).epsilon(1e-12));

  Centroids one{{2, 2}, 1, 2};
  SoftAssignment sk1 = soft_assign(z, 1, 2, one, 1.0);
  CHECK(sk1.Q[0] == 1.0);

  Centroids sym{{-1, 0, 1, 0}, 2, 2};
  SoftAssignment ss = soft_assign(z, 1, 2, sym, 1.0);
  CHECK(ss.Q[0] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("target distribution values") {
  SoftAssignment s;
  s.N = 2;
  s.K = 2;
  s.Q = {0.8, 0.2, 0.4, 0.6};
  TargetDistribution p = target_distribution(s);
  CHECK(p.P[0] == doctest::Approx(0.9143).epsilon(1e-4));
  CHECK(p.P[1] == doctest::Approx(0.0857).epsilon(2e-3));
  CHECK(p.P[2] == doctest::Approx(0.2286).epsilon(1e-3));
  CHECK(p.P[3] == doctest::Approx(0.7714).epsilon(1e-4));

  SoftAssignment onehot;
  onehot.N = 2;
  onehot.K = 2;
  onehot.Q = {1, 0, 0, 1};
  TargetDistribution po = target_distribution(onehot);
  CHECK(po.P == onehot.Q);

  SoftAssignment uni;
  uni.N = 3;
  uni.K = 2;
  uni.Q.assign(6, 0.5);
  for (double v : target_distribution(uni).P)
    CHECK(v == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("kl loss values") {
  SoftAssignment q;
  q.N = 1;
  q.K = 2;
  q.Q = {0.5, 0.5};
  TargetDistribution peq;
  peq.N = 1;
  peq.K = 2;
  peq.P = {0.5, 0.5};
  CHECK(kl_loss(peq, q) == doctest::Approx(0.0).epsilon(1e-15));

  TargetDistribution ph;
  ph.N = 1;
  ph.K = 2;
  ph.P = {1.0, 0.0};
  CHECK(kl_loss(ph, q) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("distribution invariants over randomized calls") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> g(-3, 3);
  double min_kl = 1.0;
  for (int t = 0; t < 10000; ++t) {
    std::size_t N = 1 + rng() % 6, d = 1 + rng() % 4, K = 2 + rng() % 4;
    std::vector<double> Z(N * d);
    for (double& v : Z) v = g(rng);
    Centroids mu;
    mu.K = K;
    mu.d = d;
    mu.mu.resize(K * d);
    for (double& v : mu.mu) v = g(rng);
    SoftAssignment s = soft_assign(Z, N, d, mu, 1.0);
    TargetDistribution p = target_distribution(s);
    for (std::size_t i = 0; i < N; ++i) {
      double qs = 0.0, ps = 0.0;
      for (std::size_t j = 0; j < K; ++j) {
        qs += s.Q[i * K + j];
        ps += p.P[i * K + j];
        REQUIRE(s.Q[i * K + j] > 0.0);
      }
      REQUIRE(std::abs(qs - 1.0) < 1e-9);
      REQUIRE(std::abs(ps - 1.0) < 1e-9);
    }
    min_kl = std::min(min_kl, kl_loss(p, s));
  }
  CHECK(min_kl >= -1e-12);
}

TEST_CASE("label prediction and tie rule") {
  SoftAssignment s;
  s.N = 3;
  s.K = 2;
  s.Q = {0.2, 0.8, 0.5, 0.5, 1.0, 0.0};
  CHECK(predict_labels(s) == std::vector<int>{1, 0, 0});
}

TEST_CASE("k-means on separated 1-D blobs") {
  std::vector<double> Z{0.0, 0.1, 0.2, 10.0, 10.1, 10.2};
  Centroids mu = kmeans_init(Z, 6, 1, 2, 20, 4);
  double lo = std::min(mu.mu[0], mu.mu[1]);
  double hi = std::max(mu.mu[0], mu.mu[1]);
  CHECK(lo == doctest::Approx(0.1).epsilon(1e-9));
  CHECK(hi == doctest::Approx(10.1).epsilon(1e-9));

  Centroids again = kmeans_init(Z, 6, 1, 2, 20, 4);
  CHECK(mu.mu == again.mu);

  Centroids own = kmeans_init(Z, 6, 1, 6, 5, 1);
  std::vector<int> lab = kmeans_assign(Z, 6, 1, own);
  for (std::size_t i = 0; i < 6; ++i)
    CHECK(std::abs(own.mu[std::size_t(lab[i])] - Z[i]) < 1e-12);

  CHECK_THROWS_AS(kmeans_init(Z, 6, 1, 7, 1, 0), ContractError);
}

TEST_CASE("closed-form gradients match finite differences and autodiff") {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> g(0.0, 1.0);
  double worst_fd = 0.0, worst_ad = 0.0;
  for (int t = 0; t < 30; ++t) {
    std::size_t N = 2 + rng() % 8, d = 1 + rng() % 5, K = 2 + rng() % 4;
    std::vector<double> Z(N * d);
    for (double& v : Z) v = g(rng);
    Centroids mu;
    mu.K = K;
    mu.d = d;
    mu.mu.resize(K * d);
    for (double& v : mu.mu) v = g(rng);
    SoftAssignment S = soft_assign(Z, N, d, mu, 1.0);
    TargetDistribution P = target_distribution(S);

    // KL as a function of one embedding/centroid, P held fixed.
    auto kl_at = [&] {
      SoftAssignment s2 = soft_assign(Z, N, d, mu, 1.0);
      return kl_loss_rows(P.P.data(), s2.Q.data(), N, K);
    };

    const double h = 1e-6;
    for (std::size_t i = 0; i < N; ++i) {
      std::vector<double> an = grad_le_z(Z.data() + i * d, mu,
                                         P.P.data() + i * K,
                                         S.Q.data() + i * K);
      for (std::size_t k = 0; k < d; ++k) {
        double orig = Z[i * d + k];
        Z[i * d + k] = orig + h;
        double lp = kl_at();
        Z[i * d + k] = orig - h;
        double lm = kl_at();
        Z[i * d + k] = orig;
        double fd = (lp - lm) / (2 * h);
        worst_fd = std::max(worst_fd, std::abs(fd - an[k]) /
                                          std::max(std::abs(an[k]), 1e-6));
      }
    }
    for (std::size_t j = 0; j < K; ++j) {
      std::vector<double> an = grad_le_mu(Z, N, d, mu, j, P.P.data(),
                                          S.Q.data());
      for (std::size_t k = 0; k < d; ++k) {
        double orig = mu.mu[j * d + k];
        mu.mu[j * d + k] = orig + h;
        double lp = kl_at();
        mu.mu[j * d + k] = orig - h;
        double lm = kl_at();
        mu.mu[j * d + k] = orig;
        double fd = (lp - lm) / (2 * h);
        worst_fd = std::max(worst_fd, std::abs(fd - an[k]) /
                                          std::max(std::abs(an[k]), 1e-6));
      }
    }

    // Same gradients from the autodiff tape.
    Tape tape;
    std::vector<double> zg(N * d, 0.0), mg(K * d, 0.0);
    Tensor zt = tape.leaf({N, d}, Z.data(), zg.data());
    Tensor mt = tape.leaf({K, d}, mu.mu.data(), mg.data());
    tape.backward(
        build_kl_from_q(tape, build_soft_assign(tape, zt, mt), P.P.data()));
    for (std::size_t i = 0; i < N; ++i) {
      std::vector<double> an = grad_le_z(Z.data() + i * d, mu,
                                         P.P.data() + i * K,
                                         S.Q.data() + i * K);
      for (std::size_t k = 0; k < d; ++k)
        worst_ad = std::max(worst_ad, std::abs(an[k] - zg[i * d + k]));
    }
    for (std::size_t j = 0; j < K; ++j) {
      std::vector<double> an = grad_le_mu(Z, N, d, mu, j, P.P.data(),
                                          S.Q.data());
      for (std::size_t k = 0; k < d; ++k)
        worst_ad = std::max(worst_ad, std::abs(an[k] - mg[j * d + k]));
    }
  }
  CHECK(worst_fd < 1e-5);
  CHECK(worst_ad < 1e-8);
}

TEST_CASE("gradients vanish when P equals Q") {
  std::vector<double> z{0.4, -0.3};
  Centroids mu{{1, 0, -1, 1}, 2, 2};
  SoftAssignment s = soft_assign(z, 1, 2, mu, 1.0);
  std::vector<double> g = grad_le_z(z.data(), mu, s.Q.data(), s.Q.data());
  for (double v : g) CHECK(v == doctest::Approx(0.0).epsilon(1e-15));
  std::vector<double> gm =
      grad_le_mu(z, 1, 2, mu, 0, s.Q.data(), s.Q.data());
  for (double v : gm) CHECK(v == doctest::Approx(0.0).epsilon(1e-15));
}
