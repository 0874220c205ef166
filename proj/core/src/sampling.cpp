#include "drivprim/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string_view>

namespace drivprim {

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2));
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t stable_hash(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const char c : text) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace sample {

double uniform(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

double normal(Rng& rng) { return std::normal_distribution<double>(0.0, 1.0)(rng); }

double gamma(Rng& rng, double shape, double rate) {
  if (!(shape > 0.0) || !(rate > 0.0)) throw std::invalid_argument("gamma: shape and rate must be > 0");
  return std::gamma_distribution<double>(shape, 1.0 / rate)(rng);
}

double log_gamma(Rng& rng, double shape) {
  if (!(shape > 0.0)) throw std::invalid_argument("log_gamma: shape must be > 0");
  if (shape >= 1.0) return std::log(std::gamma_distribution<double>(shape, 1.0)(rng));
  // G(a) = G(a + 1) * U^(1/a)
  double u = uniform(rng);
  while (u <= 0.0) u = uniform(rng);
  return std::log(std::gamma_distribution<double>(shape + 1.0, 1.0)(rng)) + std::log(u) / shape;
}

double beta(Rng& rng, double a, double b) {
  const double la = log_gamma(rng, a);
  const double lb = log_gamma(rng, b);
  const double m = std::max(la, lb);
  return std::exp(la - m) / (std::exp(la - m) + std::exp(lb - m));
}

bool bernoulli(Rng& rng, double p) { return uniform(rng) < p; }

long long binomial(Rng& rng, long long trials, double p) {
  if (trials <= 0 || p <= 0.0) return 0;
  if (p >= 1.0) return trials;
  return std::binomial_distribution<long long>(trials, p)(rng);
}

std::vector<double> dirichlet(Rng& rng, std::span<const double> concentration) {
  std::vector<double> logs(concentration.size());
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < concentration.size(); ++i) {
    const double a = concentration[i];
    if (a < 0.0 || std::isnan(a)) throw std::invalid_argument("dirichlet: negative concentration");
    logs[i] = a == 0.0 ? -std::numeric_limits<double>::infinity() : log_gamma(rng, a);
    m = std::max(m, logs[i]);
  }
  if (!std::isfinite(m)) throw std::invalid_argument("dirichlet: needs a positive concentration");
  double total = 0.0;
  for (auto& v : logs) {
    v = std::exp(v - m);
    total += v;
  }
  for (auto& v : logs) v /= total;
  return logs;
}

std::size_t categorical(Rng& rng, std::span<const double> weights) {
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (!(total > 0.0) || !std::isfinite(total)) {
    throw std::invalid_argument("categorical: weights must have a positive finite sum");
  }
  const double u = uniform(rng) * total;
  double acc = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0.0) continue;
    acc += weights[i];
    last_positive = i;
    if (u < acc) return i;
  }
  return last_positive;
}

Eigen::MatrixXd inverse_wishart(Rng& rng, double dof, const Eigen::MatrixXd& scale) {
  const auto d = scale.rows();
  if (!(dof > static_cast<double>(d) - 1.0)) {
    throw std::invalid_argument("inverse_wishart: dof must exceed dimension - 1");
  }
  // W = L A A^T L^T ~ Wishart(dof, scale^-1) with L L^T = scale^-1; return W^-1.
  const Eigen::MatrixXd precision = scale.llt().solve(Eigen::MatrixXd::Identity(d, d));
  const Eigen::LLT<Eigen::MatrixXd> chol(0.5 * (precision + precision.transpose()));
  if (chol.info() != Eigen::Success) throw std::invalid_argument("inverse_wishart: scale not SPD");
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    a(i, i) = std::sqrt(2.0 * gamma(rng, 0.5 * (dof - static_cast<double>(i)), 1.0));
    for (Eigen::Index j = 0; j < i; ++j) a(i, j) = normal(rng);
  }
  const Eigen::MatrixXd la = chol.matrixL() * a;
  // (L A)^{-T} (L A)^{-1}
  const Eigen::MatrixXd inv_la =
      la.triangularView<Eigen::Lower>().solve(Eigen::MatrixXd::Identity(d, d));
  Eigen::MatrixXd sigma = inv_la.transpose() * inv_la;
  return 0.5 * (sigma + sigma.transpose());
}

Eigen::VectorXd multivariate_normal(Rng& rng, const Eigen::VectorXd& mean,
                                    const Eigen::MatrixXd& cov) {
  const Eigen::LLT<Eigen::MatrixXd> chol(cov);
  if (chol.info() != Eigen::Success) throw std::invalid_argument("multivariate_normal: cov not SPD");
  Eigen::VectorXd z(mean.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = normal(rng);
  return mean + chol.matrixL() * z;
}

}  // namespace sample
}  // namespace drivprim
