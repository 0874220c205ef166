#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace drivprim {

/// All stochastic components draw from this engine so runs are reproducible
/// for a given seed on a given standard library.
using Rng = std::mt19937_64;

/// splitmix64 finalizer; used to derive independent child seeds.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

/// Stable 64-bit FNV-1a hash (std::hash is not stable across platforms).
std::uint64_t stable_hash(std::string_view text);

namespace sample {

double uniform(Rng& rng);
double normal(Rng& rng);
/// Gamma(shape, rate).
double gamma(Rng& rng, double shape, double rate);
/// log of a Gamma(shape, 1) draw; stays finite for tiny shapes.
double log_gamma(Rng& rng, double shape);
double beta(Rng& rng, double a, double b);
bool bernoulli(Rng& rng, double p);
long long binomial(Rng& rng, long long trials, double p);

/// Dirichlet draw computed in log space and normalized with log-sum-exp.
/// Entries may underflow to exactly zero but the result always sums to 1.
/// A zero concentration yields exactly zero; at least one must be positive.
std::vector<double> dirichlet(Rng& rng, std::span<const double> concentration);

/// Index drawn proportional to nonnegative weights (at least one positive).
std::size_t categorical(Rng& rng, std::span<const double> weights);

/// Inverse-Wishart(dof, scale) draw via the Bartlett decomposition.
Eigen::MatrixXd inverse_wishart(Rng& rng, double dof, const Eigen::MatrixXd& scale);

/// N(mean, cov) draw; `cov` must be SPD.
Eigen::VectorXd multivariate_normal(Rng& rng, const Eigen::VectorXd& mean,
                                    const Eigen::MatrixXd& cov);

}  // namespace sample
}  // namespace drivprim
