#pragma once

#include <Eigen/Dense>

#include "drivprim/sampling.hpp"

namespace drivprim {

/// Multivariate normal with a cached Cholesky factor of its covariance.
/// A zero-dimensional Gaussian is valid and has log-density 0.
class Gaussian {
 public:
  Gaussian() = default;
  /// Throws ConfigError if `covariance` is not symmetric positive definite.
  Gaussian(Eigen::VectorXd mean, Eigen::MatrixXd covariance);

  static Gaussian standard(Eigen::Index dim);

  const Eigen::VectorXd& mean() const noexcept { return mean_; }
  const Eigen::MatrixXd& covariance() const noexcept { return cov_; }
  Eigen::Index dim() const noexcept { return mean_.size(); }

  double log_density(const Eigen::Ref<const Eigen::VectorXd>& y) const;

 private:
  Eigen::VectorXd mean_;
  Eigen::MatrixXd cov_;
  Eigen::MatrixXd chol_lower_;
  double log_norm_ = 0.0;  // -(d/2) log(2 pi) - (1/2) log det(cov)
};

bool is_spd(const Eigen::MatrixXd& m, double symmetry_tol = 1e-9);

/// Normal-inverse-Wishart prior over (mean, covariance):
///   cov ~ IW(dof, scale),  mean | cov ~ N(mean0, cov / kappa0).
struct NiwPrior {
  Eigen::VectorXd mean0;
  double kappa0 = 0.01;
  double dof = 8.0;
  Eigen::MatrixXd scale;

  Eigen::Index dim() const noexcept { return mean0.size(); }
  /// Throws ConfigError on shape mismatch, dof <= dim + 1, or non-SPD scale.
  void validate() const;
};

/// Sufficient statistics of the observations assigned to one state.
struct GaussianStats {
  explicit GaussianStats(Eigen::Index dim = 0)
      : sum(Eigen::VectorXd::Zero(dim)), outer(Eigen::MatrixXd::Zero(dim, dim)) {}

  void add(const Eigen::Ref<const Eigen::VectorXd>& y) {
    ++count;
    sum += y;
    outer.noalias() += y * y.transpose();
  }

  long long count = 0;
  Eigen::VectorXd sum;
  Eigen::MatrixXd outer;
};

/// Posterior NIW parameters after absorbing `stats`.
NiwPrior niw_posterior(const NiwPrior& prior, const GaussianStats& stats);

/// Draws (mean, covariance) from an NIW distribution.
Gaussian sample_niw(Rng& rng, const NiwPrior& niw);

}  // namespace drivprim
