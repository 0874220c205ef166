#include "drivprim/gaussian.hpp"

#include <cmath>
#include <numbers>

#include "drivprim/errors.hpp"

namespace drivprim {

bool is_spd(const Eigen::MatrixXd& m, double symmetry_tol) {
  if (m.rows() != m.cols()) return false;
  if (m.size() == 0) return true;
  if (!m.allFinite()) return false;
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > symmetry_tol * (1.0 + m.cwiseAbs().maxCoeff())) {
    return false;
  }
  const Eigen::LLT<Eigen::MatrixXd> llt(m);
  return llt.info() == Eigen::Success && (llt.matrixL().toDenseMatrix().diagonal().array() > 0.0).all();
}

Gaussian::Gaussian(Eigen::VectorXd mean, Eigen::MatrixXd covariance)
    : mean_(std::move(mean)), cov_(std::move(covariance)) {
  if (cov_.rows() != mean_.size() || cov_.cols() != mean_.size()) {
    throw ConfigError("Gaussian: covariance shape does not match mean");
  }
  if (!is_spd(cov_)) throw ConfigError("Gaussian: covariance is not symmetric positive definite");
  const Eigen::LLT<Eigen::MatrixXd> llt(cov_);
  chol_lower_ = llt.matrixL();
  const double log_det = 2.0 * chol_lower_.diagonal().array().log().sum();
  log_norm_ = -0.5 * static_cast<double>(mean_.size()) * std::log(2.0 * std::numbers::pi) -
              0.5 * log_det;
}

Gaussian Gaussian::standard(Eigen::Index dim) {
  return Gaussian(Eigen::VectorXd::Zero(dim), Eigen::MatrixXd::Identity(dim, dim));
}

double Gaussian::log_density(const Eigen::Ref<const Eigen::VectorXd>& y) const {
  if (mean_.size() == 0) return 0.0;
  const Eigen::VectorXd z =
      chol_lower_.triangularView<Eigen::Lower>().solve(y - mean_);
  return log_norm_ - 0.5 * z.squaredNorm();
}

void NiwPrior::validate() const {
  const auto d = mean0.size();
  if (scale.rows() != d || scale.cols() != d) throw ConfigError("NIW prior: scale shape mismatch");
  if (!(kappa0 > 0.0)) throw ConfigError("NIW prior: kappa0 must be > 0");
  if (!(dof > static_cast<double>(d) + 1.0)) {
    throw ConfigError("NIW prior: dof must exceed dimension + 1");
  }
  if (!is_spd(scale)) throw ConfigError("NIW prior: scale matrix is not symmetric positive definite");
}

NiwPrior niw_posterior(const NiwPrior& prior, const GaussianStats& stats) {
  if (stats.count == 0) return prior;
  const double n = static_cast<double>(stats.count);
  const Eigen::VectorXd ybar = stats.sum / n;
  const Eigen::MatrixXd scatter = stats.outer - n * ybar * ybar.transpose();
  NiwPrior post;
  post.kappa0 = prior.kappa0 + n;
  post.dof = prior.dof + n;
  post.mean0 = (prior.kappa0 * prior.mean0 + stats.sum) / post.kappa0;
  const Eigen::VectorXd diff = ybar - prior.mean0;
  post.scale = prior.scale + scatter + (prior.kappa0 * n / post.kappa0) * diff * diff.transpose();
  post.scale = 0.5 * (post.scale + post.scale.transpose());
  return post;
}

Gaussian sample_niw(Rng& rng, const NiwPrior& niw) {
  if (niw.dim() == 0) return Gaussian(Eigen::VectorXd(), Eigen::MatrixXd());
  const Eigen::MatrixXd cov = sample::inverse_wishart(rng, niw.dof, niw.scale);
  const Eigen::VectorXd mean = sample::multivariate_normal(rng, niw.mean0, cov / niw.kappa0);
  return Gaussian(mean, cov);
}

}  // namespace drivprim
