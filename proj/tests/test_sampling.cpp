#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "drivprim/gaussian.hpp"
#include "drivprim/sampling.hpp"

using namespace drivprim;

TEST(Seeds, StableHashIsFnv1a) {
  EXPECT_EQ(stable_hash(""), 0xcbf29ce484222325ull);
  EXPECT_EQ(stable_hash("a"), 0xaf63dc4c8601ec8cull);
}

TEST(Seeds, MixSeedIsDeterministicAndSpreads) {
  EXPECT_EQ(mix_seed(1, 2), mix_seed(1, 2));
  EXPECT_NE(mix_seed(1, 2), mix_seed(2, 1));
  EXPECT_NE(mix_seed(0, 0), mix_seed(0, 1));
}

TEST(Sampling, GammaAndBetaMoments) {
  Rng rng(3);
  double g = 0.0, b = 0.0;
  const int n = 40000;
  for (int i = 0; i < n; ++i) {
    g += sample::gamma(rng, 3.0, 2.0);
    b += sample::beta(rng, 2.0, 6.0);
  }
  EXPECT_NEAR(g / n, 1.5, 0.03);
  EXPECT_NEAR(b / n, 0.25, 0.005);
}

TEST(Sampling, LogGammaHandlesTinyShapes) {
  Rng rng(4);
  for (int i = 0; i < 1000; ++i) {
    const double v = sample::log_gamma(rng, 1e-4);
    EXPECT_TRUE(std::isfinite(v));
  }
  EXPECT_THROW(sample::log_gamma(rng, 0.0), std::invalid_argument);
}

TEST(Sampling, DirichletLiesOnSimplex) {
  Rng rng(5);
  const std::vector<double> a{1e-3, 0.5, 2.0, 50.0, 1e-6};
  for (int i = 0; i < 500; ++i) {
    const auto p = sample::dirichlet(rng, a);
    EXPECT_NEAR(std::accumulate(p.begin(), p.end(), 0.0), 1.0, 1e-12);
    for (double v : p) EXPECT_GE(v, 0.0);
  }
}

TEST(Sampling, DirichletZeroConcentrationIsExactlyZero) {
  Rng rng(6);
  const std::vector<double> a{0.0, 1.0, 2.0};
  const auto p = sample::dirichlet(rng, a);
  EXPECT_EQ(p[0], 0.0);
  const std::vector<double> none{0.0, 0.0};
  EXPECT_THROW(sample::dirichlet(rng, none), std::invalid_argument);
}

TEST(Sampling, CategoricalSkipsZeroWeights) {
  Rng rng(7);
  const std::vector<double> w{0.0, 3.0, 0.0, 1.0};
  std::vector<int> hits(4, 0);
  for (int i = 0; i < 4000; ++i) ++hits[sample::categorical(rng, w)];
  EXPECT_EQ(hits[0], 0);
  EXPECT_EQ(hits[2], 0);
  EXPECT_NEAR(hits[1] / 4000.0, 0.75, 0.03);
  const std::vector<double> zero{0.0, 0.0};
  EXPECT_THROW(sample::categorical(rng, zero), std::invalid_argument);
}

TEST(Sampling, InverseWishartMean) {
  Rng rng(8);
  Eigen::MatrixXd scale(2, 2);
  scale << 2.0, 0.5, 0.5, 1.0;
  const double dof = 10.0;
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(2, 2);
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const auto w = sample::inverse_wishart(rng, dof, scale);
    EXPECT_TRUE(is_spd(w));
    acc += w;
  }
  const Eigen::MatrixXd expected = scale / (dof - 2.0 - 1.0);
  EXPECT_NEAR((acc / n - expected).cwiseAbs().maxCoeff(), 0.0, 0.02);
}

TEST(Gaussian, StandardDensityAtMean) {
  const auto g = Gaussian::standard(6);
  EXPECT_NEAR(g.log_density(Eigen::VectorXd::Zero(6)), -3.0 * std::log(2.0 * M_PI), 1e-12);
  EXPECT_EQ(Gaussian::standard(0).log_density(Eigen::VectorXd(0)), 0.0);
}

TEST(Gaussian, RejectsNonSpdCovariance) {
  Eigen::MatrixXd c(2, 2);
  c << 1.0, 2.0, 2.0, 1.0;
  EXPECT_THROW(Gaussian(Eigen::VectorXd::Zero(2), c), std::runtime_error);
}

TEST(Gaussian, NiwPosteriorMatchesClosedForm) {
  NiwPrior prior;
  prior.mean0 = Eigen::VectorXd::Zero(1);
  prior.kappa0 = 1.0;
  prior.dof = 3.0;
  prior.scale = Eigen::MatrixXd::Identity(1, 1);
  GaussianStats st(1);
  for (double y : {1.0, 2.0, 3.0}) st.add(Eigen::VectorXd::Constant(1, y));
  const auto post = niw_posterior(prior, st);
  EXPECT_DOUBLE_EQ(post.kappa0, 4.0);
  EXPECT_DOUBLE_EQ(post.dof, 6.0);
  EXPECT_NEAR(post.mean0(0), 6.0 / 4.0, 1e-12);
  // scale = S0 + sum (y - ybar)^2 + k0 n / (k0 + n) (ybar - m0)^2
  EXPECT_NEAR(post.scale(0, 0), 1.0 + 2.0 + 3.0 / 4.0 * 4.0, 1e-12);
}

TEST(Gaussian, NiwPriorValidation) {
  NiwPrior p;
  p.mean0 = Eigen::VectorXd::Zero(2);
  p.scale = Eigen::MatrixXd::Identity(2, 2);
  p.dof = 3.0;
  EXPECT_THROW(p.validate(), std::runtime_error);
  p.dof = 4.0;
  EXPECT_NO_THROW(p.validate());
  p.scale(0, 1) = 5.0;
  p.scale(1, 0) = 5.0;
  EXPECT_THROW(p.validate(), std::runtime_error);
}
