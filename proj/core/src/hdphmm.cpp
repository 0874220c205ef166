#include "drivprim/hdphmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "drivprim/errors.hpp"

namespace drivprim {

Eigen::MatrixXd observation_matrix(const DrivingEncounter& enc) {
  Eigen::MatrixXd y(static_cast<Eigen::Index>(enc.size()), kObservationDim);
  Eigen::Index t = 0;
  for (const auto& s : enc.samples()) {
    y.row(t++) << s.p1.x, s.p1.y, s.p2.x, s.p2.y, s.v1, s.v2;
  }
  return y;
}

void HdpHmmConfig::validate() const {
  if (truncation < 2) throw ConfigError("truncation must be >= 2");
  if (iterations < 1) throw ConfigError("iterations must be >= 1");
  if (!(kappa >= 0.0) || !std::isfinite(kappa)) throw ConfigError("kappa must be >= 0");
  auto check_gamma = [](const GammaPrior& p, const char* name) {
    if (!(p.shape > 0.0) || !(p.rate > 0.0)) {
      throw ConfigError(std::string(name) + " prior needs shape > 0 and rate > 0");
    }
  };
  check_gamma(gamma_prior, "gamma");
  check_gamma(alpha_kappa_prior, "alpha+kappa");
  if (!(rho_prior.a > 0.0) || !(rho_prior.b > 0.0)) throw ConfigError("rho prior needs a, b > 0");
  if (!(initial_gamma > 0.0)) throw ConfigError("initial_gamma must be > 0");
  if (!(initial_alpha > 0.0)) throw ConfigError("initial_alpha must be > 0");
  if (!(burn_in_fraction >= 0.0 && burn_in_fraction < 1.0)) {
    throw ConfigError("burn_in_fraction must lie in [0, 1)");
  }
  if (emission_prior) emission_prior->validate();
}

ObservationTransform ObservationTransform::identity(Eigen::Index dim) {
  ObservationTransform tr;
  tr.active_dims.resize(static_cast<std::size_t>(dim));
  std::iota(tr.active_dims.begin(), tr.active_dims.end(), Eigen::Index{0});
  tr.center = Eigen::VectorXd::Zero(dim);
  tr.scale = Eigen::VectorXd::Ones(dim);
  return tr;
}

ObservationTransform ObservationTransform::fit(const Eigen::MatrixXd& raw, bool standardize) {
  ObservationTransform tr;
  std::vector<double> centers, scales;
  const double n = static_cast<double>(raw.rows());
  for (Eigen::Index j = 0; j < raw.cols(); ++j) {
    const double mean = raw.col(j).mean();
    const double sd = std::sqrt((raw.col(j).array() - mean).square().sum() / n);
    if (!(sd > 1e-9 * std::max(1.0, std::abs(mean)))) continue;
    tr.active_dims.push_back(j);
    centers.push_back(standardize ? mean : 0.0);
    scales.push_back(standardize ? sd : 1.0);
  }
  tr.center = Eigen::Map<const Eigen::VectorXd>(centers.data(), static_cast<Eigen::Index>(centers.size()));
  tr.scale = Eigen::Map<const Eigen::VectorXd>(scales.data(), static_cast<Eigen::Index>(scales.size()));
  return tr;
}

Eigen::MatrixXd ObservationTransform::apply(const Eigen::MatrixXd& raw) const {
  Eigen::MatrixXd out(raw.rows(), dim());
  for (Eigen::Index j = 0; j < dim(); ++j) {
    const auto src = active_dims[static_cast<std::size_t>(j)];
    if (src < 0 || src >= raw.cols()) throw ValidationError("observation transform: bad dimension");
    out.col(j) = (raw.col(src).array() - center(j)) / scale(j);
  }
  return out;
}

int count_change_points(const std::vector<int>& labels) {
  int changes = 0;
  for (std::size_t t = 1; t < labels.size(); ++t) changes += labels[t] != labels[t - 1];
  return changes;
}

namespace {

double log_joint_impl(const StickyHdpHmmModel& model, const std::vector<int>& labels,
                      const Eigen::MatrixXd& y) {
  double total = std::log(model.beta(labels[0]));
  for (std::size_t t = 1; t < labels.size(); ++t) {
    total += std::log(model.pi(labels[t - 1], labels[t]));
  }
  for (std::size_t t = 0; t < labels.size(); ++t) {
    total += model.emissions[static_cast<std::size_t>(labels[t])].log_density(
        y.row(static_cast<Eigen::Index>(t)).transpose());
  }
  return total;
}

NiwPrior default_emission_prior(const Eigen::MatrixXd& y) {
  const auto d = y.cols();
  NiwPrior prior;
  prior.mean0 = y.colwise().mean().transpose();
  prior.kappa0 = 0.01;
  prior.dof = static_cast<double>(d) + 2.0;
  if (d == 0) {
    prior.scale = Eigen::MatrixXd(0, 0);
    return prior;
  }
  const Eigen::MatrixXd centered = y.rowwise() - prior.mean0.transpose();
  Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(y.rows());
  // Ridge keeps the scale SPD when observation channels are collinear.
  const double ridge = 1e-3 * cov.trace() / static_cast<double>(d);
  cov.diagonal().array() += ridge;
  prior.scale = 0.75 * cov;
  return prior;
}

class StickySampler {
 public:
  StickySampler(const Eigen::MatrixXd& y, const HdpHmmConfig& cfg, NiwPrior prior)
      : y_(y),
        cfg_(cfg),
        prior_(std::move(prior)),
        num_states_(cfg.truncation),
        length_(static_cast<int>(y.rows())),
        rng_(cfg.seed),
        labels_(static_cast<std::size_t>(length_), 0) {
    model_.beta = Eigen::VectorXd::Constant(num_states_, 1.0 / num_states_);
    model_.pi = Eigen::MatrixXd::Constant(num_states_, num_states_, 1.0 / num_states_);
    model_.gamma = cfg.initial_gamma;
    model_.alpha = cfg.initial_alpha;
    model_.kappa = cfg.kappa;
    if (has_observations()) {
      std::uniform_int_distribution<int> pick(0, num_states_ - 1);
      for (auto& x : labels_) x = pick(rng_);
    }
    sample_parameters();
  }

  void sweep() {
    if (has_observations()) sample_labels();
    sample_parameters();
  }

  double log_joint() const { return log_joint_impl(model_, labels_, y_); }
  const std::vector<int>& labels() const { return labels_; }
  const StickyHdpHmmModel& model() const { return model_; }

  SweepDiagnostics diagnostics(int sweep_index) const {
    SweepDiagnostics d;
    d.sweep = sweep_index;
    d.log_joint = log_joint();
    d.change_points = count_change_points(labels_);
    std::vector<bool> used(static_cast<std::size_t>(num_states_), false);
    for (int x : labels_) used[static_cast<std::size_t>(x)] = true;
    d.occupied_states = static_cast<int>(std::count(used.begin(), used.end(), true));
    d.simplex_error = std::abs(model_.beta.sum() - 1.0);
    d.min_weight_nonnegative = model_.beta.minCoeff() >= 0.0 && model_.pi.minCoeff() >= 0.0;
    for (int j = 0; j < num_states_; ++j) {
      d.simplex_error = std::max(d.simplex_error, std::abs(model_.pi.row(j).sum() - 1.0));
    }
    for (const auto& g : model_.emissions) d.covariances_spd = d.covariances_spd && is_spd(g.covariance());
    d.gamma = model_.gamma;
    d.alpha = model_.alpha;
    d.kappa = model_.kappa;
    return d;
  }

 private:
  bool has_observations() const { return y_.cols() > 0; }

  // Backward messages normalized per step, then forward sampling.
  void sample_labels() {
    const int L = num_states_;
    const int T = length_;
    Eigen::MatrixXd lik(T, L);
    for (int t = 0; t < T; ++t) {
      const Eigen::VectorXd yt = y_.row(t).transpose();
      for (int k = 0; k < L; ++k) lik(t, k) = model_.emissions[static_cast<std::size_t>(k)].log_density(yt);
      const double mx = lik.row(t).maxCoeff();
      lik.row(t) = (lik.row(t).array() - mx).exp();
    }
    Eigen::MatrixXd back(T, L);
    back.row(T - 1).setOnes();
    for (int t = T - 2; t >= 0; --t) {
      const Eigen::VectorXd msg = lik.row(t + 1).cwiseProduct(back.row(t + 1)).transpose();
      back.row(t) = (model_.pi * msg).transpose();
      back.row(t) /= back.row(t).sum();
    }
    std::vector<double> w(static_cast<std::size_t>(L));
    for (int k = 0; k < L; ++k) w[static_cast<std::size_t>(k)] = model_.beta(k) * lik(0, k) * back(0, k);
    labels_[0] = static_cast<int>(sample::categorical(rng_, w));
    for (int t = 1; t < T; ++t) {
      const int prev = labels_[static_cast<std::size_t>(t - 1)];
      for (int k = 0; k < L; ++k) {
        w[static_cast<std::size_t>(k)] = model_.pi(prev, k) * lik(t, k) * back(t, k);
      }
      labels_[static_cast<std::size_t>(t)] = static_cast<int>(sample::categorical(rng_, w));
    }
  }

  void sample_parameters() {
    const int L = num_states_;
    Eigen::MatrixXd n = Eigen::MatrixXd::Zero(L, L);
    for (std::size_t t = 1; t < labels_.size(); ++t) n(labels_[t - 1], labels_[t]) += 1.0;

    // Table counts m_jk via the Chinese restaurant process.
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(L, L);
    for (int j = 0; j < L; ++j) {
      for (int k = 0; k < L; ++k) {
        const double mass = model_.alpha * model_.beta(k) + (j == k ? model_.kappa : 0.0);
        const auto count = static_cast<long long>(n(j, k));
        double tables = 0.0;
        for (long long i = 0; i < count; ++i) {
          tables += sample::bernoulli(rng_, mass / (static_cast<double>(i) + mass)) ? 1.0 : 0.0;
        }
        m(j, k) = tables;
      }
    }

    // Override variables: tables at the diagonal that came from kappa.
    const double sum_ak = model_.alpha + model_.kappa;
    const double rho = sum_ak > 0.0 ? model_.kappa / sum_ak : 0.0;
    Eigen::MatrixXd m_bar = m;
    double overrides = 0.0;
    for (int j = 0; j < L; ++j) {
      const double p = rho / (rho + model_.beta(j) * (1.0 - rho));
      const auto wj = static_cast<double>(
          sample::binomial(rng_, static_cast<long long>(m(j, j)), std::isfinite(p) ? p : 0.0));
      m_bar(j, j) -= wj;
      overrides += wj;
    }

    if (cfg_.resample_concentrations) resample_concentrations(n, m, m_bar, overrides);

    // beta | m_bar ~ Dir(gamma / L + m_bar_.k), plus the initial state's draw.
    std::vector<double> conc(static_cast<std::size_t>(L));
    const Eigen::VectorXd col_tables = m_bar.colwise().sum().transpose();
    for (int k = 0; k < L; ++k) {
      conc[static_cast<std::size_t>(k)] =
          model_.gamma / L + col_tables(k) + (labels_[0] == k ? 1.0 : 0.0);
    }
    const auto beta = sample::dirichlet(rng_, conc);
    for (int k = 0; k < L; ++k) model_.beta(k) = beta[static_cast<std::size_t>(k)];

    // pi_j ~ Dir(alpha beta + kappa e_j + n_j.)
    for (int j = 0; j < L; ++j) {
      for (int k = 0; k < L; ++k) {
        conc[static_cast<std::size_t>(k)] =
            model_.alpha * model_.beta(k) + (j == k ? model_.kappa : 0.0) + n(j, k);
      }
      const auto row = sample::dirichlet(rng_, conc);
      for (int k = 0; k < L; ++k) model_.pi(j, k) = row[static_cast<std::size_t>(k)];
    }

    std::vector<GaussianStats> stats(static_cast<std::size_t>(L), GaussianStats(y_.cols()));
    for (std::size_t t = 0; t < labels_.size(); ++t) {
      stats[static_cast<std::size_t>(labels_[t])].add(y_.row(static_cast<Eigen::Index>(t)).transpose());
    }
    model_.emissions.clear();
    model_.emissions.reserve(static_cast<std::size_t>(L));
    for (int k = 0; k < L; ++k) {
      model_.emissions.push_back(sample_niw(rng_, niw_posterior(prior_, stats[static_cast<std::size_t>(k)])));
    }
  }

  // Auxiliary-variable updates for alpha + kappa (one group per transition
  // row) and gamma, optionally splitting alpha + kappa through rho.
  void resample_concentrations(const Eigen::MatrixXd& n, const Eigen::MatrixXd& m,
                               const Eigen::MatrixXd& m_bar, double overrides) {
    const int L = num_states_;
    const double total_tables = m.sum();
    double sum_ak = model_.alpha + model_.kappa;
    double log_r = 0.0;
    double s_total = 0.0;
    for (int j = 0; j < L; ++j) {
      const double nj = n.row(j).sum();
      if (nj <= 0.0) continue;
      log_r += std::log(sample::beta(rng_, sum_ak + 1.0, nj));
      s_total += sample::bernoulli(rng_, nj / (nj + sum_ak)) ? 1.0 : 0.0;
    }
    const double shape = cfg_.alpha_kappa_prior.shape + total_tables - s_total;
    const double rate = cfg_.alpha_kappa_prior.rate - log_r;

    if (cfg_.resample_kappa) {
      sum_ak = sample::gamma(rng_, shape, rate);
      const double rho = sample::beta(rng_, cfg_.rho_prior.a + overrides,
                                      cfg_.rho_prior.b + total_tables - overrides);
      model_.kappa = rho * sum_ak;
      model_.alpha = (1.0 - rho) * sum_ak;
    } else {
      // Fixed kappa: draw alpha + kappa from its conditional truncated to
      // (kappa, inf); keep the current alpha if the truncation rejects.
      for (int attempt = 0; attempt < 64; ++attempt) {
        const double draw = sample::gamma(rng_, shape, rate);
        if (draw > model_.kappa) {
          model_.alpha = draw - model_.kappa;
          break;
        }
      }
    }

    const double used_tables = m_bar.sum();
    const double active = static_cast<double>((m_bar.colwise().sum().array() > 0.0).count());
    double g_shape = cfg_.gamma_prior.shape + active;
    double g_rate = cfg_.gamma_prior.rate;
    if (used_tables > 0.0) {
      g_rate -= std::log(sample::beta(rng_, model_.gamma + 1.0, used_tables));
      g_shape -= sample::bernoulli(rng_, used_tables / (used_tables + model_.gamma)) ? 1.0 : 0.0;
    }
    if (g_shape > 0.0) model_.gamma = sample::gamma(rng_, g_shape, g_rate);
  }

  const Eigen::MatrixXd& y_;
  const HdpHmmConfig& cfg_;
  NiwPrior prior_;
  int num_states_;
  int length_;
  Rng rng_;
  std::vector<int> labels_;
  StickyHdpHmmModel model_;
};

}  // namespace

SegmentationResult fit_segmentation(const DrivingEncounter& enc, const HdpHmmConfig& cfg) {
  cfg.validate();
  if (enc.size() < 2) throw ValidationError("fit_segmentation: encounter needs T >= 2");
  if (enc.frame() != Frame::LocalMeters) {
    throw ValidationError("fit_segmentation: encounter " + enc.id() + " must be projected first");
  }
  const Eigen::MatrixXd raw = observation_matrix(enc);
  const ObservationTransform transform = ObservationTransform::fit(raw, cfg.standardize);
  const Eigen::MatrixXd y = transform.apply(raw);

  NiwPrior prior;
  if (cfg.emission_prior) {
    prior = *cfg.emission_prior;
    if (prior.dim() != transform.dim()) {
      // A full-dimensional prior is restricted to the informative dimensions.
      if (prior.dim() != kObservationDim) {
        throw ConfigError("emission prior dimension must be 6 or match the active dimensions");
      }
      NiwPrior sub;
      sub.kappa0 = prior.kappa0;
      sub.dof = prior.dof - static_cast<double>(kObservationDim - transform.dim());
      sub.mean0.resize(transform.dim());
      sub.scale.resize(transform.dim(), transform.dim());
      for (Eigen::Index a = 0; a < transform.dim(); ++a) {
        sub.mean0(a) = prior.mean0(transform.active_dims[static_cast<std::size_t>(a)]);
        for (Eigen::Index b = 0; b < transform.dim(); ++b) {
          sub.scale(a, b) = prior.scale(transform.active_dims[static_cast<std::size_t>(a)],
                                        transform.active_dims[static_cast<std::size_t>(b)]);
        }
      }
      prior = std::move(sub);
    }
  } else {
    prior = default_emission_prior(y);
  }
  prior.validate();

  StickySampler sampler(y, cfg, prior);
  const int burn_in = static_cast<int>(std::floor(cfg.burn_in_fraction * cfg.iterations));

  SegmentationResult result;
  result.trace.reserve(static_cast<std::size_t>(cfg.iterations));
  double best = -std::numeric_limits<double>::infinity();
  bool have_best = false;
  for (int s = 0; s < cfg.iterations; ++s) {
    sampler.sweep();
    auto diag = sampler.diagnostics(s);
    if (s >= burn_in && (!have_best || diag.log_joint > best)) {
      best = diag.log_joint;
      have_best = true;
      result.retained_sweep = s;
      result.model = sampler.model();
      result.sequence.labels = sampler.labels();
      result.sequence.log_joint = diag.log_joint;
    }
    result.trace.push_back(diag);
  }
  result.model.transform = transform;
  result.sequence.encounter_id = enc.id();
  return result;
}

double log_joint_probability(const StickyHdpHmmModel& model, const StateSequence& seq,
                             const DrivingEncounter& enc) {
  const int L = model.num_states();
  if (model.pi.rows() != L || model.pi.cols() != L ||
      static_cast<int>(model.emissions.size()) != L) {
    throw ValidationError("log_joint_probability: inconsistent model shapes");
  }
  if (seq.labels.size() != enc.size()) {
    throw ValidationError("log_joint_probability: label count " + std::to_string(seq.labels.size()) +
                          " differs from encounter length " + std::to_string(enc.size()));
  }
  for (std::size_t t = 0; t < seq.labels.size(); ++t) {
    if (seq.labels[t] < 0 || seq.labels[t] >= L) {
      throw ValidationError("log_joint_probability: label " + std::to_string(seq.labels[t]) +
                            " out of range at t=" + std::to_string(t));
    }
  }
  const Eigen::MatrixXd y = model.transform.apply(observation_matrix(enc));
  for (const auto& g : model.emissions) {
    if (g.dim() != y.cols()) throw ValidationError("log_joint_probability: emission dimension mismatch");
  }
  return log_joint_impl(model, seq.labels, y);
}

}  // namespace drivprim
