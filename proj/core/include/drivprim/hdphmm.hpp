#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "drivprim/encounter.hpp"
#include "drivprim/gaussian.hpp"

namespace drivprim {

/// Observation vector per sample: [x1, y1, x2, y2, v1, v2].
inline constexpr Eigen::Index kObservationDim = 6;

/// T x 6 matrix of raw observations.
Eigen::MatrixXd observation_matrix(const DrivingEncounter& enc);

struct GammaPrior {
  double shape = 1.0;
  double rate = 0.01;
};

struct BetaPrior {
  double a = 1.0;
  double b = 1.0;
};

struct HdpHmmConfig {
  int truncation = 20;   ///< weak-limit state count L
  int iterations = 200;  ///< Gibbs sweeps
  /// Self-transition mass added to the diagonal of each transition row's
  /// Dirichlet base measure.
  double kappa = 1.0;
  GammaPrior gamma_prior{1.0, 0.01};
  GammaPrior alpha_kappa_prior{1.0, 0.01};  ///< prior on alpha + kappa
  bool resample_concentrations = true;      ///< resample gamma and alpha + kappa
  bool resample_kappa = false;              ///< resample rho = kappa / (alpha + kappa)
  BetaPrior rho_prior{1.0, 1.0};
  double initial_gamma = 1.0;
  double initial_alpha = 1.0;
  /// Emission prior in the inference space (after standardization and
  /// removal of constant dimensions). When unset it is derived from the data:
  /// mean0 = empirical mean, kappa0 = 0.01, dof = dim + 2,
  /// scale = 0.75 * (empirical covariance + ridge).
  std::optional<NiwPrior> emission_prior;
  bool standardize = true;  ///< z-score each observation dimension first
  std::uint64_t seed = 0;
  double burn_in_fraction = 0.5;

  /// Throws ConfigError on any out-of-range field.
  void validate() const;
};

/// Maps raw 6-D observations into the space the sampler works in:
/// y' = (y[active] - center) / scale.
struct ObservationTransform {
  std::vector<Eigen::Index> active_dims;
  Eigen::VectorXd center;
  Eigen::VectorXd scale;

  static ObservationTransform identity(Eigen::Index dim = kObservationDim);
  /// Centers and scales each dimension; dimensions with zero spread carry no
  /// information and are dropped.
  static ObservationTransform fit(const Eigen::MatrixXd& raw, bool standardize);

  Eigen::Index dim() const noexcept { return static_cast<Eigen::Index>(active_dims.size()); }
  Eigen::MatrixXd apply(const Eigen::MatrixXd& raw) const;
};

/// One posterior sample of the weak-limit sticky HDP-HMM.
struct StickyHdpHmmModel {
  ObservationTransform transform;
  Eigen::VectorXd beta;             ///< global state weights (also the initial-state law)
  Eigen::MatrixXd pi;               ///< L x L transition matrix, rows on the simplex
  std::vector<Gaussian> emissions;  ///< per-state Gaussian in transform space
  double gamma = 1.0;
  double alpha = 1.0;
  double kappa = 1.0;

  int num_states() const noexcept { return static_cast<int>(beta.size()); }
};

struct StateSequence {
  std::string encounter_id;
  std::vector<int> labels;
  double log_joint = 0.0;
};

struct SweepDiagnostics {
  int sweep = 0;
  double log_joint = 0.0;
  int change_points = 0;
  int occupied_states = 0;
  double simplex_error = 0.0;  ///< max |sum - 1| over beta and every pi row
  bool min_weight_nonnegative = true;
  bool covariances_spd = true;
  double gamma = 0.0;
  double alpha = 0.0;
  double kappa = 0.0;
};

struct SegmentationResult {
  StickyHdpHmmModel model;
  StateSequence sequence;
  int retained_sweep = 0;
  std::vector<SweepDiagnostics> trace;  ///< one entry per sweep
};

/// Blocked Gibbs sampler: per sweep draws the label sequence by
/// backward-filtering/forward-sampling, then table counts with the sticky
/// override correction, beta, transition rows, emission parameters and the
/// concentration hyperparameters. Returns the post-burn-in sweep with the
/// largest joint log-probability. Deterministic for fixed (enc, cfg).
SegmentationResult fit_segmentation(const DrivingEncounter& enc, const HdpHmmConfig& cfg);

/// log beta[x_0] + sum_t log pi[x_{t-1}, x_t] + sum_t log N(y_t | theta_{x_t}).
/// Throws ValidationError on length mismatch or out-of-range labels.
double log_joint_probability(const StickyHdpHmmModel& model, const StateSequence& seq,
                             const DrivingEncounter& enc);

int count_change_points(const std::vector<int>& labels);

/// Maximal constant-label runs, ordered and disjoint. Runs shorter than
/// `min_duration_s` (duration = samples / rate) or with a single sample are
/// dropped. Throws ValidationError if the sequence length differs from T.
std::vector<DrivingPrimitive> extract_primitives(const StateSequence& seq,
                                                 const DrivingEncounter& enc,
                                                 double min_duration_s = 0.2);

// ---------------------------------------------------------------------------
// JSON-lines persistence: one object per primitive with fields
// encounter_id, m, n, label, duration_s.

struct PrimitiveRecord {
  std::string encounter_id;
  std::size_t m = 0;
  std::size_t n = 0;
  int label = 0;
  double duration_s = 0.0;

  friend bool operator==(const PrimitiveRecord&, const PrimitiveRecord&) = default;
};

PrimitiveRecord to_record(const DrivingPrimitive& p);
std::string to_jsonl(const std::vector<PrimitiveRecord>& records);
std::vector<PrimitiveRecord> parse_jsonl(std::string_view text);

}  // namespace drivprim
