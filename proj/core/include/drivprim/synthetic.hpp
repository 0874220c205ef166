#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "drivprim/clustering.hpp"
#include "drivprim/encounter.hpp"
#include "drivprim/hdphmm.hpp"

namespace drivprim::synth {

/// Encounter archetypes: both still, perpendicular crossing, same heading,
/// opposite headings, one moving past a stationary one, and a follower that
/// turns away from the leader.
enum class ScenarioFamily {
  BothStill,
  VerticalCross,
  SameDirection,
  OppositeDirection,
  OneMovingOneStill,
  FollowThenTurn,
};

inline constexpr ScenarioFamily kAllFamilies[] = {
    ScenarioFamily::BothStill,         ScenarioFamily::VerticalCross,
    ScenarioFamily::SameDirection,     ScenarioFamily::OppositeDirection,
    ScenarioFamily::OneMovingOneStill, ScenarioFamily::FollowThenTurn,
};

std::string_view to_string(ScenarioFamily family);
/// Throws std::invalid_argument for unknown names.
ScenarioFamily family_from_string(std::string_view name);

/// Constant longitudinal acceleration (m/s^2) and yaw rate (rad/s) for one
/// vehicle during a phase. A turning phase must have zero acceleration, which
/// keeps every phase closed-form (line, braking line, or circular arc).
/// Speed never goes negative: a braking vehicle stops and stays put.
struct Motion {
  double accel = 0.0;
  double yaw_rate = 0.0;
};

struct Phase {
  std::string name;
  double duration_s = 0.0;
  Motion vehicle1;
  Motion vehicle2;
};

struct VehicleState {
  Point2 position;
  double heading_rad = 0.0;  ///< 0 = east, pi/2 = north
  double speed = 0.0;
};

struct ScenarioSpec {
  ScenarioFamily family = ScenarioFamily::BothStill;
  double duration_s = 20.0;
  double rate_hz = 10.0;
  double noise_std_pos = 0.5;
  double noise_std_speed = 0.2;
  VehicleState start1;
  VehicleState start2;
  std::vector<Phase> segment_plan;
  std::uint64_t seed = 0;
  std::string id = "synthetic";

  /// Throws std::invalid_argument on non-positive durations/rates, negative
  /// noise, a plan that does not sum to duration_s, a turning phase with
  /// nonzero acceleration, or phases too short to own a sample.
  void validate() const;
};

/// Family defaults: starting states and a phase plan scaled to `duration_s`,
/// with every vehicle pair passing within 100 m.
ScenarioSpec default_scenario(ScenarioFamily family, double duration_s = 20.0,
                              std::uint64_t seed = 0);

struct LabeledEncounter {
  DrivingEncounter encounter;                ///< LocalMeters frame
  std::vector<std::size_t> truth_boundaries;  ///< first sample index of each later phase
  std::vector<int> truth_labels;              ///< phase id per sample
};

/// Noise-free vehicle state `elapsed` seconds into a phase.
VehicleState advance(const VehicleState& start, const Motion& motion, double elapsed);

/// Samples at t_i = i / rate_hz for i = 0..round(duration * rate); positions get
/// i.i.d. N(0, noise_std_pos^2) per axis and speeds N(0, noise_std_speed^2),
/// clamped at zero.
LabeledEncounter generate_encounter(const ScenarioSpec& spec);

/// Encounter whose 6-D observations are piecewise-constant means plus
/// isotropic Gaussian noise: a left-to-right HMM with planted phases.
struct PlantedSpec {
  int num_phases = 3;
  std::size_t length = 300;
  double rate_hz = 10.0;
  double noise_std = 0.5;
  double min_separation_sigma = 5.0;  ///< pairwise Euclidean distance between phase means
  std::size_t min_phase_samples = 30;
  std::uint64_t seed = 0;
  std::string id = "planted";
};

LabeledEncounter generate_planted_phases(const PlantedSpec& spec);

/// Best per-sample agreement over injective maps from predicted labels to
/// truth labels (Hungarian assignment). Throws std::invalid_argument on
/// length mismatch.
double segmentation_accuracy(const std::vector<int>& predicted, const std::vector<int>& truth);
inline double segmentation_accuracy(const StateSequence& pred, const LabeledEncounter& truth) {
  return segmentation_accuracy(pred.labels, truth.truth_labels);
}

/// Maximum-weight assignment on a (rows x cols) weight matrix; returns the
/// column index per row, or -1 for unmatched rows.
std::vector<int> max_weight_assignment(const std::vector<std::vector<double>>& weight);

struct OracleResult {
  double objective = 0.0;
  std::vector<int> partition;  ///< block index per point
};

inline constexpr std::size_t kOracleMaxPoints = 12;
inline constexpr std::size_t kOracleMaxK = 3;

/// Exact minimum of the k-means objective over all partitions into exactly k
/// nonempty blocks, by exhaustive enumeration. Throws std::invalid_argument
/// when N > 12, k > 3, k == 0, or k > N.
OracleResult oracle_kmeans(const std::vector<Point>& points, std::size_t k);

/// `sample_index,phase_id` sidecar.
std::string truth_to_csv(const std::vector<int>& labels);
std::vector<int> parse_truth_csv(std::string_view text);

/// Default geographic origin used when writing synthetic encounters as raw
/// lat/lon CSV.
inline constexpr double kSynthOriginLat = 42.2808;
inline constexpr double kSynthOriginLon = -83.7430;

/// Mixed-family corpus: family i % 6, seed derived from (seed, i), ids
/// "enc_000", "enc_001", ...
std::vector<LabeledEncounter> generate_corpus(std::size_t count, std::uint64_t seed,
                                              double duration_s = 20.0,
                                              double noise_std_pos = 0.5,
                                              double noise_std_speed = 0.2);

}  // namespace drivprim::synth
