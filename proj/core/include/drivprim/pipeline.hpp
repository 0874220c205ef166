#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "drivprim/clustering.hpp"
#include "drivprim/encounter.hpp"
#include "drivprim/features.hpp"
#include "drivprim/hdphmm.hpp"

namespace drivprim {

struct SweepRange {
  std::size_t k_min = 2;
  std::size_t k_max = 50;
  int seeds_per_k = 5;
};

struct PipelineConfig {
  std::string input_dir;
  std::string output_dir;
  double min_encounter_s = 10.0;
  double max_mutual_m = 100.0;
  double min_primitive_s = 0.2;
  std::size_t rescale_l = kDefaultRescaleLength;
  HdpHmmConfig hdphmm;  ///< `seed` is ignored; per-encounter seeds are derived
  std::size_t cluster_k = 20;
  SweepRange sweep;
  std::uint64_t global_seed = 0;
  unsigned jobs = 1;
  bool resample = false;         ///< interpolate non-uniform input onto the declared rate
  bool export_matrices = false;  ///< write per-primitive l x l grids under matrices/
  double duration_bin_s = 1.0;   ///< width of the primitive-duration histogram bins

  /// Throws ConfigError unless thresholds are positive and l >= 2.
  void validate() const;
};

/// Strict JSON reader: unknown keys are rejected. Missing keys keep defaults.
PipelineConfig parse_pipeline_config(std::string_view json_text);
PipelineConfig load_pipeline_config(const std::string& path);
std::string pipeline_config_to_json(const PipelineConfig& cfg);

/// Per-encounter sampler seed, a stable hash of (global_seed, encounter_id).
std::uint64_t encounter_seed(std::uint64_t global_seed, std::string_view encounter_id);

// ---------------------------------------------------------------------------
// Stages. Each throws StageError tagged with its name and the encounter id.

struct IngestedEncounter {
  DrivingEncounter encounter;  ///< LocalMeters
  QualifyResult qualification;
};

/// Reads every `*.csv` (excluding `*.truth.csv`) in `dir`, projects, and
/// qualifies. Results are ordered by encounter id.
std::vector<IngestedEncounter> ingest_directory(const std::string& dir, const QualifyCriteria& criteria,
                                                const LoadOptions& opts = {});

struct SegmentedEncounter {
  std::string encounter_id;
  StateSequence sequence;
  std::vector<DrivingPrimitive> primitives;
};

std::vector<SegmentedEncounter> segment_encounters(const std::vector<DrivingEncounter>& encounters,
                                                   const HdpHmmConfig& cfg, std::uint64_t global_seed,
                                                   double min_primitive_s, unsigned jobs);

std::vector<FeatureVector> featurize_primitives(const std::vector<DrivingPrimitive>& primitives,
                                                std::size_t l, unsigned jobs);

// ---------------------------------------------------------------------------
// Reporting

struct HistogramBin {
  std::string bin;  ///< lower edge for duration bins, primitive count otherwise
  std::size_t count = 0;
  double fraction = 0.0;
};

struct DistributionReport {
  std::vector<HistogramBin> duration_histogram;        ///< primitive durations
  std::vector<HistogramBin> primitives_per_encounter;  ///< bin = primitive count
  std::vector<ClusterShare> cluster_distribution;
};

/// `encounter_ids` lists every encounter that entered segmentation, so that
/// encounters yielding no primitive land in bin 0. `assignments` is parallel
/// to `primitives`.
DistributionReport report_distributions(const std::vector<PrimitiveRecord>& primitives,
                                        const std::vector<std::string>& encounter_ids,
                                        const std::vector<int>& assignments, std::size_t k,
                                        double duration_bin_s = 1.0);

std::string histogram_to_csv(const std::vector<HistogramBin>& bins);
std::string cluster_distribution_to_csv(const std::vector<ClusterShare>& shares);

struct RejectedEncounter {
  std::string encounter_id;
  std::string reason;
};

struct RunReport {
  std::size_t corpus_size = 0;
  std::size_t qualified_count = 0;
  std::vector<RejectedEncounter> rejected;
  std::size_t primitive_count = 0;
  std::size_t cluster_k = 0;  ///< effective k = min(configured k, primitive count)
  std::optional<double> lambda_w;
  std::optional<double> lambda_b;
  double objective = 0.0;
  DistributionReport distributions;
  std::vector<SweepRow> sweep;
  std::optional<std::size_t> elbow_k;
};

std::string run_report_to_json(const RunReport& report);

/// Writes the report JSON plus histogram, distribution and sweep CSVs into `dir`.
void write_report_files(const RunReport& report, const std::string& dir);

/// ingest -> segment -> featurize -> cluster -> sweep -> report. Writes into
/// cfg.output_dir: projected/<id>.csv, primitives.jsonl, features.csv,
/// centroids.csv, assignments.csv, sweep.csv, duration_histogram.csv,
/// primitives_per_encounter.csv, cluster_distribution.csv, config.json,
/// report.json. Output bytes depend only on the config and the inputs.
RunReport run_pipeline(const PipelineConfig& cfg);

}  // namespace drivprim
