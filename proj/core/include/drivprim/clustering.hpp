#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "drivprim/features.hpp"

namespace drivprim {

using Point = std::vector<double>;

struct ClusterModel {
  std::size_t k = 0;
  std::vector<Point> centroids;
  std::vector<int> assignments;  ///< per input vector, in input order
  double objective = 0.0;        ///< sum of squared distances to own centroid
  double lambda_w = 0.0;         ///< NaN when N == k
  double lambda_b = 0.0;         ///< NaN when k == 1
  std::uint64_t seed = 0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> objective_trace;  ///< per Lloyd iteration of the winning restart
};

struct KMeansOptions {
  int max_iterations = 300;
  int restarts = 10;  ///< independent k-means++ starts; the lowest objective wins
};

/// Lloyd's algorithm from greedy k-means++ starts, best of `opts.restarts`.
/// Points are first ordered by a stable lexicographic sort so the result does
/// not depend on input order.
/// Assignment ties go to the lowest cluster index; an empty cluster takes the
/// point farthest from its centroid. Throws std::invalid_argument when
/// k == 0, k > N, or vector lengths differ.
ClusterModel kmeans_fit(const std::vector<Point>& points, std::size_t k, std::uint64_t seed,
                        const KMeansOptions& opts = {});
ClusterModel kmeans_fit(const std::vector<FeatureVector>& vectors, std::size_t k,
                        std::uint64_t seed, const KMeansOptions& opts = {});

double squared_distance(const Point& a, const Point& b);

struct ClusterQuality {
  double lambda_w = 0.0;
  double lambda_b = 0.0;
};

/// lambda_w = SSW / (N - k),  lambda_b = sum_i n_i ||mu_i - mu||^2 / (k - 1).
/// Throws std::domain_error when k == 1 (lambda_b) or N == k (lambda_w).
ClusterQuality cluster_quality(const ClusterModel& model, const std::vector<Point>& points);

struct SweepRow {
  std::size_t k = 0;
  double lambda_w = 0.0;
  double lambda_b = 0.0;
  double objective = 0.0;
  double d_lambda_w = 0.0;  ///< backward difference per unit k; NaN on the first row
  double d_lambda_b = 0.0;
};

/// For each k in [k_min, k_max] fits `seeds_per_k` models and reports medians.
/// Requires 2 <= k_min < k_max < N.
std::vector<SweepRow> elbow_sweep(const std::vector<Point>& points, std::size_t k_min,
                                  std::size_t k_max, int seeds_per_k, std::uint64_t seed,
                                  unsigned jobs = 1);

/// Knee of the median objective curve: with k and objective rescaled to
/// [0, 1], the interior k lying farthest below the chord from the first row to
/// the last. Ties go to the smaller k.
std::size_t find_elbow(const std::vector<SweepRow>& rows);

struct ClusterShare {
  int cluster = 0;
  std::size_t count = 0;
  double fraction = 0.0;
};

std::vector<ClusterShare> cluster_distribution(const std::vector<int>& assignments, std::size_t k);
inline std::vector<ClusterShare> cluster_distribution(const ClusterModel& model) {
  return cluster_distribution(model.assignments, model.k);
}

double median(std::vector<double> values);

// ---------------------------------------------------------------------------
// Persistence

/// k rows x 2l^2 columns, header c0..c{D-1}.
std::string centroids_to_csv(const ClusterModel& model);
/// Header `encounter_id,m,n,label,cluster`.
std::string assignments_to_csv(const std::vector<PrimitiveIdentity>& ids,
                               const std::vector<int>& assignments);
struct AssignmentRow {
  PrimitiveIdentity id;
  int cluster = 0;
};
std::vector<AssignmentRow> parse_assignments_csv(std::string_view text);
/// Header `k,lambda_w,lambda_b,objective,d_lambda_w,d_lambda_b`; NaN -> empty.
std::string sweep_to_csv(const std::vector<SweepRow>& rows);

}  // namespace drivprim
