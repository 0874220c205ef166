#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "drivprim/encounter.hpp"

namespace drivprim {

inline constexpr std::size_t kDefaultRescaleLength = 50;

/// (encounter_id, m, n, label) of the primitive a feature came from.
struct PrimitiveIdentity {
  std::string encounter_id;
  std::size_t m = 0;
  std::size_t n = 0;
  int label = 0;

  friend bool operator==(const PrimitiveIdentity&, const PrimitiveIdentity&) = default;
};

PrimitiveIdentity identity_of(const DrivingPrimitive& p);

/// A primitive resampled to exactly `length()` points spanning [t_m, t_n].
struct RescaledPrimitive {
  std::vector<Point2> p1;
  std::vector<Point2> p2;
  std::vector<double> v1;
  std::vector<double> v2;
  PrimitiveIdentity source;

  std::size_t length() const noexcept { return v1.size(); }
};

/// Linear interpolation at `l` uniformly spaced instants. Endpoints and, when
/// l equals the source length, every knot are reproduced exactly.
/// Throws ValidationError("degenerate primitive") for single-sample input and
/// std::invalid_argument for l < 2.
RescaledPrimitive rescale_primitive(const DrivingPrimitive& prim, std::size_t l);

/// Cross-vehicle local-distance grids:
///   position(i, j) = || p1[i] - p2[j] ||_2,   speed(i, j) = | v1[i] - v2[j] |.
/// Neither grid is symmetric in general; no warping path is computed.
struct FeatureMatrices {
  Eigen::MatrixXd position;
  Eigen::MatrixXd speed;
  bool normalized = false;

  std::size_t length() const noexcept { return static_cast<std::size_t>(position.rows()); }
};

FeatureMatrices cross_distance_matrices(const RescaledPrimitive& rp);

/// Divides each grid by its own maximum. An all-zero grid is left unchanged.
FeatureMatrices normalize_matrices(FeatureMatrices fm);

/// phi = row-major(position) ++ row-major(speed), length 2 l^2.
struct FeatureVector {
  std::vector<double> phi;
  PrimitiveIdentity source;
};

/// Throws ValidationError if `fm` is not normalized.
FeatureVector flatten_features(const FeatureMatrices& fm, PrimitiveIdentity source = {});

/// Inverse of flatten_features; throws ValidationError unless size == 2 l^2.
FeatureMatrices unflatten_features(const FeatureVector& fv, std::size_t l);

/// rescale -> cross distances -> normalize -> flatten.
FeatureVector featurize_primitive(const DrivingPrimitive& prim,
                                  std::size_t l = kDefaultRescaleLength);

// ---------------------------------------------------------------------------
// Persistence

/// Header `encounter_id,m,n,label,f0,...,f{2l^2-1}`; one row per primitive.
std::string features_to_csv(const std::vector<FeatureVector>& features);
std::vector<FeatureVector> parse_features_csv(std::string_view text);

/// Whitespace-separated l x l grid, one matrix row per line.
std::string matrix_to_text(const Eigen::MatrixXd& m);

}  // namespace drivprim
