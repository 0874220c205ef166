#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace drivprim {

/// Planar point. In GeographicDegrees frame x is longitude and y is latitude
/// (east/north order); in LocalMeters frame x is east and y is north.
struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point2&, const Point2&) = default;
};

struct TrajectorySample {
  double t = 0.0;  ///< seconds since encounter start
  Point2 p1;
  Point2 p2;
  double v1 = 0.0;  ///< speed magnitude, m/s
  double v2 = 0.0;

  friend bool operator==(const TrajectorySample&, const TrajectorySample&) = default;
};

enum class Frame { GeographicDegrees, LocalMeters };

std::string_view to_string(Frame frame);

/// Inter-sample spacing may deviate from 1/rate_hz by at most this much.
inline constexpr double kTimeUniformityTolerance = 1e-6;

/// Uniformly sampled two-vehicle time series. Validated on construction and
/// immutable afterwards.
class DrivingEncounter {
 public:
  /// Throws ValidationError unless: T >= 2, t strictly increasing, spacing
  /// uniform to kTimeUniformityTolerance, speeds >= 0, all values finite.
  DrivingEncounter(std::string id, std::vector<TrajectorySample> samples, double rate_hz,
                   Frame frame);

  const std::string& id() const noexcept { return id_; }
  const std::vector<TrajectorySample>& samples() const noexcept { return samples_; }
  double rate_hz() const noexcept { return rate_hz_; }
  Frame frame() const noexcept { return frame_; }
  std::size_t size() const noexcept { return samples_.size(); }
  double duration_s() const noexcept { return samples_.back().t - samples_.front().t; }

  friend bool operator==(const DrivingEncounter&, const DrivingEncounter&) = default;

 private:
  std::string id_;
  std::vector<TrajectorySample> samples_;
  double rate_hz_;
  Frame frame_;
};

/// Contiguous single-label run [m, n] (0-based, inclusive) of an encounter.
struct DrivingPrimitive {
  std::string encounter_id;
  std::size_t m = 0;
  std::size_t n = 0;
  int state_label = 0;
  double rate_hz = 0.0;
  std::vector<TrajectorySample> samples;

  std::size_t length() const noexcept { return n - m + 1; }
  double duration_s() const noexcept { return static_cast<double>(length()) / rate_hz; }
};

/// Slices samples [m, n] out of `enc`. Throws std::out_of_range on bad bounds.
DrivingPrimitive make_primitive(const DrivingEncounter& enc, std::size_t m, std::size_t n,
                                int label);

// ---------------------------------------------------------------------------
// CSV ingestion

struct LoadOptions {
  /// Linearly interpolate onto a uniform grid instead of rejecting
  /// non-uniform spacing. Non-monotonic time is still an error.
  bool resample = false;
};

/// Raw encounter, header `t,lat1,lon1,v1,lat2,lon2,v2`. An optional
/// `# rate_hz=<value>` comment may precede the header; otherwise the rate is
/// inferred from the median time step.
DrivingEncounter load_encounter_csv(const std::string& path, const LoadOptions& opts = {});
DrivingEncounter parse_encounter_csv(std::string_view text, std::string id,
                                     const LoadOptions& opts = {});

/// Projected encounter, header `t,x1,y1,v1,x2,y2,v2`.
DrivingEncounter load_projected_csv(const std::string& path);
DrivingEncounter parse_projected_csv(std::string_view text, std::string id);

/// Emits the header matching the frame, preceded by the `# rate_hz=` line.
/// Numbers use the shortest round-trip representation.
std::string serialize_encounter_csv(const DrivingEncounter& enc);
void write_encounter_csv(const DrivingEncounter& enc, const std::string& path);

/// File stem used as encounter id ("dir/enc_007.csv" -> "enc_007").
std::string encounter_id_from_path(const std::string& path);

// ---------------------------------------------------------------------------
// Projection

inline constexpr double kEarthRadiusM = 6371008.8;

/// Equirectangular east-north plane about a fixed geographic origin.
class LocalTangentPlane {
 public:
  LocalTangentPlane(double origin_lat_deg, double origin_lon_deg);

  Point2 to_local(const Point2& lon_lat_deg) const;
  Point2 to_geographic(const Point2& east_north_m) const;

  double origin_lat_deg() const noexcept { return lat0_; }
  double origin_lon_deg() const noexcept { return lon0_; }

 private:
  double lat0_;
  double lon0_;
  double cos_lat0_;
};

/// Converts to local meters about the midpoint of both vehicles at t = 0.
/// Throws ValidationError("already projected") for LocalMeters input.
DrivingEncounter project_to_local_frame(const DrivingEncounter& enc);

/// Inverse mapping of a LocalMeters encounter through `plane`.
DrivingEncounter to_geographic_frame(const DrivingEncounter& enc, const LocalTangentPlane& plane);

// ---------------------------------------------------------------------------
// Qualification

struct QualifyCriteria {
  double min_duration_s = 10.0;
  double max_mutual_distance_m = 100.0;
};

struct QualifyResult {
  bool qualified = false;
  std::string reason;  ///< "duration", "distance", or empty when qualified
};

double min_mutual_distance_m(const DrivingEncounter& enc);

/// Requires LocalMeters input (throws ValidationError otherwise).
QualifyResult qualify_encounter(const DrivingEncounter& enc, const QualifyCriteria& criteria = {});

}  // namespace drivprim
