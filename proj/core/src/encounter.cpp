#include "drivprim/encounter.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>

#include "drivprim/csv.hpp"
#include "drivprim/errors.hpp"

namespace drivprim {

namespace {

constexpr std::array<std::string_view, 7> kRawHeader = {"t", "lat1", "lon1", "v1",
                                                        "lat2", "lon2", "v2"};
constexpr std::array<std::string_view, 7> kProjectedHeader = {"t", "x1", "y1", "v1",
                                                              "x2", "y2", "v2"};

constexpr double deg2rad(double deg) { return deg * std::numbers::pi / 180.0; }
constexpr double rad2deg(double rad) { return rad * 180.0 / std::numbers::pi; }

bool finite(const TrajectorySample& s) {
  return std::isfinite(s.t) && std::isfinite(s.p1.x) && std::isfinite(s.p1.y) &&
         std::isfinite(s.p2.x) && std::isfinite(s.p2.y) && std::isfinite(s.v1) &&
         std::isfinite(s.v2);
}

TrajectorySample lerp(const TrajectorySample& a, const TrajectorySample& b, double t) {
  const double w = (t - a.t) / (b.t - a.t);
  auto mix = [w](double x, double y) { return x + w * (y - x); };
  return {t,
          {mix(a.p1.x, b.p1.x), mix(a.p1.y, b.p1.y)},
          {mix(a.p2.x, b.p2.x), mix(a.p2.y, b.p2.y)},
          mix(a.v1, b.v1),
          mix(a.v2, b.v2)};
}

// Rates inferred from timestamps are rounded to micro-hertz so that 10 Hz data
// written with decimal timestamps reads back as exactly 10.
double round_rate(double rate) { return std::round(rate * 1e6) / 1e6; }

double infer_rate(const std::vector<TrajectorySample>& samples) {
  std::vector<double> dts;
  dts.reserve(samples.size() - 1);
  for (std::size_t i = 1; i < samples.size(); ++i) dts.push_back(samples[i].t - samples[i - 1].t);
  const auto mid = dts.begin() + static_cast<std::ptrdiff_t>(dts.size() / 2);
  std::nth_element(dts.begin(), mid, dts.end());
  double median = *mid;
  if (dts.size() % 2 == 0) {
    median = 0.5 * (median + *std::max_element(dts.begin(), mid));
  }
  return round_rate(1.0 / median);
}

std::vector<TrajectorySample> resample_uniform(const std::vector<TrajectorySample>& in,
                                               double rate_hz) {
  std::vector<TrajectorySample> out;
  const double t0 = in.front().t;
  const double t_end = in.back().t;
  const auto count = static_cast<std::size_t>(std::floor((t_end - t0) * rate_hz + 1e-9)) + 1;
  out.reserve(count);
  std::size_t seg = 0;
  for (std::size_t i = 0; i < count; ++i) {
    const double t = t0 + static_cast<double>(i) / rate_hz;
    while (seg + 2 < in.size() && in[seg + 1].t < t) ++seg;
    if (t == in[seg].t) {
      out.push_back(in[seg]);
    } else {
      out.push_back(lerp(in[seg], in[seg + 1], t));
    }
  }
  return out;
}

struct ParsedTable {
  std::vector<TrajectorySample> samples;
  std::optional<double> declared_rate;
};

// Shared reader for both schemas. Column order is (t, a1, b1, v1, a2, b2, v2);
// `swap_xy` maps lat/lon columns onto Point2{lon, lat}.
ParsedTable parse_table(std::string_view text, const std::array<std::string_view, 7>& header,
                        bool swap_xy) {
  const auto rows = csv::lines(text);
  ParsedTable table;
  std::size_t line_no = 0;
  bool header_seen = false;
  for (const auto raw : rows) {
    ++line_no;
    const auto line = csv::trim(raw);
    if (!header_seen) {
      if (line.starts_with("#")) {
        const auto body = csv::trim(line.substr(1));
        if (body.starts_with("rate_hz=")) {
          const auto rate = csv::parse_double(body.substr(8));
          if (!rate || *rate <= 0.0) {
            throw ParseError("invalid rate_hz comment at line " + std::to_string(line_no));
          }
          table.declared_rate = *rate;
        }
        continue;
      }
      const auto fields = csv::split(line);
      bool ok = fields.size() == header.size();
      for (std::size_t i = 0; ok && i < fields.size(); ++i) ok = csv::trim(fields[i]) == header[i];
      if (!ok) {
        std::string expected;
        for (const auto h : header) expected += (expected.empty() ? "" : ",") + std::string(h);
        throw ParseError("bad header at line " + std::to_string(line_no) + ": expected '" +
                         expected + "'");
      }
      header_seen = true;
      continue;
    }
    if (line.empty()) {
      throw ParseError("empty row at line " + std::to_string(line_no));
    }
    const auto fields = csv::split(line);
    if (fields.size() != header.size()) {
      throw ParseError("malformed row at line " + std::to_string(line_no) + ": expected " +
                       std::to_string(header.size()) + " fields, got " +
                       std::to_string(fields.size()));
    }
    std::array<double, 7> v{};
    for (std::size_t i = 0; i < fields.size(); ++i) {
      const auto parsed = csv::parse_double(fields[i]);
      if (!parsed) {
        throw ParseError("malformed row at line " + std::to_string(line_no) + ": field '" +
                         std::string(header[i]) + "' is blank or not a finite number");
      }
      v[i] = *parsed;
    }
    TrajectorySample s;
    s.t = v[0];
    s.p1 = swap_xy ? Point2{v[2], v[1]} : Point2{v[1], v[2]};
    s.v1 = v[3];
    s.p2 = swap_xy ? Point2{v[5], v[4]} : Point2{v[4], v[5]};
    s.v2 = v[6];
    if (s.v1 < 0.0 || s.v2 < 0.0) {
      throw ValidationError("negative speed at line " + std::to_string(line_no));
    }
    if (!table.samples.empty() && !(s.t > table.samples.back().t)) {
      throw ValidationError("non-monotonic time at line " + std::to_string(line_no));
    }
    table.samples.push_back(s);
  }
  if (!header_seen) throw ParseError("missing header");
  if (table.samples.size() < 2) {
    throw ValidationError("encounter needs at least 2 samples, got " +
                          std::to_string(table.samples.size()));
  }
  return table;
}

DrivingEncounter build(ParsedTable table, std::string id, Frame frame, bool resample) {
  const double rate = table.declared_rate ? *table.declared_rate : infer_rate(table.samples);
  if (resample) table.samples = resample_uniform(table.samples, rate);
  return DrivingEncounter(std::move(id), std::move(table.samples), rate, frame);
}

}  // namespace

std::string_view to_string(Frame frame) {
  return frame == Frame::GeographicDegrees ? "GeographicDegrees" : "LocalMeters";
}

DrivingEncounter::DrivingEncounter(std::string id, std::vector<TrajectorySample> samples,
                                   double rate_hz, Frame frame)
    : id_(std::move(id)), samples_(std::move(samples)), rate_hz_(rate_hz), frame_(frame) {
  if (!(rate_hz_ > 0.0) || !std::isfinite(rate_hz_)) {
    throw ValidationError("encounter " + id_ + ": rate_hz must be positive");
  }
  if (samples_.size() < 2) {
    throw ValidationError("encounter " + id_ + ": needs at least 2 samples");
  }
  const double dt = 1.0 / rate_hz_;
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    const auto& s = samples_[i];
    if (!finite(s)) {
      throw ValidationError("encounter " + id_ + ": non-finite value at sample " +
                            std::to_string(i));
    }
    if (s.v1 < 0.0 || s.v2 < 0.0) {
      throw ValidationError("encounter " + id_ + ": negative speed at sample " +
                            std::to_string(i));
    }
    if (i == 0) continue;
    const double step = s.t - samples_[i - 1].t;
    if (!(step > 0.0)) {
      throw ValidationError("encounter " + id_ + ": non-monotonic time at sample " +
                            std::to_string(i));
    }
    if (std::abs(step - dt) > kTimeUniformityTolerance) {
      throw ValidationError("encounter " + id_ + ": non-uniform time step at sample " +
                            std::to_string(i) + " (dt=" + csv::format_double(step) +
                            ", expected " + csv::format_double(dt) + ")");
    }
  }
}

DrivingPrimitive make_primitive(const DrivingEncounter& enc, std::size_t m, std::size_t n,
                                int label) {
  if (m > n || n >= enc.size()) {
    throw std::out_of_range("primitive [" + std::to_string(m) + ", " + std::to_string(n) +
                            "] outside encounter " + enc.id());
  }
  DrivingPrimitive p;
  p.encounter_id = enc.id();
  p.m = m;
  p.n = n;
  p.state_label = label;
  p.rate_hz = enc.rate_hz();
  p.samples.assign(enc.samples().begin() + static_cast<std::ptrdiff_t>(m),
                   enc.samples().begin() + static_cast<std::ptrdiff_t>(n + 1));
  return p;
}

DrivingEncounter parse_encounter_csv(std::string_view text, std::string id,
                                     const LoadOptions& opts) {
  return build(parse_table(text, kRawHeader, true), std::move(id), Frame::GeographicDegrees,
               opts.resample);
}

DrivingEncounter load_encounter_csv(const std::string& path, const LoadOptions& opts) {
  return parse_encounter_csv(csv::read_file(path), encounter_id_from_path(path), opts);
}

DrivingEncounter parse_projected_csv(std::string_view text, std::string id) {
  return build(parse_table(text, kProjectedHeader, false), std::move(id), Frame::LocalMeters,
               false);
}

DrivingEncounter load_projected_csv(const std::string& path) {
  return parse_projected_csv(csv::read_file(path), encounter_id_from_path(path));
}

std::string serialize_encounter_csv(const DrivingEncounter& enc) {
  const bool geo = enc.frame() == Frame::GeographicDegrees;
  const auto& header = geo ? kRawHeader : kProjectedHeader;
  std::string out = "# rate_hz=" + csv::format_double(enc.rate_hz()) + "\n";
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) out += ',';
    out += header[i];
  }
  out += '\n';
  auto f = [](double v) { return csv::format_double(v); };
  for (const auto& s : enc.samples()) {
    // Geographic rows are lat,lon; Point2 stores lon in x.
    const double a1 = geo ? s.p1.y : s.p1.x, b1 = geo ? s.p1.x : s.p1.y;
    const double a2 = geo ? s.p2.y : s.p2.x, b2 = geo ? s.p2.x : s.p2.y;
    out += f(s.t) + ',' + f(a1) + ',' + f(b1) + ',' + f(s.v1) + ',' + f(a2) + ',' + f(b2) +
           ',' + f(s.v2) + '\n';
  }
  return out;
}

void write_encounter_csv(const DrivingEncounter& enc, const std::string& path) {
  csv::write_file(path, serialize_encounter_csv(enc));
}

std::string encounter_id_from_path(const std::string& path) {
  return std::filesystem::path(path).stem().string();
}

LocalTangentPlane::LocalTangentPlane(double origin_lat_deg, double origin_lon_deg)
    : lat0_(origin_lat_deg), lon0_(origin_lon_deg), cos_lat0_(std::cos(deg2rad(origin_lat_deg))) {
  if (!(std::abs(lat0_) < 90.0)) {
    throw ValidationError("projection origin latitude must lie strictly inside (-90, 90)");
  }
}

Point2 LocalTangentPlane::to_local(const Point2& lon_lat_deg) const {
  double dlon = lon_lat_deg.x - lon0_;
  if (dlon > 180.0) dlon -= 360.0;
  if (dlon < -180.0) dlon += 360.0;
  return {kEarthRadiusM * deg2rad(dlon) * cos_lat0_,
          kEarthRadiusM * deg2rad(lon_lat_deg.y - lat0_)};
}

Point2 LocalTangentPlane::to_geographic(const Point2& east_north_m) const {
  return {lon0_ + rad2deg(east_north_m.x / (kEarthRadiusM * cos_lat0_)),
          lat0_ + rad2deg(east_north_m.y / kEarthRadiusM)};
}

DrivingEncounter project_to_local_frame(const DrivingEncounter& enc) {
  if (enc.frame() == Frame::LocalMeters) {
    throw ValidationError("encounter " + enc.id() + ": already projected");
  }
  const auto& first = enc.samples().front();
  const LocalTangentPlane plane(0.5 * (first.p1.y + first.p2.y), 0.5 * (first.p1.x + first.p2.x));
  std::vector<TrajectorySample> out;
  out.reserve(enc.size());
  for (const auto& s : enc.samples()) {
    out.push_back({s.t, plane.to_local(s.p1), plane.to_local(s.p2), s.v1, s.v2});
  }
  return DrivingEncounter(enc.id(), std::move(out), enc.rate_hz(), Frame::LocalMeters);
}

DrivingEncounter to_geographic_frame(const DrivingEncounter& enc, const LocalTangentPlane& plane) {
  if (enc.frame() != Frame::LocalMeters) {
    throw ValidationError("encounter " + enc.id() + ": expected LocalMeters frame");
  }
  std::vector<TrajectorySample> out;
  out.reserve(enc.size());
  for (const auto& s : enc.samples()) {
    out.push_back({s.t, plane.to_geographic(s.p1), plane.to_geographic(s.p2), s.v1, s.v2});
  }
  return DrivingEncounter(enc.id(), std::move(out), enc.rate_hz(), Frame::GeographicDegrees);
}

double min_mutual_distance_m(const DrivingEncounter& enc) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& s : enc.samples()) {
    best = std::min(best, std::hypot(s.p1.x - s.p2.x, s.p1.y - s.p2.y));
  }
  return best;
}

QualifyResult qualify_encounter(const DrivingEncounter& enc, const QualifyCriteria& criteria) {
  if (enc.frame() != Frame::LocalMeters) {
    throw ValidationError("encounter " + enc.id() + ": qualify_encounter needs LocalMeters");
  }
  // Slack absorbs decimal timestamp rounding (e.g. 9.9999999999 for "10.0").
  if (enc.duration_s() + 1e-9 < criteria.min_duration_s) return {false, "duration"};
  if (min_mutual_distance_m(enc) > criteria.max_mutual_distance_m) return {false, "distance"};
  return {true, ""};
}

}  // namespace drivprim
