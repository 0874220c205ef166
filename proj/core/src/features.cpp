#include "drivprim/features.hpp"

#include <cmath>
#include <stdexcept>

#include "drivprim/csv.hpp"
#include "drivprim/errors.hpp"

namespace drivprim {

PrimitiveIdentity identity_of(const DrivingPrimitive& p) {
  return {p.encounter_id, p.m, p.n, p.state_label};
}

RescaledPrimitive rescale_primitive(const DrivingPrimitive& prim, std::size_t l) {
  if (l < 2) throw std::invalid_argument("rescale_primitive: l must be >= 2");
  const auto& src = prim.samples;
  if (src.size() < 2) throw ValidationError("degenerate primitive");

  RescaledPrimitive out;
  out.source = identity_of(prim);
  out.p1.reserve(l);
  out.p2.reserve(l);
  out.v1.reserve(l);
  out.v2.reserve(l);

  // Samples are uniform in time, so the query instant t_m + i (t_n - t_m)/(l-1)
  // sits at fractional index i (N-1)/(l-1). Integer arithmetic keeps knots exact.
  const std::size_t span = src.size() - 1;
  const std::size_t denom = l - 1;
  for (std::size_t i = 0; i < l; ++i) {
    const std::size_t num = i * span;
    const std::size_t lo = num / denom;
    const std::size_t rem = num % denom;
    if (rem == 0) {
      const auto& s = src[lo];
      out.p1.push_back(s.p1);
      out.p2.push_back(s.p2);
      out.v1.push_back(s.v1);
      out.v2.push_back(s.v2);
      continue;
    }
    const double w = static_cast<double>(rem) / static_cast<double>(denom);
    const auto& a = src[lo];
    const auto& b = src[lo + 1];
    auto mix = [w](double x, double y) { return x + w * (y - x); };
    out.p1.push_back({mix(a.p1.x, b.p1.x), mix(a.p1.y, b.p1.y)});
    out.p2.push_back({mix(a.p2.x, b.p2.x), mix(a.p2.y, b.p2.y)});
    out.v1.push_back(mix(a.v1, b.v1));
    out.v2.push_back(mix(a.v2, b.v2));
  }
  return out;
}

FeatureMatrices cross_distance_matrices(const RescaledPrimitive& rp) {
  const auto l = static_cast<Eigen::Index>(rp.length());
  if (rp.p1.size() != rp.length() || rp.p2.size() != rp.length() || rp.v2.size() != rp.length()) {
    throw ValidationError("cross_distance_matrices: channel lengths differ");
  }
  FeatureMatrices fm;
  fm.position.resize(l, l);
  fm.speed.resize(l, l);
  for (Eigen::Index i = 0; i < l; ++i) {
    const auto& a = rp.p1[static_cast<std::size_t>(i)];
    const double va = rp.v1[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < l; ++j) {
      const auto& b = rp.p2[static_cast<std::size_t>(j)];
      fm.position(i, j) = std::hypot(a.x - b.x, a.y - b.y);
      fm.speed(i, j) = std::abs(va - rp.v2[static_cast<std::size_t>(j)]);
    }
  }
  return fm;
}

FeatureMatrices normalize_matrices(FeatureMatrices fm) {
  for (auto* m : {&fm.position, &fm.speed}) {
    if (m->size() == 0) continue;
    const double mx = m->maxCoeff();
    if (mx > 0.0) *m /= mx;
  }
  fm.normalized = true;
  return fm;
}

FeatureVector flatten_features(const FeatureMatrices& fm, PrimitiveIdentity source) {
  if (!fm.normalized) throw ValidationError("flatten_features: matrices are not normalized");
  const auto l = fm.position.rows();
  if (fm.position.cols() != l || fm.speed.rows() != l || fm.speed.cols() != l) {
    throw ValidationError("flatten_features: matrices must both be l x l");
  }
  FeatureVector fv;
  fv.source = std::move(source);
  fv.phi.reserve(static_cast<std::size_t>(2 * l * l));
  for (const auto* m : {&fm.position, &fm.speed}) {
    for (Eigen::Index i = 0; i < l; ++i) {
      for (Eigen::Index j = 0; j < l; ++j) fv.phi.push_back((*m)(i, j));
    }
  }
  return fv;
}

FeatureMatrices unflatten_features(const FeatureVector& fv, std::size_t l) {
  if (fv.phi.size() != 2 * l * l) {
    throw ValidationError("unflatten_features: expected " + std::to_string(2 * l * l) +
                          " entries, got " + std::to_string(fv.phi.size()));
  }
  const auto n = static_cast<Eigen::Index>(l);
  FeatureMatrices fm;
  fm.position.resize(n, n);
  fm.speed.resize(n, n);
  std::size_t k = 0;
  for (auto* m : {&fm.position, &fm.speed}) {
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) (*m)(i, j) = fv.phi[k++];
    }
  }
  fm.normalized = true;
  return fm;
}

FeatureVector featurize_primitive(const DrivingPrimitive& prim, std::size_t l) {
  return flatten_features(normalize_matrices(cross_distance_matrices(rescale_primitive(prim, l))),
                          identity_of(prim));
}

std::string features_to_csv(const std::vector<FeatureVector>& features) {
  std::string out = "encounter_id,m,n,label";
  const std::size_t width = features.empty() ? 0 : features.front().phi.size();
  for (std::size_t i = 0; i < width; ++i) out += ",f" + std::to_string(i);
  out += '\n';
  for (const auto& fv : features) {
    if (fv.phi.size() != width) throw ValidationError("features_to_csv: mixed vector lengths");
    out += fv.source.encounter_id + ',' + std::to_string(fv.source.m) + ',' +
           std::to_string(fv.source.n) + ',' + std::to_string(fv.source.label);
    for (const double v : fv.phi) {
      out += ',';
      out += csv::format_double(v);
    }
    out += '\n';
  }
  return out;
}

std::vector<FeatureVector> parse_features_csv(std::string_view text) {
  const auto rows = csv::lines(text);
  if (rows.empty()) throw ParseError("features CSV: missing header");
  const auto header = csv::split(rows.front());
  if (header.size() < 4 || header[0] != "encounter_id" || header[1] != "m" || header[2] != "n" ||
      header[3] != "label") {
    throw ParseError("features CSV: header must start with encounter_id,m,n,label");
  }
  const std::size_t width = header.size() - 4;
  std::vector<FeatureVector> out;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto line_no = std::to_string(r + 1);
    if (csv::trim(rows[r]).empty()) continue;
    const auto fields = csv::split(rows[r]);
    if (fields.size() != header.size()) {
      throw ParseError("features CSV: wrong field count at line " + line_no);
    }
    FeatureVector fv;
    fv.source.encounter_id = std::string(csv::trim(fields[0]));
    const auto m = csv::parse_int(fields[1]);
    const auto n = csv::parse_int(fields[2]);
    const auto label = csv::parse_int(fields[3]);
    if (!m || !n || !label || *m < 0 || *n < *m) {
      throw ParseError("features CSV: bad identity columns at line " + line_no);
    }
    fv.source.m = static_cast<std::size_t>(*m);
    fv.source.n = static_cast<std::size_t>(*n);
    fv.source.label = static_cast<int>(*label);
    fv.phi.reserve(width);
    for (std::size_t i = 4; i < fields.size(); ++i) {
      const auto v = csv::parse_double(fields[i]);
      if (!v) throw ParseError("features CSV: bad value at line " + line_no);
      fv.phi.push_back(*v);
    }
    out.push_back(std::move(fv));
  }
  return out;
}

std::string matrix_to_text(const Eigen::MatrixXd& m) {
  std::string out;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out += ' ';
      out += csv::format_double(m(i, j));
    }
    out += '\n';
  }
  return out;
}

}  // namespace drivprim
