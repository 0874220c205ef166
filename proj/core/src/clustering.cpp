#include "drivprim/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "drivprim/csv.hpp"
#include "drivprim/errors.hpp"
#include "drivprim/parallel.hpp"
#include "drivprim/sampling.hpp"

namespace drivprim {

double squared_distance(const Point& a, const Point& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

double median(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("median of empty set");
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  return values.size() % 2 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
}

namespace {

std::vector<Point> cluster_means(const std::vector<Point>& pts, const std::vector<int>& assign,
                                 std::size_t k, std::size_t dim) {
  std::vector<Point> means(k, Point(dim, 0.0));
  std::vector<std::size_t> counts(k, 0);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    auto& m = means[static_cast<std::size_t>(assign[i])];
    for (std::size_t d = 0; d < dim; ++d) m[d] += pts[i][d];
    ++counts[static_cast<std::size_t>(assign[i])];
  }
  for (std::size_t c = 0; c < k; ++c) {
    for (auto& v : means[c]) v /= static_cast<double>(counts[c]);
  }
  return means;
}

double total_cost(const std::vector<Point>& pts, const std::vector<int>& assign,
                  const std::vector<Point>& centroids) {
  double s = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    s += squared_distance(pts[i], centroids[static_cast<std::size_t>(assign[i])]);
  }
  return s;
}

std::vector<Point> kmeanspp_init(const std::vector<Point>& pts, std::size_t k, Rng& rng) {
  const std::size_t n = pts.size();
  // Greedy variant: draw several D^2 candidates per center, keep the one that
  // lowers the potential most.
  const auto trials = 2 + static_cast<std::size_t>(std::log(static_cast<double>(k)));
  std::vector<Point> centers;
  std::vector<bool> chosen(n, false);
  std::uniform_int_distribution<std::size_t> first(0, n - 1);
  std::size_t idx = first(rng);
  centers.push_back(pts[idx]);
  chosen[idx] = true;
  std::vector<double> d2(n), trial(n), best_d2(n);
  for (std::size_t i = 0; i < n; ++i) d2[i] = squared_distance(pts[i], centers[0]);
  while (centers.size() < k) {
    const double total = std::accumulate(d2.begin(), d2.end(), 0.0);
    if (!(total > 0.0)) {
      // Every remaining point coincides with a center.
      idx = static_cast<std::size_t>(std::find(chosen.begin(), chosen.end(), false) - chosen.begin());
      for (std::size_t i = 0; i < n; ++i) best_d2[i] = std::min(d2[i], squared_distance(pts[i], pts[idx]));
    } else {
      double best_potential = std::numeric_limits<double>::infinity();
      for (std::size_t t = 0; t < trials; ++t) {
        const std::size_t cand = sample::categorical(rng, d2);
        double potential = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          trial[i] = std::min(d2[i], squared_distance(pts[i], pts[cand]));
          potential += trial[i];
        }
        if (potential < best_potential) {
          best_potential = potential;
          idx = cand;
          best_d2.swap(trial);
        }
      }
    }
    chosen[idx] = true;
    centers.push_back(pts[idx]);
    d2.swap(best_d2);
  }
  return centers;
}

struct LloydRun {
  std::vector<Point> centroids;
  std::vector<int> assign;
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> trace;
};

LloydRun lloyd(const std::vector<Point>& pts, std::size_t k, std::uint64_t seed, int max_iterations) {
  const std::size_t n = pts.size();
  const std::size_t dim = pts.front().size();
  Rng rng(seed);
  LloydRun run;
  run.centroids = kmeanspp_init(pts, k, rng);
  run.assign.assign(n, -1);
  std::vector<int> previous;
  double last_objective = std::numeric_limits<double>::infinity();
  for (int iter = 0; iter < max_iterations; ++iter) {
    std::vector<double> own(n);
    std::vector<std::size_t> counts(k, 0);
    auto& assign = run.assign;
    for (std::size_t i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      int arg = 0;
      for (std::size_t c = 0; c < k; ++c) {
        const double d = squared_distance(pts[i], run.centroids[c]);
        if (d < best) {
          best = d;
          arg = static_cast<int>(c);
        }
      }
      assign[i] = arg;
      own[i] = best;
      ++counts[static_cast<std::size_t>(arg)];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] > 0) continue;
      std::size_t far = n;
      for (std::size_t i = 0; i < n; ++i) {
        if (counts[static_cast<std::size_t>(assign[i])] < 2) continue;
        if (far == n || own[i] > own[far]) far = i;
      }
      --counts[static_cast<std::size_t>(assign[far])];
      assign[far] = static_cast<int>(c);
      own[far] = 0.0;
      counts[c] = 1;
    }
    run.centroids = cluster_means(pts, assign, k, dim);
    const double objective = total_cost(pts, assign, run.centroids);
    if (objective > last_objective * (1.0 + 1e-12) + 1e-12) {
      throw std::logic_error("kmeans_fit: objective increased during Lloyd iteration");
    }
    last_objective = objective;
    run.trace.push_back(objective);
    run.iterations = iter + 1;
    if (assign == previous) {
      run.converged = true;
      break;
    }
    previous = assign;
  }
  run.objective = last_objective;
  return run;
}

}  // namespace

ClusterModel kmeans_fit(const std::vector<Point>& points, std::size_t k, std::uint64_t seed,
                        const KMeansOptions& opts) {
  const std::size_t n = points.size();
  if (k == 0) throw std::invalid_argument("kmeans_fit: k must be >= 1");
  if (k > n) {
    throw std::invalid_argument("kmeans_fit: k=" + std::to_string(k) + " exceeds N=" + std::to_string(n));
  }
  const std::size_t dim = points.front().size();
  for (const auto& p : points) {
    if (p.size() != dim) throw std::invalid_argument("kmeans_fit: mixed vector lengths");
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return points[a] < points[b]; });
  std::vector<Point> pts;
  pts.reserve(n);
  for (const auto i : order) pts.push_back(points[i]);

  if (opts.restarts < 1) throw std::invalid_argument("kmeans_fit: restarts must be >= 1");
  LloydRun best;
  for (int r = 0; r < opts.restarts; ++r) {
    auto run = lloyd(pts, k, mix_seed(seed, static_cast<std::uint64_t>(r)), opts.max_iterations);
    if (r == 0 || run.objective < best.objective) best = std::move(run);
  }

  ClusterModel model;
  model.k = k;
  model.seed = seed;
  model.iterations = best.iterations;
  model.converged = best.converged;
  model.objective_trace = std::move(best.trace);
  const auto& assign = best.assign;
  const double last_objective = best.objective;
  model.centroids = std::move(best.centroids);
  model.assignments.assign(n, 0);
  for (std::size_t s = 0; s < n; ++s) model.assignments[order[s]] = assign[s];
  model.objective = last_objective;
  model.lambda_w = std::numeric_limits<double>::quiet_NaN();
  model.lambda_b = std::numeric_limits<double>::quiet_NaN();
  if (n > k) model.lambda_w = model.objective / static_cast<double>(n - k);
  if (k >= 2) {
    Point mu(dim, 0.0);
    for (const auto& p : points) {
      for (std::size_t d = 0; d < dim; ++d) mu[d] += p[d];
    }
    for (auto& v : mu) v /= static_cast<double>(n);
    std::vector<std::size_t> counts(k, 0);
    for (const int a : model.assignments) ++counts[static_cast<std::size_t>(a)];
    double between = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      between += static_cast<double>(counts[c]) * squared_distance(model.centroids[c], mu);
    }
    model.lambda_b = between / static_cast<double>(k - 1);
  }
  return model;
}

ClusterModel kmeans_fit(const std::vector<FeatureVector>& vectors, std::size_t k,
                        std::uint64_t seed, const KMeansOptions& opts) {
  std::vector<Point> pts;
  pts.reserve(vectors.size());
  for (const auto& v : vectors) pts.push_back(v.phi);
  return kmeans_fit(pts, k, seed, opts);
}

ClusterQuality cluster_quality(const ClusterModel& model, const std::vector<Point>& points) {
  const std::size_t n = points.size();
  const std::size_t k = model.k;
  if (model.assignments.size() != n) {
    throw std::invalid_argument("cluster_quality: assignment count differs from point count");
  }
  if (k < 2) throw std::domain_error("cluster_quality: lambda_b undefined for k = 1");
  if (n <= k) throw std::domain_error("cluster_quality: lambda_w undefined for N = k");
  const std::size_t dim = points.front().size();
  // Cluster means recomputed from the points rather than read from the model.
  const auto means = cluster_means(points, model.assignments, k, dim);
  Point mu(dim, 0.0);
  for (const auto& p : points) {
    for (std::size_t d = 0; d < dim; ++d) mu[d] += p[d];
  }
  for (auto& v : mu) v /= static_cast<double>(n);
  std::vector<std::size_t> counts(k, 0);
  double within = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto c = static_cast<std::size_t>(model.assignments[i]);
    ++counts[c];
    within += squared_distance(points[i], means[c]);
  }
  double between = 0.0;
  for (std::size_t c = 0; c < k; ++c) {
    if (counts[c] == 0) continue;
    between += static_cast<double>(counts[c]) * squared_distance(means[c], mu);
  }
  return {within / static_cast<double>(n - k), between / static_cast<double>(k - 1)};
}

std::vector<SweepRow> elbow_sweep(const std::vector<Point>& points, std::size_t k_min,
                                  std::size_t k_max, int seeds_per_k, std::uint64_t seed,
                                  unsigned jobs) {
  if (!(k_min >= 2 && k_min < k_max && k_max < points.size())) {
    throw std::invalid_argument("elbow_sweep: need 2 <= k_min < k_max < N (N=" +
                                std::to_string(points.size()) + ")");
  }
  if (seeds_per_k < 1) throw std::invalid_argument("elbow_sweep: seeds_per_k must be >= 1");
  const std::size_t span = k_max - k_min + 1;
  const auto per_k = static_cast<std::size_t>(seeds_per_k);
  std::vector<ClusterModel> fits(span * per_k);
  parallel_for(fits.size(), jobs, [&](std::size_t job) {
    const std::size_t k = k_min + job / per_k;
    const std::uint64_t s = mix_seed(mix_seed(seed, k), job % per_k);
    fits[job] = kmeans_fit(points, k, s);
  });

  std::vector<SweepRow> rows;
  for (std::size_t i = 0; i < span; ++i) {
    std::vector<double> w, b, o;
    for (std::size_t r = 0; r < per_k; ++r) {
      const auto& f = fits[i * per_k + r];
      w.push_back(f.lambda_w);
      b.push_back(f.lambda_b);
      o.push_back(f.objective);
    }
    SweepRow row;
    row.k = k_min + i;
    row.lambda_w = median(w);
    row.lambda_b = median(b);
    row.objective = median(o);
    row.d_lambda_w = std::numeric_limits<double>::quiet_NaN();
    row.d_lambda_b = std::numeric_limits<double>::quiet_NaN();
    if (!rows.empty()) {
      const double dk = static_cast<double>(row.k - rows.back().k);
      row.d_lambda_w = (row.lambda_w - rows.back().lambda_w) / dk;
      row.d_lambda_b = (row.lambda_b - rows.back().lambda_b) / dk;
    }
    rows.push_back(row);
  }
  return rows;
}

std::size_t find_elbow(const std::vector<SweepRow>& rows) {
  if (rows.size() < 3) throw std::invalid_argument("find_elbow: need at least 3 sweep rows");
  const double k0 = static_cast<double>(rows.front().k);
  const double k1 = static_cast<double>(rows.back().k);
  double hi = rows.front().objective, lo = rows.front().objective;
  for (const auto& r : rows) {
    hi = std::max(hi, r.objective);
    lo = std::min(lo, r.objective);
  }
  if (!(hi > lo)) return rows[1].k;
  const double y0 = (rows.front().objective - lo) / (hi - lo);
  const double y1 = (rows.back().objective - lo) / (hi - lo);
  std::size_t best_k = rows[1].k;
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i + 1 < rows.size(); ++i) {
    const double x = (static_cast<double>(rows[i].k) - k0) / (k1 - k0);
    const double y = (rows[i].objective - lo) / (hi - lo);
    const double gap = (y0 + (y1 - y0) * x) - y;  // height below the end-to-end chord
    if (gap > best) {
      best = gap;
      best_k = rows[i].k;
    }
  }
  return best_k;
}

std::vector<ClusterShare> cluster_distribution(const std::vector<int>& assignments, std::size_t k) {
  std::vector<ClusterShare> out(k);
  for (std::size_t c = 0; c < k; ++c) out[c].cluster = static_cast<int>(c);
  for (const int a : assignments) {
    if (a < 0 || static_cast<std::size_t>(a) >= k) {
      throw std::out_of_range("cluster_distribution: assignment outside [0, k)");
    }
    ++out[static_cast<std::size_t>(a)].count;
  }
  for (auto& s : out) {
    s.fraction = assignments.empty() ? 0.0
                                     : static_cast<double>(s.count) / static_cast<double>(assignments.size());
  }
  return out;
}

std::string centroids_to_csv(const ClusterModel& model) {
  std::string out;
  const std::size_t dim = model.centroids.empty() ? 0 : model.centroids.front().size();
  for (std::size_t d = 0; d < dim; ++d) out += (d ? ",c" : "c") + std::to_string(d);
  out += '\n';
  for (const auto& c : model.centroids) {
    for (std::size_t d = 0; d < c.size(); ++d) {
      if (d) out += ',';
      out += csv::format_double(c[d]);
    }
    out += '\n';
  }
  return out;
}

std::string assignments_to_csv(const std::vector<PrimitiveIdentity>& ids,
                               const std::vector<int>& assignments) {
  if (ids.size() != assignments.size()) {
    throw std::invalid_argument("assignments_to_csv: identity and assignment counts differ");
  }
  std::string out = "encounter_id,m,n,label,cluster\n";
  for (std::size_t i = 0; i < ids.size(); ++i) {
    out += ids[i].encounter_id + ',' + std::to_string(ids[i].m) + ',' + std::to_string(ids[i].n) +
           ',' + std::to_string(ids[i].label) + ',' + std::to_string(assignments[i]) + '\n';
  }
  return out;
}

std::vector<AssignmentRow> parse_assignments_csv(std::string_view text) {
  const auto rows = csv::lines(text);
  if (rows.empty() || csv::trim(rows.front()) != "encounter_id,m,n,label,cluster") {
    throw ParseError("assignments CSV: header must be encounter_id,m,n,label,cluster");
  }
  std::vector<AssignmentRow> out;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (csv::trim(rows[r]).empty()) continue;
    const auto f = csv::split(rows[r]);
    const auto bad = [&] { return ParseError("assignments CSV: malformed row at line " + std::to_string(r + 1)); };
    if (f.size() != 5) throw bad();
    long long v[4];
    for (int c = 0; c < 4; ++c) {
      const auto parsed = csv::parse_int(f[static_cast<std::size_t>(c) + 1]);
      if (!parsed) throw bad();
      v[c] = *parsed;
    }
    if (v[0] < 0 || v[1] < v[0] || v[3] < 0) throw bad();
    out.push_back({{std::string(csv::trim(f[0])), static_cast<std::size_t>(v[0]), static_cast<std::size_t>(v[1]),
                    static_cast<int>(v[2])},
                   static_cast<int>(v[3])});
  }
  return out;
}

std::string sweep_to_csv(const std::vector<SweepRow>& rows) {
  auto num = [](double v) { return std::isnan(v) ? std::string() : csv::format_double(v); };
  std::string out = "k,lambda_w,lambda_b,objective,d_lambda_w,d_lambda_b\n";
  for (const auto& r : rows) {
    out += std::to_string(r.k) + ',' + num(r.lambda_w) + ',' + num(r.lambda_b) + ',' +
           num(r.objective) + ',' + num(r.d_lambda_w) + ',' + num(r.d_lambda_b) + '\n';
  }
  return out;
}

}  // namespace drivprim
