#include "drivprim/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include "drivprim/csv.hpp"
#include "drivprim/errors.hpp"
#include "drivprim/sampling.hpp"

namespace drivprim::synth {

namespace {

constexpr double kPi = std::numbers::pi;

struct FamilyName {
  ScenarioFamily family;
  std::string_view name;
};

constexpr FamilyName kFamilyNames[] = {
    {ScenarioFamily::BothStill, "both_still"},
    {ScenarioFamily::VerticalCross, "vertical_cross"},
    {ScenarioFamily::SameDirection, "same_direction"},
    {ScenarioFamily::OppositeDirection, "opposite_direction"},
    {ScenarioFamily::OneMovingOneStill, "one_moving_one_still"},
    {ScenarioFamily::FollowThenTurn, "follow_then_turn"},
};

std::size_t sample_count(double duration_s, double rate_hz) {
  return static_cast<std::size_t>(std::llround(duration_s * rate_hz)) + 1;
}

// First sample index of each phase.
std::vector<std::size_t> phase_starts(const ScenarioSpec& spec) {
  std::vector<std::size_t> starts;
  double t = 0.0;
  for (const auto& phase : spec.segment_plan) {
    starts.push_back(static_cast<std::size_t>(std::llround(t * spec.rate_hz)));
    t += phase.duration_s;
  }
  return starts;
}

}  // namespace

std::string_view to_string(ScenarioFamily family) {
  for (const auto& f : kFamilyNames) {
    if (f.family == family) return f.name;
  }
  return "unknown";
}

ScenarioFamily family_from_string(std::string_view name) {
  for (const auto& f : kFamilyNames) {
    if (f.name == name) return f.family;
  }
  throw std::invalid_argument("unknown scenario family '" + std::string(name) + "'");
}

void ScenarioSpec::validate() const {
  if (!(duration_s > 0.0)) throw std::invalid_argument("scenario: duration_s must be > 0");
  if (!(rate_hz > 0.0)) throw std::invalid_argument("scenario: rate_hz must be > 0");
  if (!(noise_std_pos >= 0.0) || !(noise_std_speed >= 0.0)) {
    throw std::invalid_argument("scenario: noise standard deviations must be >= 0");
  }
  if (!(start1.speed >= 0.0) || !(start2.speed >= 0.0)) {
    throw std::invalid_argument("scenario: starting speeds must be >= 0");
  }
  if (segment_plan.empty()) throw std::invalid_argument("scenario: empty segment plan");
  double total = 0.0;
  for (const auto& phase : segment_plan) {
    if (!(phase.duration_s > 0.0)) {
      throw std::invalid_argument("scenario: phase '" + phase.name + "' has non-positive duration");
    }
    for (const auto* m : {&phase.vehicle1, &phase.vehicle2}) {
      if (m->yaw_rate != 0.0 && m->accel != 0.0) {
        throw std::invalid_argument("scenario: phase '" + phase.name +
                                    "' combines turning with acceleration");
      }
    }
    total += phase.duration_s;
  }
  if (std::abs(total - duration_s) > 1e-9 * std::max(1.0, duration_s)) {
    throw std::invalid_argument("scenario: phase durations sum to " + csv::format_double(total) +
                                " s, expected " + csv::format_double(duration_s));
  }
  const auto starts = phase_starts(*this);
  const std::size_t count = sample_count(duration_s, rate_hz);
  for (std::size_t p = 1; p < starts.size(); ++p) {
    if (starts[p] <= starts[p - 1] || starts[p] >= count) {
      throw std::invalid_argument("scenario: phase '" + segment_plan[p].name +
                                  "' is too short to contain a sample");
    }
  }
}

ScenarioSpec default_scenario(ScenarioFamily family, double duration_s, std::uint64_t seed) {
  ScenarioSpec spec;
  spec.family = family;
  spec.duration_s = duration_s;
  spec.seed = seed;
  const double half = 0.5 * duration_s;
  switch (family) {
    case ScenarioFamily::BothStill:
      spec.start1 = {{0.0, 0.0}, 0.0, 0.0};
      spec.start2 = {{8.0, 3.0}, kPi, 0.0};
      spec.segment_plan = {{"hold", duration_s, {}, {}}};
      break;
    case ScenarioFamily::VerticalCross: {
      // Vehicle 1 heads east through the origin at t = half; vehicle 2 heads
      // north through it two seconds later.
      const double s1 = 10.0, s2 = 8.0;
      spec.start1 = {{-s1 * half, 0.0}, 0.0, s1};
      spec.start2 = {{0.0, -s2 * (half + 2.0)}, 0.5 * kPi, s2};
      spec.segment_plan = {{"cross", duration_s, {}, {}}};
      break;
    }
    case ScenarioFamily::SameDirection:
      spec.start1 = {{20.0, 0.0}, 0.0, 12.0};
      spec.start2 = {{0.0, 0.0}, 0.0, 12.0};
      spec.segment_plan = {{"cruise", half, {}, {}},
                           {"leader_brakes", duration_s - half, {-1.0, 0.0}, {}}};
      break;
    case ScenarioFamily::OppositeDirection:
      spec.start1 = {{-5.0 * half, 0.0}, 0.0, 10.0};
      spec.start2 = {{5.0 * half, 3.5}, kPi, 10.0};
      spec.segment_plan = {{"approach", half, {}, {}},
                           {"depart_accelerating", duration_s - half, {0.5, 0.0}, {}}};
      break;
    case ScenarioFamily::OneMovingOneStill:
      spec.start1 = {{0.0, 0.0}, 0.0, 0.0};
      spec.start2 = {{-50.0, 4.0}, 0.0, 6.0};
      spec.segment_plan = {{"approach", half, {}, {}},
                           {"brake_to_stop", duration_s - half, {}, {-0.6, 0.0}}};
      break;
    case ScenarioFamily::FollowThenTurn:
      spec.start1 = {{15.0, 0.0}, 0.0, 8.0};
      spec.start2 = {{0.0, 0.0}, 0.0, 7.0};
      spec.segment_plan = {{"follow", half, {}, {}},
                           {"turn_left", duration_s - half, {}, {0.0, 0.5 * kPi / (duration_s - half)}}};
      break;
  }
  return spec;
}

VehicleState advance(const VehicleState& start, const Motion& motion, double elapsed) {
  VehicleState out = start;
  if (motion.yaw_rate != 0.0) {
    const double h1 = start.heading_rad + motion.yaw_rate * elapsed;
    const double radius = start.speed / motion.yaw_rate;
    out.position.x += radius * (std::sin(h1) - std::sin(start.heading_rad));
    out.position.y -= radius * (std::cos(h1) - std::cos(start.heading_rad));
    out.heading_rad = h1;
    return out;
  }
  double moving = elapsed;
  if (motion.accel < 0.0) moving = std::min(elapsed, start.speed / -motion.accel);
  const double dist = start.speed * moving + 0.5 * motion.accel * moving * moving;
  out.position.x += dist * std::cos(start.heading_rad);
  out.position.y += dist * std::sin(start.heading_rad);
  out.speed = std::max(0.0, start.speed + motion.accel * moving);
  return out;
}

LabeledEncounter generate_encounter(const ScenarioSpec& spec) {
  spec.validate();
  const std::size_t count = sample_count(spec.duration_s, spec.rate_hz);
  const auto starts = phase_starts(spec);
  Rng rng(spec.seed);

  std::vector<TrajectorySample> samples;
  samples.reserve(count);
  std::vector<int> labels;
  labels.reserve(count);
  VehicleState a = spec.start1, b = spec.start2;
  double phase_t0 = 0.0;
  std::size_t phase = 0;
  for (std::size_t i = 0; i < count; ++i) {
    while (phase + 1 < starts.size() && i >= starts[phase + 1]) {
      const double d = spec.segment_plan[phase].duration_s;
      a = advance(a, spec.segment_plan[phase].vehicle1, d);
      b = advance(b, spec.segment_plan[phase].vehicle2, d);
      phase_t0 += d;
      ++phase;
    }
    const double t = static_cast<double>(i) / spec.rate_hz;
    const auto& plan = spec.segment_plan[phase];
    const auto sa = advance(a, plan.vehicle1, t - phase_t0);
    const auto sb = advance(b, plan.vehicle2, t - phase_t0);
    auto noisy = [&](double v, double sd) { return sd > 0.0 ? v + sd * sample::normal(rng) : v; };
    TrajectorySample s;
    s.t = t;
    s.p1 = {noisy(sa.position.x, spec.noise_std_pos), noisy(sa.position.y, spec.noise_std_pos)};
    s.p2 = {noisy(sb.position.x, spec.noise_std_pos), noisy(sb.position.y, spec.noise_std_pos)};
    s.v1 = std::max(0.0, noisy(sa.speed, spec.noise_std_speed));
    s.v2 = std::max(0.0, noisy(sb.speed, spec.noise_std_speed));
    samples.push_back(s);
    labels.push_back(static_cast<int>(phase));
  }
  LabeledEncounter out{DrivingEncounter(spec.id, std::move(samples), spec.rate_hz, Frame::LocalMeters),
                       {}, std::move(labels)};
  out.truth_boundaries.assign(starts.begin() + 1, starts.end());
  return out;
}

LabeledEncounter generate_planted_phases(const PlantedSpec& spec) {
  if (spec.num_phases < 1) throw std::invalid_argument("planted: num_phases must be >= 1");
  const auto phases = static_cast<std::size_t>(spec.num_phases);
  if (spec.length < 2 || spec.length < phases * spec.min_phase_samples) {
    throw std::invalid_argument("planted: length too short for the phase plan");
  }
  if (!(spec.noise_std > 0.0) || !(spec.rate_hz > 0.0)) {
    throw std::invalid_argument("planted: noise_std and rate_hz must be > 0");
  }
  Rng rng(spec.seed);
  const double sigma = spec.noise_std;

  // Means drawn in a box of +-4 sigma per axis around a plausible encounter
  // configuration, rejected until every pair is far enough apart.
  const double base[6] = {-10.0, 0.0, 10.0, 0.0, 10.0, 10.0};
  std::vector<std::array<double, 6>> means;
  for (int attempt = 0; means.size() < phases; ++attempt) {
    if (attempt > 100000) throw std::runtime_error("planted: could not place separated means");
    std::array<double, 6> mu{};
    for (int d = 0; d < 6; ++d) mu[d] = base[d] + sigma * (8.0 * sample::uniform(rng) - 4.0);
    bool ok = true;
    for (const auto& other : means) {
      double d2 = 0.0;
      for (int d = 0; d < 6; ++d) d2 += (mu[d] - other[d]) * (mu[d] - other[d]);
      ok = ok && std::sqrt(d2) >= spec.min_separation_sigma * sigma;
    }
    if (ok) means.push_back(mu);
  }

  // Random phase lengths, each at least min_phase_samples.
  const std::size_t slack = spec.length - phases * spec.min_phase_samples;
  std::vector<std::size_t> cuts;
  for (std::size_t p = 0; p + 1 < phases; ++p) {
    cuts.push_back(static_cast<std::size_t>(std::floor(sample::uniform(rng) * static_cast<double>(slack + 1))));
  }
  std::sort(cuts.begin(), cuts.end());
  std::vector<std::size_t> starts{0};
  for (std::size_t p = 0; p < cuts.size(); ++p) {
    starts.push_back(cuts[p] + (p + 1) * spec.min_phase_samples);
  }

  std::vector<TrajectorySample> samples;
  std::vector<int> labels;
  samples.reserve(spec.length);
  labels.reserve(spec.length);
  std::size_t phase = 0;
  for (std::size_t i = 0; i < spec.length; ++i) {
    while (phase + 1 < phases && i >= starts[phase + 1]) ++phase;
    const auto& mu = means[phase];
    auto draw = [&](int d) { return mu[d] + sigma * sample::normal(rng); };
    TrajectorySample s;
    s.t = static_cast<double>(i) / spec.rate_hz;
    s.p1 = {draw(0), draw(1)};
    s.p2 = {draw(2), draw(3)};
    s.v1 = std::max(0.0, draw(4));
    s.v2 = std::max(0.0, draw(5));
    samples.push_back(s);
    labels.push_back(static_cast<int>(phase));
  }
  LabeledEncounter out{DrivingEncounter(spec.id, std::move(samples), spec.rate_hz, Frame::LocalMeters),
                       {}, std::move(labels)};
  out.truth_boundaries.assign(starts.begin() + 1, starts.end());
  return out;
}

std::vector<int> max_weight_assignment(const std::vector<std::vector<double>>& weight) {
  const std::size_t rows = weight.size();
  const std::size_t cols = rows ? weight.front().size() : 0;
  const std::size_t n = std::max(rows, cols);
  if (n == 0) return {};
  double top = 0.0;
  for (const auto& r : weight) {
    for (const double w : r) top = std::max(top, w);
  }
  // Hungarian algorithm (potentials, 1-based) minimizing top - weight on a
  // square matrix padded with zero-weight dummies.
  auto cost = [&](std::size_t i, std::size_t j) {
    const double w = (i < rows && j < cols) ? weight[i][j] : 0.0;
    return top - w;
  };
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> match(n + 1, 0), way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    match[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<bool> used(n + 1, false);
    do {
      used[j0] = true;
      const std::size_t i0 = match[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> out(rows, -1);
  for (std::size_t j = 1; j <= n; ++j) {
    const std::size_t i = match[j];
    if (i >= 1 && i <= rows && j <= cols) out[i - 1] = static_cast<int>(j - 1);
  }
  return out;
}

double segmentation_accuracy(const std::vector<int>& predicted, const std::vector<int>& truth) {
  if (predicted.size() != truth.size()) {
    throw std::invalid_argument("segmentation_accuracy: length mismatch");
  }
  if (truth.empty()) return 1.0;
  auto relabel = [](const std::vector<int>& labels) {
    std::vector<int> sorted = labels;
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    std::vector<int> dense(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
      dense[i] = static_cast<int>(std::lower_bound(sorted.begin(), sorted.end(), labels[i]) - sorted.begin());
    }
    return std::pair{dense, sorted.size()};
  };
  const auto [p, np] = relabel(predicted);
  const auto [q, nq] = relabel(truth);
  std::vector<std::vector<double>> confusion(np, std::vector<double>(nq, 0.0));
  for (std::size_t i = 0; i < p.size(); ++i) {
    confusion[static_cast<std::size_t>(p[i])][static_cast<std::size_t>(q[i])] += 1.0;
  }
  const auto match = max_weight_assignment(confusion);
  double agree = 0.0;
  for (std::size_t r = 0; r < np; ++r) {
    if (match[r] >= 0) agree += confusion[r][static_cast<std::size_t>(match[r])];
  }
  return agree / static_cast<double>(truth.size());
}

OracleResult oracle_kmeans(const std::vector<Point>& points, std::size_t k) {
  const std::size_t n = points.size();
  if (k == 0 || k > n) throw std::invalid_argument("oracle_kmeans: need 1 <= k <= N");
  if (n > kOracleMaxPoints || k > kOracleMaxK) {
    throw std::invalid_argument("oracle_kmeans: instance too large for exhaustive enumeration");
  }
  const std::size_t dim = points.front().size();
  for (const auto& p : points) {
    if (p.size() != dim) throw std::invalid_argument("oracle_kmeans: mixed vector lengths");
  }

  auto objective_of = [&](const std::vector<int>& part) {
    std::vector<Point> mean(k, Point(dim, 0.0));
    std::vector<double> count(k, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      auto& m = mean[static_cast<std::size_t>(part[i])];
      for (std::size_t d = 0; d < dim; ++d) m[d] += points[i][d];
      count[static_cast<std::size_t>(part[i])] += 1.0;
    }
    for (std::size_t c = 0; c < k; ++c) {
      for (auto& v : mean[c]) v /= count[c];
    }
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += squared_distance(points[i], mean[static_cast<std::size_t>(part[i])]);
    return s;
  };

  OracleResult best;
  best.objective = std::numeric_limits<double>::infinity();
  std::vector<int> part(n, 0);
  // Restricted growth strings: part[i] <= 1 + max(part[0..i-1]).
  auto recurse = [&](auto&& self, std::size_t i, int blocks) -> void {
    const auto remaining = static_cast<int>(n - i);
    if (blocks + remaining < static_cast<int>(k)) return;
    if (i == n) {
      if (blocks != static_cast<int>(k)) return;
      const double obj = objective_of(part);
      if (obj < best.objective) {
        best.objective = obj;
        best.partition = part;
      }
      return;
    }
    for (int b = 0; b <= std::min(blocks, static_cast<int>(k) - 1); ++b) {
      part[i] = b;
      self(self, i + 1, std::max(blocks, b + 1));
    }
  };
  recurse(recurse, 0, 0);
  return best;
}

std::string truth_to_csv(const std::vector<int>& labels) {
  std::string out = "sample_index,phase_id\n";
  for (std::size_t i = 0; i < labels.size(); ++i) {
    out += std::to_string(i) + ',' + std::to_string(labels[i]) + '\n';
  }
  return out;
}

std::vector<int> parse_truth_csv(std::string_view text) {
  const auto rows = csv::lines(text);
  if (rows.empty() || csv::trim(rows.front()) != "sample_index,phase_id") {
    throw ParseError("truth CSV: header must be sample_index,phase_id");
  }
  std::vector<int> labels;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (csv::trim(rows[r]).empty()) continue;
    const auto f = csv::split(rows[r]);
    const auto idx = f.size() == 2 ? csv::parse_int(f[0]) : std::nullopt;
    const auto phase = f.size() == 2 ? csv::parse_int(f[1]) : std::nullopt;
    if (!idx || !phase || *idx != static_cast<long long>(labels.size())) {
      throw ParseError("truth CSV: malformed row at line " + std::to_string(r + 1));
    }
    labels.push_back(static_cast<int>(*phase));
  }
  return labels;
}

std::vector<LabeledEncounter> generate_corpus(std::size_t count, std::uint64_t seed,
                                              double duration_s, double noise_std_pos,
                                              double noise_std_speed) {
  std::vector<LabeledEncounter> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const auto family = kAllFamilies[i % std::size(kAllFamilies)];
    auto spec = default_scenario(family, duration_s, mix_seed(seed, i));
    spec.noise_std_pos = noise_std_pos;
    spec.noise_std_speed = noise_std_speed;
    char id[32];
    std::snprintf(id, sizeof(id), "enc_%03zu", i);
    spec.id = id;
    out.push_back(generate_encounter(spec));
  }
  return out;
}

}  // namespace drivprim::synth
