#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "drivprim/clustering.hpp"
#include "drivprim/errors.hpp"
#include "drivprim/synthetic.hpp"
#include "oracles.hpp"

using namespace drivprim;

namespace {

std::vector<Point> blobs(std::size_t count, std::size_t per, double spread, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(0.0, spread);
  std::vector<Point> pts;
  for (std::size_t b = 0; b < count; ++b) {
    for (std::size_t i = 0; i < per; ++i) pts.push_back({20.0 * static_cast<double>(b) + z(rng), z(rng)});
  }
  return pts;
}

}  // namespace

TEST(KMeans, FourPointExample) {
  const std::vector<Point> pts{{0.0}, {0.1}, {10.0}, {10.1}};
  const auto m = kmeans_fit(pts, 2, 1);
  EXPECT_EQ(m.assignments[0], m.assignments[1]);
  EXPECT_EQ(m.assignments[2], m.assignments[3]);
  EXPECT_NE(m.assignments[0], m.assignments[2]);
  std::vector<double> c{m.centroids[0][0], m.centroids[1][0]};
  std::sort(c.begin(), c.end());
  EXPECT_NEAR(c[0], 0.05, 1e-12);
  EXPECT_NEAR(c[1], 10.05, 1e-12);
  EXPECT_NEAR(m.objective, 0.01, 1e-12);
  EXPECT_TRUE(m.converged);
}

TEST(KMeans, KEqualsNAndKEqualsOne) {
  const std::vector<Point> pts{{1.0, 2.0}, {3.0, -1.0}, {0.5, 0.5}, {7.0, 2.0}};
  const auto all = kmeans_fit(pts, 4, 3);
  EXPECT_EQ(all.objective, 0.0);
  std::vector<int> a = all.assignments;
  std::sort(a.begin(), a.end());
  EXPECT_EQ(a, (std::vector<int>{0, 1, 2, 3}));
  EXPECT_TRUE(std::isnan(all.lambda_w));

  const auto one = kmeans_fit(pts, 1, 3);
  EXPECT_NEAR(one.centroids[0][0], 11.5 / 4.0, 1e-12);
  EXPECT_NEAR(one.centroids[0][1], 3.5 / 4.0, 1e-12);
  EXPECT_NEAR(one.objective, oracle::partition_objective(pts, {0, 0, 0, 0}, 1), 1e-12);
  EXPECT_TRUE(std::isnan(one.lambda_b));
}

TEST(KMeans, Errors) {
  const std::vector<Point> pts{{1.0}, {2.0}};
  EXPECT_THROW(kmeans_fit(pts, 3, 0), std::invalid_argument);
  EXPECT_THROW(kmeans_fit(pts, 0, 0), std::invalid_argument);
  EXPECT_THROW(kmeans_fit(std::vector<Point>{{1.0}, {2.0, 3.0}}, 1, 0), std::invalid_argument);
}

TEST(KMeans, ModelInvariants) {
  const auto pts = blobs(4, 15, 2.0, 9);
  const auto m = kmeans_fit(pts, 4, 5);
  std::vector<std::size_t> counts(4, 0);
  for (int a : m.assignments) {
    ASSERT_GE(a, 0);
    ASSERT_LT(a, 4);
    ++counts[static_cast<std::size_t>(a)];
  }
  for (auto c : counts) EXPECT_GT(c, 0u);
  double sum = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    sum += squared_distance(pts[i], m.centroids[static_cast<std::size_t>(m.assignments[i])]);
  }
  EXPECT_NEAR(sum, m.objective, 1e-9 * m.objective);
  // Nearest-centroid assignment with lowest-index ties.
  for (std::size_t i = 0; i < pts.size(); ++i) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < 4; ++c) {
      if (squared_distance(pts[i], m.centroids[c]) < squared_distance(pts[i], m.centroids[best])) best = c;
    }
    EXPECT_EQ(static_cast<std::size_t>(m.assignments[i]), best);
  }
  for (std::size_t i = 1; i < m.objective_trace.size(); ++i) {
    EXPECT_LE(m.objective_trace[i], m.objective_trace[i - 1] * (1.0 + 1e-12));
  }
}

TEST(KMeans, PermutationInvariance) {
  auto pts = blobs(3, 10, 4.0, 12);
  const auto base = kmeans_fit(pts, 3, 77);
  std::vector<std::size_t> perm(pts.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::mt19937_64 rng(1);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<Point> shuffled;
  for (auto i : perm) shuffled.push_back(pts[i]);
  const auto m = kmeans_fit(shuffled, 3, 77);
  EXPECT_EQ(m.objective, base.objective);
  for (std::size_t i = 0; i < perm.size(); ++i) EXPECT_EQ(m.assignments[i], base.assignments[perm[i]]);
}

TEST(KMeans, IdenticalPointsGiveZeroLambdas) {
  const std::vector<Point> pts(6, Point{2.0, 2.0});
  const auto m = kmeans_fit(pts, 3, 4);
  EXPECT_EQ(m.objective, 0.0);
  const auto q = cluster_quality(m, pts);
  EXPECT_EQ(q.lambda_w, 0.0);
  EXPECT_EQ(q.lambda_b, 0.0);
}

TEST(KMeans, NeverBelowExhaustiveOracle) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t k = 1 + static_cast<std::size_t>(trial % 3);
    std::vector<Point> pts(9, Point(2));
    for (auto& p : pts) {
      for (auto& v : p) v = u(rng);
    }
    const auto best = synth::oracle_kmeans(pts, k);
    EXPECT_GE(kmeans_fit(pts, k, static_cast<std::uint64_t>(trial)).objective, best.objective - 1e-9);
  }
}

TEST(Quality, HandExample) {
  const std::vector<Point> pts{{0.0}, {0.0}, {1.0}, {1.0}};
  ClusterModel m;
  m.k = 2;
  m.assignments = {0, 0, 1, 1};
  const auto q = cluster_quality(m, pts);
  EXPECT_DOUBLE_EQ(q.lambda_w, 0.0);
  EXPECT_DOUBLE_EQ(q.lambda_b, 1.0);
}

TEST(Quality, UndefinedCases) {
  const std::vector<Point> pts{{0.0}, {1.0}};
  ClusterModel one;
  one.k = 1;
  one.assignments = {0, 0};
  EXPECT_THROW(cluster_quality(one, pts), std::domain_error);
  ClusterModel full;
  full.k = 2;
  full.assignments = {0, 1};
  EXPECT_THROW(cluster_quality(full, pts), std::domain_error);
}

TEST(Quality, MatchesDirectFormulas) {
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Point> pts(30, Point(5));
    for (auto& p : pts) {
      for (auto& v : p) v = u(rng);
    }
    const std::size_t k = 2 + static_cast<std::size_t>(trial % 5);
    const auto m = kmeans_fit(pts, k, static_cast<std::uint64_t>(trial));
    const auto q = cluster_quality(m, pts);
    const auto ref = oracle::lambdas(pts, m.assignments, static_cast<int>(k));
    EXPECT_NEAR(q.lambda_w, ref.within, 1e-9 * std::max(1.0, ref.within));
    EXPECT_NEAR(q.lambda_b, ref.between, 1e-9 * std::max(1.0, ref.between));
    EXPECT_NEAR(m.lambda_w, ref.within, 1e-9 * std::max(1.0, ref.within));
    EXPECT_NEAR(m.lambda_b, ref.between, 1e-9 * std::max(1.0, ref.between));
  }
}

TEST(Sweep, PlantedBlobsElbowAndMonotoneObjective) {
  const auto pts = blobs(5, 20, 1.0, 2);
  const auto rows = elbow_sweep(pts, 2, 10, 5, 3, 2);
  ASSERT_EQ(rows.size(), 9u);
  EXPECT_EQ(rows.front().k, 2u);
  EXPECT_TRUE(std::isnan(rows.front().d_lambda_w));
  for (std::size_t i = 1; i < rows.size(); ++i) {
    EXPECT_LE(rows[i].objective, rows[i - 1].objective);
    EXPECT_DOUBLE_EQ(rows[i].d_lambda_w, rows[i].lambda_w - rows[i - 1].lambda_w);
    EXPECT_DOUBLE_EQ(rows[i].d_lambda_b, rows[i].lambda_b - rows[i - 1].lambda_b);
  }
  EXPECT_EQ(find_elbow(rows), 5u);
}

TEST(Sweep, JobsDoNotChangeResults) {
  const auto pts = blobs(3, 12, 3.0, 6);
  const auto a = elbow_sweep(pts, 2, 6, 3, 9, 1);
  const auto b = elbow_sweep(pts, 2, 6, 3, 9, 4);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].objective, b[i].objective);
    EXPECT_EQ(a[i].lambda_b, b[i].lambda_b);
  }
}

TEST(Sweep, RangeValidation) {
  const auto pts = blobs(2, 3, 1.0, 1);
  EXPECT_THROW(elbow_sweep(pts, 1, 4, 1, 0), std::invalid_argument);
  EXPECT_THROW(elbow_sweep(pts, 3, 3, 1, 0), std::invalid_argument);
  EXPECT_THROW(elbow_sweep(pts, 2, 6, 1, 0), std::invalid_argument);
}

TEST(Distribution, EqualBlobsGiveEqualShares) {
  const auto pts = blobs(4, 10, 0.5, 3);
  const auto m = kmeans_fit(pts, 4, 2);
  const auto d = cluster_distribution(m);
  ASSERT_EQ(d.size(), 4u);
  std::size_t total = 0;
  double frac = 0.0;
  for (const auto& s : d) {
    EXPECT_EQ(s.count, 10u);
    EXPECT_DOUBLE_EQ(s.fraction, 0.25);
    total += s.count;
    frac += s.fraction;
  }
  EXPECT_EQ(total, pts.size());
  EXPECT_NEAR(frac, 1.0, 1e-12);
}

TEST(Distribution, SingleCluster) {
  const auto d = cluster_distribution(std::vector<int>{0, 0, 0}, 1);
  ASSERT_EQ(d.size(), 1u);
  EXPECT_EQ(d[0].fraction, 1.0);
  EXPECT_THROW(cluster_distribution(std::vector<int>{0, 2}, 2), std::out_of_range);
}

TEST(Median, OddAndEven) {
  EXPECT_EQ(median({3.0, 1.0, 2.0}), 2.0);
  EXPECT_EQ(median({4.0, 1.0, 2.0, 3.0}), 2.5);
  EXPECT_THROW(median({}), std::invalid_argument);
}

TEST(ClusterCsv, AssignmentsRoundTripAndSweepNaN) {
  const std::vector<PrimitiveIdentity> ids{{"enc_000", 0, 4, 1}, {"enc_001", 3, 9, 2}};
  const auto text = assignments_to_csv(ids, {1, 0});
  EXPECT_EQ(text, "encounter_id,m,n,label,cluster\nenc_000,0,4,1,1\nenc_001,3,9,2,0\n");
  const auto rows = parse_assignments_csv(text);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[1].id, ids[1]);
  EXPECT_EQ(rows[1].cluster, 0);
  EXPECT_THROW(parse_assignments_csv("encounter_id,m,n,label,cluster\nx,5,2,0,0\n"), ParseError);

  SweepRow r;
  r.k = 2;
  r.d_lambda_w = std::nan("");
  r.d_lambda_b = std::nan("");
  EXPECT_EQ(sweep_to_csv({r}), "k,lambda_w,lambda_b,objective,d_lambda_w,d_lambda_b\n2,0,0,0,,\n");

  ClusterModel m;
  m.k = 1;
  m.centroids = {{0.5, 1.0}};
  EXPECT_EQ(centroids_to_csv(m), "c0,c1\n0.5,1\n");
}
