#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "drivprim/errors.hpp"
#include "drivprim/hdphmm.hpp"
#include "drivprim/synthetic.hpp"
#include "oracles.hpp"

using namespace drivprim;

namespace {

DrivingEncounter constant_encounter(std::size_t T) {
  std::vector<TrajectorySample> s(T);
  for (std::size_t i = 0; i < T; ++i) {
    s[i].t = static_cast<double>(i) / 10.0;
    s[i].p1 = {3.0, 4.0};
    s[i].p2 = {-1.0, 2.0};
    s[i].v1 = 5.0;
    s[i].v2 = 6.0;
  }
  return DrivingEncounter("const", s, 10.0, Frame::LocalMeters);
}

DrivingEncounter zero_encounter(std::size_t T) {
  std::vector<TrajectorySample> s(T);
  for (std::size_t i = 0; i < T; ++i) s[i].t = static_cast<double>(i) / 10.0;
  return DrivingEncounter("zero", s, 10.0, Frame::LocalMeters);
}

StickyHdpHmmModel single_state_model() {
  StickyHdpHmmModel m;
  m.transform = ObservationTransform::identity();
  m.beta = Eigen::VectorXd::Ones(1);
  m.pi = Eigen::MatrixXd::Ones(1, 1);
  m.emissions = {Gaussian::standard(6)};
  return m;
}

HdpHmmConfig quick(std::uint64_t seed, int iterations = 60) {
  HdpHmmConfig cfg;
  cfg.seed = seed;
  cfg.iterations = iterations;
  return cfg;
}

}  // namespace

TEST(LogJoint, SingleStateAtMean) {
  const auto model = single_state_model();
  const double per = -3.0 * std::log(2.0 * M_PI);
  StateSequence seq{"zero", {0, 0}, 0.0};
  const double two = log_joint_probability(model, seq, zero_encounter(2));
  EXPECT_NEAR(two, 2.0 * per, 1e-12);
  seq.labels.push_back(0);
  const double three = log_joint_probability(model, seq, zero_encounter(3));
  EXPECT_NEAR(three, two + per + std::log(1.0), 1e-12);
}

TEST(LogJoint, MatchesBruteForceOnRandomModels) {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> z(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const int L = 3;
    StickyHdpHmmModel m;
    m.transform = ObservationTransform::identity();
    Rng r2(trial);
    const std::vector<double> ones(L, 1.0);
    const auto b = sample::dirichlet(r2, ones);
    m.beta = Eigen::Map<const Eigen::VectorXd>(b.data(), L);
    m.pi.resize(L, L);
    for (int j = 0; j < L; ++j) {
      const auto row = sample::dirichlet(r2, ones);
      for (int k = 0; k < L; ++k) m.pi(j, k) = row[static_cast<std::size_t>(k)];
    }
    for (int k = 0; k < L; ++k) {
      Eigen::MatrixXd a = Eigen::MatrixXd::NullaryExpr(6, 6, [&] { return z(rng); });
      m.emissions.emplace_back(Eigen::VectorXd::NullaryExpr(6, [&] { return z(rng); }),
                               a * a.transpose() + Eigen::MatrixXd::Identity(6, 6));
    }
    std::vector<TrajectorySample> s(15);
    StateSequence seq{"r", {}, 0.0};
    for (std::size_t i = 0; i < s.size(); ++i) {
      s[i].t = static_cast<double>(i) / 10.0;
      s[i].p1 = {z(rng), z(rng)};
      s[i].p2 = {z(rng), z(rng)};
      s[i].v1 = std::fabs(z(rng));
      s[i].v2 = std::fabs(z(rng));
      seq.labels.push_back(static_cast<int>(rng() % L));
    }
    const DrivingEncounter enc("r", s, 10.0, Frame::LocalMeters);
    const double got = log_joint_probability(m, seq, enc);
    const double want = oracle::brute_log_joint(m, seq.labels, enc);
    EXPECT_NEAR(got, want, 1e-9 * std::max(1.0, std::fabs(want)));
  }
}

TEST(LogJoint, RejectsBadLabels) {
  const auto model = single_state_model();
  EXPECT_THROW(log_joint_probability(model, {"z", {0, 1}, 0.0}, zero_encounter(2)), ValidationError);
  EXPECT_THROW(log_joint_probability(model, {"z", {0}, 0.0}, zero_encounter(2)), ValidationError);
}

TEST(Segmentation, ConstantSequenceGivesOneState) {
  const auto enc = constant_encounter(80);
  const auto fit = fit_segmentation(enc, quick(1));
  for (int l : fit.sequence.labels) EXPECT_EQ(l, fit.sequence.labels.front());
  const auto prims = extract_primitives(fit.sequence, enc);
  ASSERT_EQ(prims.size(), 1u);
  EXPECT_EQ(prims[0].m, 0u);
  EXPECT_EQ(prims[0].n, 79u);
  EXPECT_EQ(fit.model.transform.dim(), 0);
}

TEST(Segmentation, DeterministicForFixedSeed) {
  synth::PlantedSpec spec;
  spec.seed = 3;
  const auto le = synth::generate_planted_phases(spec);
  const auto a = fit_segmentation(le.encounter, quick(9));
  const auto b = fit_segmentation(le.encounter, quick(9));
  EXPECT_EQ(a.sequence.labels, b.sequence.labels);
  EXPECT_EQ(a.sequence.log_joint, b.sequence.log_joint);
  EXPECT_EQ(a.retained_sweep, b.retained_sweep);
}

TEST(Segmentation, RecoversPlantedPhasesInTheMedian) {
  std::vector<double> acc;
  for (std::uint64_t i = 0; i < 5; ++i) {
    synth::PlantedSpec spec;
    spec.seed = 40 + i;
    const auto le = synth::generate_planted_phases(spec);
    HdpHmmConfig cfg;
    cfg.seed = i;
    acc.push_back(synth::segmentation_accuracy(fit_segmentation(le.encounter, cfg).sequence, le));
  }
  std::sort(acc.begin(), acc.end());
  EXPECT_GE(acc[2], 0.9);
}

TEST(Segmentation, SweepInvariantsAndRetainedSample) {
  synth::PlantedSpec spec;
  spec.seed = 8;
  const auto le = synth::generate_planted_phases(spec);
  auto cfg = quick(5, 80);
  cfg.resample_kappa = true;
  const auto fit = fit_segmentation(le.encounter, cfg);
  ASSERT_EQ(fit.trace.size(), 80u);
  const int burn = 40;
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& d : fit.trace) {
    EXPECT_LE(d.simplex_error, 1e-9);
    EXPECT_TRUE(d.covariances_spd);
    EXPECT_TRUE(d.min_weight_nonnegative);
    if (d.sweep >= burn) best = std::max(best, d.log_joint);
  }
  EXPECT_GE(fit.retained_sweep, burn);
  EXPECT_EQ(fit.sequence.log_joint, best);
  EXPECT_NEAR(log_joint_probability(fit.model, fit.sequence, le.encounter), fit.sequence.log_joint, 1e-6);
  EXPECT_EQ(static_cast<std::size_t>(fit.model.num_states()), 20u);
  for (int l : fit.sequence.labels) {
    EXPECT_GE(l, 0);
    EXPECT_LT(l, 20);
  }
}

TEST(Segmentation, HigherKappaDoesNotAddChangePoints) {
  const auto le = synth::generate_encounter(synth::default_scenario(synth::ScenarioFamily::VerticalCross, 20.0, 3));
  int not_increased = 0;
  for (std::uint64_t s = 0; s < 5; ++s) {
    auto cfg = quick(s, 100);
    auto mean_cp = [&](double kappa) {
      cfg.kappa = kappa;
      const auto fit = fit_segmentation(le.encounter, cfg);
      double sum = 0;
      int n = 0;
      for (const auto& d : fit.trace) {
        if (d.sweep < 50) continue;
        sum += d.change_points;
        ++n;
      }
      return sum / n;
    };
    const double lo = mean_cp(1.0);
    const double hi = mean_cp(10.0);
    not_increased += hi <= lo;
  }
  EXPECT_GE(not_increased, 3);
}

TEST(Segmentation, RequiresLocalFrame) {
  std::vector<TrajectorySample> s(3);
  for (std::size_t i = 0; i < 3; ++i) s[i].t = static_cast<double>(i) / 10.0;
  const DrivingEncounter geo("g", s, 10.0, Frame::GeographicDegrees);
  EXPECT_THROW(fit_segmentation(geo, quick(0)), ValidationError);
}

TEST(Segmentation, RejectsNonSpdEmissionPrior) {
  auto cfg = quick(0);
  NiwPrior p;
  p.mean0 = Eigen::VectorXd::Zero(6);
  p.dof = 8.0;
  p.scale = -Eigen::MatrixXd::Identity(6, 6);
  cfg.emission_prior = p;
  EXPECT_THROW(cfg.validate(), ConfigError);
  synth::PlantedSpec spec;
  EXPECT_THROW(fit_segmentation(synth::generate_planted_phases(spec).encounter, cfg), ConfigError);
}

TEST(Segmentation, UserEmissionPriorIsAccepted) {
  auto cfg = quick(0, 20);
  NiwPrior p;
  p.mean0 = Eigen::VectorXd::Zero(6);
  p.dof = 8.0;
  p.scale = Eigen::MatrixXd::Identity(6, 6);
  cfg.emission_prior = p;
  synth::PlantedSpec spec;
  const auto le = synth::generate_planted_phases(spec);
  const auto fit = fit_segmentation(le.encounter, cfg);
  EXPECT_EQ(fit.sequence.labels.size(), le.encounter.size());
}

TEST(Config, Validation) {
  HdpHmmConfig c;
  EXPECT_NO_THROW(c.validate());
  c.truncation = 1;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.iterations = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.kappa = -0.5;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.burn_in_fraction = 1.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.gamma_prior.rate = 0.0;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Transform, DropsConstantDimensionsAndStandardizes) {
  Eigen::MatrixXd raw(4, 6);
  raw << 1, 5, 0, 2, 3, 9,  //
      2, 5, 0, 4, 3, 9,     //
      3, 5, 0, 6, 3, 9,     //
      4, 5, 0, 8, 3, 9;
  const auto tf = ObservationTransform::fit(raw, true);
  ASSERT_EQ(tf.dim(), 2);
  EXPECT_EQ(tf.active_dims[0], 0);
  EXPECT_EQ(tf.active_dims[1], 3);
  const auto y = tf.apply(raw);
  EXPECT_NEAR(y.col(0).mean(), 0.0, 1e-12);
  EXPECT_NEAR(y.col(0).squaredNorm() / 4.0, 1.0, 1e-12);
  EXPECT_NEAR((y.col(0) - y.col(1)).norm(), 0.0, 1e-12);
}

TEST(Primitives, RunLengthExample) {
  const auto enc = zero_encounter(5);
  const auto p = extract_primitives({"zero", {1, 1, 1, 2, 2}, 0.0}, enc, 0.2);
  ASSERT_EQ(p.size(), 2u);
  EXPECT_EQ(p[0].m, 0u);
  EXPECT_EQ(p[0].n, 2u);
  EXPECT_EQ(p[0].state_label, 1);
  EXPECT_EQ(p[1].m, 3u);
  EXPECT_EQ(p[1].n, 4u);
  EXPECT_EQ(p[1].state_label, 2);
}

TEST(Primitives, ShortRunDropped) {
  const auto p = extract_primitives({"zero", {1, 1, 2, 1, 1}, 0.0}, zero_encounter(5), 0.2);
  ASSERT_EQ(p.size(), 2u);
  EXPECT_EQ(p[0].m, 0u);
  EXPECT_EQ(p[0].n, 1u);
  EXPECT_EQ(p[1].m, 3u);
  EXPECT_EQ(p[1].n, 4u);
}

TEST(Primitives, SingleRunCoversEncounter) {
  const auto p = extract_primitives({"zero", std::vector<int>(100, 4), 0.0}, zero_encounter(100));
  ASSERT_EQ(p.size(), 1u);
  EXPECT_EQ(p[0].m, 0u);
  EXPECT_EQ(p[0].n, 99u);
  EXPECT_EQ(p[0].samples.size(), 100u);
}

TEST(Primitives, PartitionPropertyOnRandomLabels) {
  std::mt19937_64 rng(31);
  const auto enc = zero_encounter(200);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<int> labels(200);
    int cur = 0;
    for (auto& l : labels) {
      if (rng() % 4 == 0) cur = static_cast<int>(rng() % 5);
      l = cur;
    }
    const auto prims = extract_primitives({"zero", labels, 0.0}, enc, 0.3);
    std::size_t prev_end = 0;
    bool first = true;
    for (const auto& p : prims) {
      if (!first) {
        EXPECT_GT(p.m, prev_end);
      }
      first = false;
      prev_end = p.n;
      EXPECT_GE(p.duration_s(), 0.3 - 1e-9);
      for (std::size_t t = p.m; t <= p.n; ++t) EXPECT_EQ(labels[t], p.state_label);
      if (p.m > 0) {
        EXPECT_NE(labels[p.m - 1], p.state_label);
      }
      if (p.n + 1 < labels.size()) {
        EXPECT_NE(labels[p.n + 1], p.state_label);
      }
    }
  }
}

TEST(Primitives, LengthMismatchThrows) {
  EXPECT_THROW(extract_primitives({"zero", {0, 0}, 0.0}, zero_encounter(5)), ValidationError);
}

TEST(Primitives, JsonlRoundTrip) {
  const auto prims = extract_primitives({"zero", {1, 1, 1, 2, 2, 2, 2}, 0.0}, zero_encounter(7));
  std::vector<PrimitiveRecord> recs;
  for (const auto& p : prims) recs.push_back(to_record(p));
  const auto text = to_jsonl(recs);
  EXPECT_EQ(text.substr(0, text.find('\n')), R"({"encounter_id":"zero","m":0,"n":2,"label":1,"duration_s":0.3})");
  EXPECT_EQ(parse_jsonl(text), recs);
  EXPECT_THROW(parse_jsonl("{\"m\":1}\n"), ParseError);
}

TEST(Primitives, CountChangePoints) {
  EXPECT_EQ(count_change_points({}), 0);
  EXPECT_EQ(count_change_points({1, 1, 2, 2, 1}), 2);
}
