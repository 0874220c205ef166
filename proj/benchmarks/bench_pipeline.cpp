#include <benchmark/benchmark.h>

#include <random>

#include "drivprim/clustering.hpp"
#include "drivprim/features.hpp"
#include "drivprim/hdphmm.hpp"
#include "drivprim/synthetic.hpp"

using namespace drivprim;

namespace {

synth::LabeledEncounter scenario(double duration_s) {
  return synth::generate_encounter(synth::default_scenario(synth::ScenarioFamily::FollowThenTurn, duration_s, 7));
}

void BM_GibbsFit(benchmark::State& state) {
  const auto le = scenario(static_cast<double>(state.range(0)));
  HdpHmmConfig cfg;
  cfg.iterations = 50;
  cfg.seed = 1;
  for (auto _ : state) benchmark::DoNotOptimize(fit_segmentation(le.encounter, cfg));
  state.SetItemsProcessed(state.iterations() * cfg.iterations * static_cast<std::int64_t>(le.encounter.size()));
  state.counters["samples"] = static_cast<double>(le.encounter.size());
}
BENCHMARK(BM_GibbsFit)->Arg(10)->Arg(20)->Arg(60)->Unit(benchmark::kMillisecond);

void BM_Featurize(benchmark::State& state) {
  const auto le = scenario(20.0);
  const auto prim = make_primitive(le.encounter, 0, le.encounter.size() - 1, 0);
  const auto l = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(featurize_primitive(prim, l));
}
BENCHMARK(BM_Featurize)->Arg(20)->Arg(50)->Arg(100);

void BM_CrossDistance(benchmark::State& state) {
  const auto le = scenario(20.0);
  const auto rp = rescale_primitive(make_primitive(le.encounter, 0, le.encounter.size() - 1, 0), 50);
  for (auto _ : state) benchmark::DoNotOptimize(cross_distance_matrices(rp));
}
BENCHMARK(BM_CrossDistance);

std::vector<Point> random_points(std::size_t n, std::size_t dim) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Point> pts(n, Point(dim));
  for (auto& p : pts) {
    for (auto& v : p) v = u(rng);
  }
  return pts;
}

void BM_KMeans(benchmark::State& state) {
  const auto pts = random_points(static_cast<std::size_t>(state.range(0)), 5000);
  const auto k = static_cast<std::size_t>(state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(kmeans_fit(pts, k, 11));
}
BENCHMARK(BM_KMeans)->Args({200, 5})->Args({200, 20})->Args({1000, 20})->Unit(benchmark::kMillisecond);

void BM_ElbowSweep(benchmark::State& state) {
  const auto pts = random_points(300, 200);
  for (auto _ : state) {
    benchmark::DoNotOptimize(elbow_sweep(pts, 2, 12, 3, 5, static_cast<unsigned>(state.range(0))));
  }
}
BENCHMARK(BM_ElbowSweep)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond)->UseRealTime();

}  // namespace

BENCHMARK_MAIN();
