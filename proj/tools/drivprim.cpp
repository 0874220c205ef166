#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "drivprim/clustering.hpp"
#include "drivprim/csv.hpp"
#include "drivprim/encounter.hpp"
#include "drivprim/errors.hpp"
#include "drivprim/features.hpp"
#include "drivprim/hdphmm.hpp"
#include "drivprim/pipeline.hpp"
#include "drivprim/sampling.hpp"
#include "drivprim/synthetic.hpp"

namespace fs = std::filesystem;
using namespace drivprim;

namespace {

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> jobs;

  PipelineConfig load() const {
    PipelineConfig cfg = config_path.empty() ? PipelineConfig{} : load_pipeline_config(config_path);
    if (seed) cfg.global_seed = *seed;
    if (jobs) cfg.jobs = *jobs;
    return cfg;
  }
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config_path, "JSON pipeline configuration")->check(CLI::ExistingFile);
  app->add_option("--seed", c.seed, "global seed (overrides config)");
  app->add_option("--jobs", c.jobs, "worker threads (overrides config)")->check(CLI::PositiveNumber);
}

std::vector<DrivingEncounter> load_projected_dir(const std::string& dir) {
  if (!fs::is_directory(dir)) throw std::runtime_error("directory '" + dir + "' not found");
  std::vector<std::string> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".csv") files.push_back(e.path().string());
  }
  std::sort(files.begin(), files.end());
  std::vector<DrivingEncounter> out;
  for (const auto& f : files) {
    try {
      out.push_back(load_projected_csv(f));
    } catch (const std::exception& ex) {
      throw StageError("segment", encounter_id_from_path(f), ex.what());
    }
  }
  if (out.empty()) throw std::runtime_error("empty corpus: no CSV files in '" + dir + "'");
  return out;
}

std::vector<Point> points_of(const std::vector<FeatureVector>& features) {
  std::vector<Point> pts;
  pts.reserve(features.size());
  for (const auto& f : features) pts.push_back(f.phi);
  return pts;
}

int cmd_synth(const std::string& out_dir, std::size_t count, double duration, std::uint64_t seed) {
  fs::create_directories(out_dir);
  const LocalTangentPlane plane(synth::kSynthOriginLat, synth::kSynthOriginLon);
  const auto corpus = synth::generate_corpus(count, seed, duration);
  for (const auto& le : corpus) {
    const auto base = (fs::path(out_dir) / le.encounter.id()).string();
    write_encounter_csv(to_geographic_frame(le.encounter, plane), base + ".csv");
    csv::write_file(base + ".truth.csv", synth::truth_to_csv(le.truth_labels));
  }
  std::printf("wrote %zu encounters to %s\n", corpus.size(), out_dir.c_str());
  return 0;
}

int cmd_ingest(const PipelineConfig& cfg, const std::string& input, const std::string& out_dir) {
  LoadOptions opts;
  opts.resample = cfg.resample;
  const auto ingested = ingest_directory(input, {cfg.min_encounter_s, cfg.max_mutual_m}, opts);
  const auto proj = fs::path(out_dir) / "projected";
  fs::create_directories(proj);
  std::string table = "encounter_id,qualified,reason\n";
  std::size_t kept = 0;
  for (const auto& item : ingested) {
    const auto& id = item.encounter.id();
    table += id + ',' + (item.qualification.qualified ? "1" : "0") + ',' + item.qualification.reason + '\n';
    if (!item.qualification.qualified) continue;
    write_encounter_csv(item.encounter, (proj / (id + ".csv")).string());
    ++kept;
  }
  csv::write_file((fs::path(out_dir) / "qualification.csv").string(), table);
  std::printf("%zu of %zu encounters qualified\n", kept, ingested.size());
  return 0;
}

int cmd_segment(const PipelineConfig& cfg, const std::string& input, const std::string& out) {
  const auto encounters = load_projected_dir(input);
  const auto segmented = segment_encounters(encounters, cfg.hdphmm, cfg.global_seed, cfg.min_primitive_s, cfg.jobs);
  std::vector<PrimitiveRecord> records;
  for (const auto& s : segmented) {
    for (const auto& p : s.primitives) records.push_back(to_record(p));
  }
  csv::write_file(out, to_jsonl(records));
  std::printf("%zu primitives from %zu encounters\n", records.size(), encounters.size());
  return 0;
}

int cmd_featurize(const PipelineConfig& cfg, const std::string& primitives_path, const std::string& encounters_dir,
                  const std::string& out) {
  const auto records = parse_jsonl(csv::read_file(primitives_path));
  std::map<std::string, DrivingEncounter> by_id;
  for (auto& e : load_projected_dir(encounters_dir)) {
    const std::string id = e.id();
    by_id.emplace(id, std::move(e));
  }
  std::vector<DrivingPrimitive> prims;
  prims.reserve(records.size());
  for (const auto& r : records) {
    const auto it = by_id.find(r.encounter_id);
    if (it == by_id.end()) throw StageError("featurize", r.encounter_id, "encounter CSV not found");
    try {
      prims.push_back(make_primitive(it->second, r.m, r.n, r.label));
    } catch (const std::exception& ex) {
      throw StageError("featurize", r.encounter_id, ex.what());
    }
  }
  const auto features = featurize_primitives(prims, cfg.rescale_l, cfg.jobs);
  csv::write_file(out, features_to_csv(features));
  std::printf("%zu feature vectors of length %zu\n", features.size(), 2 * cfg.rescale_l * cfg.rescale_l);
  return 0;
}

int cmd_cluster(const PipelineConfig& cfg, const std::string& features_path, std::optional<std::size_t> k_opt,
                const std::string& out_dir) {
  const auto features = parse_features_csv(csv::read_file(features_path));
  if (features.empty()) throw StageError("cluster", "", "no feature vectors");
  const auto k = std::min(k_opt.value_or(cfg.cluster_k), features.size());
  const auto model = kmeans_fit(features, k, mix_seed(cfg.global_seed, stable_hash("cluster")));
  std::vector<PrimitiveIdentity> ids;
  for (const auto& f : features) ids.push_back(f.source);
  fs::create_directories(out_dir);
  csv::write_file((fs::path(out_dir) / "centroids.csv").string(), centroids_to_csv(model));
  csv::write_file((fs::path(out_dir) / "assignments.csv").string(), assignments_to_csv(ids, model.assignments));
  std::printf("k=%zu objective=%s lambda_w=%s lambda_b=%s\n", k, csv::format_double(model.objective).c_str(),
              csv::format_double(model.lambda_w).c_str(), csv::format_double(model.lambda_b).c_str());
  return 0;
}

int cmd_sweep(const PipelineConfig& cfg, const std::string& features_path, const std::string& out) {
  const auto pts = points_of(parse_features_csv(csv::read_file(features_path)));
  const auto rows = elbow_sweep(pts, cfg.sweep.k_min, cfg.sweep.k_max, cfg.sweep.seeds_per_k,
                                mix_seed(cfg.global_seed, stable_hash("sweep")), cfg.jobs);
  csv::write_file(out, sweep_to_csv(rows));
  if (rows.size() >= 3) std::printf("elbow at k=%zu\n", find_elbow(rows));
  return 0;
}

int cmd_report(const PipelineConfig& cfg, const std::string& primitives_path, const std::string& assignments_path,
               const std::string& out_dir) {
  const auto records = parse_jsonl(csv::read_file(primitives_path));
  std::vector<int> assignments;
  std::size_t k = 0;
  if (!assignments_path.empty()) {
    const auto rows = parse_assignments_csv(csv::read_file(assignments_path));
    if (rows.size() != records.size()) {
      throw StageError("report", "", "assignment rows do not match primitive records");
    }
    for (const auto& r : rows) {
      assignments.push_back(r.cluster);
      k = std::max(k, static_cast<std::size_t>(r.cluster) + 1);
    }
  }
  std::vector<std::string> ids;
  for (const auto& r : records) {
    if (ids.empty() || ids.back() != r.encounter_id) ids.push_back(r.encounter_id);
  }
  RunReport rep;
  rep.primitive_count = records.size();
  rep.cluster_k = k;
  rep.distributions = report_distributions(records, ids, assignments, k, cfg.duration_bin_s);
  write_report_files(rep, out_dir);
  std::printf("report written to %s\n", out_dir.c_str());
  return 0;
}

std::string stage_of(const CLI::App& app) {
  for (const auto* sub : app.get_subcommands()) {
    const auto& name = sub->get_name();
    if (name == "run") return "pipeline";
    if (name == "synth") return "synth";
    return name;
  }
  return "cli";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Driving-encounter primitive extraction and clustering"};
  app.require_subcommand(1);
  Common common;

  auto* synth_cmd = app.add_subcommand("synth", "generate a labeled synthetic corpus");
  std::string synth_out;
  std::size_t synth_count = 30;
  double synth_duration = 20.0;
  synth_cmd->add_option("--out", synth_out, "output directory")->required();
  synth_cmd->add_option("--count", synth_count, "number of encounters");
  synth_cmd->add_option("--duration", synth_duration, "encounter duration in seconds");
  add_common(synth_cmd, common);

  auto* ingest_cmd = app.add_subcommand("ingest", "project and qualify raw encounter CSVs");
  std::string ingest_in, ingest_out;
  ingest_cmd->add_option("--input", ingest_in, "directory of raw CSVs");
  ingest_cmd->add_option("--out", ingest_out, "output directory");
  add_common(ingest_cmd, common);

  auto* segment_cmd = app.add_subcommand("segment", "segment projected encounters into primitives");
  std::string segment_in, segment_out;
  segment_cmd->add_option("--input", segment_in, "directory of projected CSVs")->required();
  segment_cmd->add_option("--out", segment_out, "primitives JSONL path")->required();
  add_common(segment_cmd, common);

  auto* feat_cmd = app.add_subcommand("featurize", "compute cross-distance feature vectors");
  std::string feat_prims, feat_enc, feat_out;
  feat_cmd->add_option("--primitives", feat_prims, "primitives JSONL")->required();
  feat_cmd->add_option("--encounters", feat_enc, "directory of projected CSVs")->required();
  feat_cmd->add_option("--out", feat_out, "features CSV path")->required();
  add_common(feat_cmd, common);

  auto* cluster_cmd = app.add_subcommand("cluster", "k-means over feature vectors");
  std::string cluster_in, cluster_out;
  std::optional<std::size_t> cluster_k;
  cluster_cmd->add_option("--features", cluster_in, "features CSV")->required();
  cluster_cmd->add_option("--k", cluster_k, "number of clusters (overrides config)");
  cluster_cmd->add_option("--out", cluster_out, "output directory")->required();
  add_common(cluster_cmd, common);

  auto* sweep_cmd = app.add_subcommand("sweep", "elbow sweep of k");
  std::string sweep_in, sweep_out;
  sweep_cmd->add_option("--features", sweep_in, "features CSV")->required();
  sweep_cmd->add_option("--out", sweep_out, "sweep CSV path")->required();
  add_common(sweep_cmd, common);

  auto* run_cmd = app.add_subcommand("run", "full pipeline from a config file");
  std::string run_in, run_out;
  run_cmd->add_option("--input", run_in, "input directory (overrides config)");
  run_cmd->add_option("--out", run_out, "output directory (overrides config)");
  add_common(run_cmd, common);

  auto* report_cmd = app.add_subcommand("report", "distribution tables from primitives and assignments");
  std::string report_prims, report_assign, report_out;
  report_cmd->add_option("--primitives", report_prims, "primitives JSONL")->required();
  report_cmd->add_option("--assignments", report_assign, "assignments CSV");
  report_cmd->add_option("--out", report_out, "output directory")->required();
  add_common(report_cmd, common);

  CLI11_PARSE(app, argc, argv);

  try {
    auto cfg = common.load();
    if (*synth_cmd) return cmd_synth(synth_out, synth_count, synth_duration, cfg.global_seed);
    if (*ingest_cmd) {
      return cmd_ingest(cfg, ingest_in.empty() ? cfg.input_dir : ingest_in,
                        ingest_out.empty() ? cfg.output_dir : ingest_out);
    }
    if (*segment_cmd) return cmd_segment(cfg, segment_in, segment_out);
    if (*feat_cmd) return cmd_featurize(cfg, feat_prims, feat_enc, feat_out);
    if (*cluster_cmd) return cmd_cluster(cfg, cluster_in, cluster_k, cluster_out);
    if (*sweep_cmd) return cmd_sweep(cfg, sweep_in, sweep_out);
    if (*report_cmd) return cmd_report(cfg, report_prims, report_assign, report_out);
    if (*run_cmd) {
      if (!run_in.empty()) cfg.input_dir = run_in;
      if (!run_out.empty()) cfg.output_dir = run_out;
      const auto rep = run_pipeline(cfg);
      std::printf("%zu encounters, %zu qualified, %zu primitives, k=%zu\n", rep.corpus_size, rep.qualified_count,
                  rep.primitive_count, rep.cluster_k);
      return 0;
    }
  } catch (const StageError& e) {
    std::cerr << "drivprim: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "drivprim: [" << stage_of(app) << "]: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
