#include "drivprim/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <set>

#include <json.hpp>

#include "drivprim/csv.hpp"
#include "drivprim/errors.hpp"
#include "drivprim/parallel.hpp"
#include "drivprim/sampling.hpp"

namespace drivprim {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

void reject_unknown(const json& j, std::initializer_list<std::string_view> known, const std::string& where) {
  for (const auto& [key, _] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw ConfigError("unknown config key '" + where + key + "'");
    }
  }
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

GammaPrior read_gamma(const json& j, const std::string& where) {
  reject_unknown(j, {"shape", "rate"}, where);
  GammaPrior p;
  read(j, "shape", p.shape);
  read(j, "rate", p.rate);
  return p;
}

HdpHmmConfig read_hdphmm(const json& j) {
  reject_unknown(j,
                 {"truncation", "iterations", "kappa", "gamma_prior", "alpha_kappa_prior",
                  "resample_concentrations", "resample_kappa", "rho_prior", "initial_gamma",
                  "initial_alpha", "emission_prior", "standardize", "burn_in_fraction", "seed"},
                 "hdphmm.");
  HdpHmmConfig c;
  read(j, "truncation", c.truncation);
  read(j, "iterations", c.iterations);
  read(j, "kappa", c.kappa);
  if (j.contains("gamma_prior")) c.gamma_prior = read_gamma(j["gamma_prior"], "hdphmm.gamma_prior.");
  if (j.contains("alpha_kappa_prior")) {
    c.alpha_kappa_prior = read_gamma(j["alpha_kappa_prior"], "hdphmm.alpha_kappa_prior.");
  }
  read(j, "resample_concentrations", c.resample_concentrations);
  read(j, "resample_kappa", c.resample_kappa);
  if (j.contains("rho_prior")) {
    reject_unknown(j["rho_prior"], {"a", "b"}, "hdphmm.rho_prior.");
    read(j["rho_prior"], "a", c.rho_prior.a);
    read(j["rho_prior"], "b", c.rho_prior.b);
  }
  read(j, "initial_gamma", c.initial_gamma);
  read(j, "initial_alpha", c.initial_alpha);
  read(j, "standardize", c.standardize);
  read(j, "burn_in_fraction", c.burn_in_fraction);
  read(j, "seed", c.seed);
  if (j.contains("emission_prior") && !j["emission_prior"].is_null()) {
    const auto& e = j["emission_prior"];
    reject_unknown(e, {"mean0", "kappa0", "dof", "scale"}, "hdphmm.emission_prior.");
    NiwPrior p;
    const auto mean = e.at("mean0").get<std::vector<double>>();
    const auto scale = e.at("scale").get<std::vector<std::vector<double>>>();
    p.mean0 = Eigen::Map<const Eigen::VectorXd>(mean.data(), static_cast<Eigen::Index>(mean.size()));
    p.scale.resize(static_cast<Eigen::Index>(scale.size()), static_cast<Eigen::Index>(scale.size()));
    for (std::size_t r = 0; r < scale.size(); ++r) {
      if (scale[r].size() != scale.size()) throw ConfigError("hdphmm.emission_prior.scale must be square");
      for (std::size_t c2 = 0; c2 < scale.size(); ++c2) {
        p.scale(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c2)) = scale[r][c2];
      }
    }
    read(e, "kappa0", p.kappa0);
    read(e, "dof", p.dof);
    c.emission_prior = std::move(p);
  }
  return c;
}

ordered_json hdphmm_to_json(const HdpHmmConfig& c) {
  ordered_json j;
  j["truncation"] = c.truncation;
  j["iterations"] = c.iterations;
  j["kappa"] = c.kappa;
  j["gamma_prior"] = {{"shape", c.gamma_prior.shape}, {"rate", c.gamma_prior.rate}};
  j["alpha_kappa_prior"] = {{"shape", c.alpha_kappa_prior.shape}, {"rate", c.alpha_kappa_prior.rate}};
  j["resample_concentrations"] = c.resample_concentrations;
  j["resample_kappa"] = c.resample_kappa;
  j["rho_prior"] = {{"a", c.rho_prior.a}, {"b", c.rho_prior.b}};
  j["initial_gamma"] = c.initial_gamma;
  j["initial_alpha"] = c.initial_alpha;
  j["standardize"] = c.standardize;
  j["burn_in_fraction"] = c.burn_in_fraction;
  if (c.emission_prior) {
    const auto& p = *c.emission_prior;
    std::vector<double> mean(p.mean0.data(), p.mean0.data() + p.mean0.size());
    std::vector<std::vector<double>> scale;
    for (Eigen::Index r = 0; r < p.scale.rows(); ++r) {
      std::vector<double> row;
      for (Eigen::Index c2 = 0; c2 < p.scale.cols(); ++c2) row.push_back(p.scale(r, c2));
      scale.push_back(std::move(row));
    }
    j["emission_prior"] = {{"mean0", mean}, {"kappa0", p.kappa0}, {"dof", p.dof}, {"scale", scale}};
  } else {
    j["emission_prior"] = nullptr;
  }
  return j;
}

std::vector<HistogramBin> finish_histogram(std::vector<HistogramBin> bins, std::size_t total) {
  for (auto& b : bins) {
    b.fraction = total ? static_cast<double>(b.count) / static_cast<double>(total) : 0.0;
  }
  return bins;
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create directory '" + dir + "': " + ec.message());
}

}  // namespace

void PipelineConfig::validate() const {
  if (!(min_encounter_s > 0.0)) throw ConfigError("min_encounter_s must be > 0");
  if (!(max_mutual_m > 0.0)) throw ConfigError("max_mutual_m must be > 0");
  if (!(min_primitive_s > 0.0)) throw ConfigError("min_primitive_s must be > 0");
  if (rescale_l < 2) throw ConfigError("rescale_l must be >= 2");
  if (cluster_k < 1) throw ConfigError("cluster_k must be >= 1");
  if (sweep.k_min < 2 || sweep.k_max <= sweep.k_min) {
    throw ConfigError("sweep range needs 2 <= k_min < k_max");
  }
  if (sweep.seeds_per_k < 1) throw ConfigError("sweep.seeds_per_k must be >= 1");
  if (!(duration_bin_s > 0.0)) throw ConfigError("duration_bin_s must be > 0");
  hdphmm.validate();
}

PipelineConfig parse_pipeline_config(std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  PipelineConfig c;
  try {
    reject_unknown(j,
                   {"input_dir", "output_dir", "min_encounter_s", "max_mutual_m", "min_primitive_s",
                    "rescale_l", "hdphmm", "cluster_k", "sweep", "global_seed", "jobs", "resample",
                    "export_matrices", "duration_bin_s"},
                   "");
    read(j, "input_dir", c.input_dir);
    read(j, "output_dir", c.output_dir);
    read(j, "min_encounter_s", c.min_encounter_s);
    read(j, "max_mutual_m", c.max_mutual_m);
    read(j, "min_primitive_s", c.min_primitive_s);
    read(j, "rescale_l", c.rescale_l);
    if (j.contains("hdphmm")) c.hdphmm = read_hdphmm(j["hdphmm"]);
    read(j, "cluster_k", c.cluster_k);
    if (j.contains("sweep")) {
      reject_unknown(j["sweep"], {"k_min", "k_max", "seeds_per_k"}, "sweep.");
      read(j["sweep"], "k_min", c.sweep.k_min);
      read(j["sweep"], "k_max", c.sweep.k_max);
      read(j["sweep"], "seeds_per_k", c.sweep.seeds_per_k);
    }
    read(j, "global_seed", c.global_seed);
    read(j, "jobs", c.jobs);
    read(j, "resample", c.resample);
    read(j, "export_matrices", c.export_matrices);
    read(j, "duration_bin_s", c.duration_bin_s);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

PipelineConfig load_pipeline_config(const std::string& path) {
  return parse_pipeline_config(csv::read_file(path));
}

std::string pipeline_config_to_json(const PipelineConfig& c) {
  ordered_json j;
  j["input_dir"] = c.input_dir;
  j["output_dir"] = c.output_dir;
  j["min_encounter_s"] = c.min_encounter_s;
  j["max_mutual_m"] = c.max_mutual_m;
  j["min_primitive_s"] = c.min_primitive_s;
  j["rescale_l"] = c.rescale_l;
  j["hdphmm"] = hdphmm_to_json(c.hdphmm);
  j["cluster_k"] = c.cluster_k;
  j["sweep"] = {{"k_min", c.sweep.k_min}, {"k_max", c.sweep.k_max}, {"seeds_per_k", c.sweep.seeds_per_k}};
  j["global_seed"] = c.global_seed;
  j["jobs"] = c.jobs;
  j["resample"] = c.resample;
  j["export_matrices"] = c.export_matrices;
  j["duration_bin_s"] = c.duration_bin_s;
  return j.dump(2) + "\n";
}

std::uint64_t encounter_seed(std::uint64_t global_seed, std::string_view encounter_id) {
  return mix_seed(global_seed, stable_hash(encounter_id));
}

std::vector<IngestedEncounter> ingest_directory(const std::string& dir, const QualifyCriteria& criteria,
                                                const LoadOptions& opts) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw StageError("ingest", "", "input directory '" + dir + "' not found");
  std::vector<std::string> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const auto name = entry.path().filename().string();
    if (entry.path().extension() != ".csv" || name.ends_with(".truth.csv")) continue;
    files.push_back(entry.path().string());
  }
  std::sort(files.begin(), files.end(), [](const std::string& a, const std::string& b) {
    return encounter_id_from_path(a) < encounter_id_from_path(b);
  });
  if (files.empty()) throw StageError("ingest", "", "empty corpus: no encounter CSV files in '" + dir + "'");

  std::vector<IngestedEncounter> out;
  out.reserve(files.size());
  for (const auto& path : files) {
    const auto id = encounter_id_from_path(path);
    try {
      auto projected = project_to_local_frame(load_encounter_csv(path, opts));
      auto q = qualify_encounter(projected, criteria);
      out.push_back({std::move(projected), std::move(q)});
    } catch (const std::exception& e) {
      throw StageError("ingest", id, e.what());
    }
  }
  return out;
}

std::vector<SegmentedEncounter> segment_encounters(const std::vector<DrivingEncounter>& encounters,
                                                   const HdpHmmConfig& cfg, std::uint64_t global_seed,
                                                   double min_primitive_s, unsigned jobs) {
  std::vector<SegmentedEncounter> out(encounters.size());
  parallel_for(encounters.size(), jobs, [&](std::size_t i) {
    const auto& enc = encounters[i];
    try {
      HdpHmmConfig local = cfg;
      local.seed = encounter_seed(global_seed, enc.id());
      auto fit = fit_segmentation(enc, local);
      out[i].encounter_id = enc.id();
      out[i].primitives = extract_primitives(fit.sequence, enc, min_primitive_s);
      out[i].sequence = std::move(fit.sequence);
    } catch (const std::exception& e) {
      throw StageError("segment", enc.id(), e.what());
    }
  });
  return out;
}

std::vector<FeatureVector> featurize_primitives(const std::vector<DrivingPrimitive>& primitives,
                                                std::size_t l, unsigned jobs) {
  std::vector<FeatureVector> out(primitives.size());
  parallel_for(primitives.size(), jobs, [&](std::size_t i) {
    try {
      out[i] = featurize_primitive(primitives[i], l);
    } catch (const std::exception& e) {
      throw StageError("featurize", primitives[i].encounter_id, e.what());
    }
  });
  return out;
}

DistributionReport report_distributions(const std::vector<PrimitiveRecord>& primitives,
                                        const std::vector<std::string>& encounter_ids,
                                        const std::vector<int>& assignments, std::size_t k,
                                        double duration_bin_s) {
  DistributionReport r;

  std::size_t max_bin = 0;
  std::vector<std::size_t> bin_of;
  bin_of.reserve(primitives.size());
  for (const auto& p : primitives) {
    const auto b = static_cast<std::size_t>(std::floor(p.duration_s / duration_bin_s + 1e-9));
    bin_of.push_back(b);
    max_bin = std::max(max_bin, b);
  }
  if (!primitives.empty()) {
    r.duration_histogram.resize(max_bin + 1);
    for (std::size_t b = 0; b <= max_bin; ++b) {
      r.duration_histogram[b].bin = csv::format_double(static_cast<double>(b) * duration_bin_s);
    }
    for (const auto b : bin_of) ++r.duration_histogram[b].count;
    r.duration_histogram = finish_histogram(std::move(r.duration_histogram), primitives.size());
  }

  std::map<std::string, std::size_t> per_encounter;
  for (const auto& id : encounter_ids) per_encounter[id] = 0;
  for (const auto& p : primitives) ++per_encounter[p.encounter_id];
  if (!per_encounter.empty()) {
    std::size_t max_count = 0;
    for (const auto& [_, c] : per_encounter) max_count = std::max(max_count, c);
    r.primitives_per_encounter.resize(max_count + 1);
    for (std::size_t c = 0; c <= max_count; ++c) r.primitives_per_encounter[c].bin = std::to_string(c);
    for (const auto& [_, c] : per_encounter) ++r.primitives_per_encounter[c].count;
    r.primitives_per_encounter = finish_histogram(std::move(r.primitives_per_encounter), per_encounter.size());
  }

  if (k > 0) r.cluster_distribution = cluster_distribution(assignments, k);
  return r;
}

std::string histogram_to_csv(const std::vector<HistogramBin>& bins) {
  std::string out = "bin,count,fraction\n";
  for (const auto& b : bins) {
    out += b.bin + ',' + std::to_string(b.count) + ',' + csv::format_double(b.fraction) + '\n';
  }
  return out;
}

std::string cluster_distribution_to_csv(const std::vector<ClusterShare>& shares) {
  std::string out = "cluster,count,fraction\n";
  for (const auto& s : shares) {
    out += std::to_string(s.cluster) + ',' + std::to_string(s.count) + ',' + csv::format_double(s.fraction) + '\n';
  }
  return out;
}

std::string run_report_to_json(const RunReport& rep) {
  auto hist = [](const std::vector<HistogramBin>& bins) {
    ordered_json a = ordered_json::array();
    for (const auto& b : bins) a.push_back({{"bin", b.bin}, {"count", b.count}, {"fraction", b.fraction}});
    return a;
  };
  auto opt = [](const std::optional<double>& v) { return v ? ordered_json(*v) : ordered_json(nullptr); };
  auto num = [](double v) { return std::isnan(v) ? ordered_json(nullptr) : ordered_json(v); };

  ordered_json j;
  j["corpus_size"] = rep.corpus_size;
  j["qualified_encounters"] = rep.qualified_count;
  ordered_json rejected = ordered_json::array();
  for (const auto& r : rep.rejected) rejected.push_back({{"encounter_id", r.encounter_id}, {"reason", r.reason}});
  j["rejected"] = rejected;
  j["primitive_count"] = rep.primitive_count;
  j["cluster_k"] = rep.cluster_k;
  j["objective"] = rep.objective;
  j["lambda_w"] = opt(rep.lambda_w);
  j["lambda_b"] = opt(rep.lambda_b);
  j["duration_histogram"] = hist(rep.distributions.duration_histogram);
  j["primitives_per_encounter"] = hist(rep.distributions.primitives_per_encounter);
  ordered_json shares = ordered_json::array();
  for (const auto& s : rep.distributions.cluster_distribution) {
    shares.push_back({{"cluster", s.cluster}, {"count", s.count}, {"fraction", s.fraction}});
  }
  j["cluster_distribution"] = shares;
  ordered_json sweep = ordered_json::array();
  for (const auto& r : rep.sweep) {
    sweep.push_back({{"k", r.k},
                     {"lambda_w", num(r.lambda_w)},
                     {"lambda_b", num(r.lambda_b)},
                     {"objective", num(r.objective)},
                     {"d_lambda_w", num(r.d_lambda_w)},
                     {"d_lambda_b", num(r.d_lambda_b)}});
  }
  j["sweep"] = sweep;
  j["elbow_k"] = rep.elbow_k ? ordered_json(*rep.elbow_k) : ordered_json(nullptr);
  return j.dump(2) + "\n";
}

void write_report_files(const RunReport& report, const std::string& dir) {
  ensure_dir(dir);
  const fs::path d(dir);
  csv::write_file((d / "report.json").string(), run_report_to_json(report));
  csv::write_file((d / "duration_histogram.csv").string(), histogram_to_csv(report.distributions.duration_histogram));
  csv::write_file((d / "primitives_per_encounter.csv").string(),
                  histogram_to_csv(report.distributions.primitives_per_encounter));
  csv::write_file((d / "cluster_distribution.csv").string(),
                  cluster_distribution_to_csv(report.distributions.cluster_distribution));
  csv::write_file((d / "sweep.csv").string(), sweep_to_csv(report.sweep));
}

RunReport run_pipeline(const PipelineConfig& cfg) {
  cfg.validate();
  if (cfg.output_dir.empty()) throw ConfigError("output_dir must be set");
  const fs::path out(cfg.output_dir);
  ensure_dir(cfg.output_dir);

  RunReport report;

  // ingest
  LoadOptions load_opts;
  load_opts.resample = cfg.resample;
  const auto ingested = ingest_directory(cfg.input_dir, {cfg.min_encounter_s, cfg.max_mutual_m}, load_opts);
  report.corpus_size = ingested.size();
  std::vector<DrivingEncounter> qualified;
  ensure_dir((out / "projected").string());
  for (const auto& item : ingested) {
    if (!item.qualification.qualified) {
      report.rejected.push_back({item.encounter.id(), item.qualification.reason});
      continue;
    }
    try {
      write_encounter_csv(item.encounter, (out / "projected" / (item.encounter.id() + ".csv")).string());
    } catch (const std::exception& e) {
      throw StageError("ingest", item.encounter.id(), e.what());
    }
    qualified.push_back(item.encounter);
  }
  report.qualified_count = qualified.size();
  if (qualified.empty()) throw StageError("ingest", "", "no encounter passed qualification");

  // segment
  const auto segmented = segment_encounters(qualified, cfg.hdphmm, cfg.global_seed, cfg.min_primitive_s, cfg.jobs);
  std::vector<DrivingPrimitive> primitives;
  std::vector<PrimitiveRecord> records;
  std::vector<std::string> encounter_ids;
  for (const auto& s : segmented) {
    encounter_ids.push_back(s.encounter_id);
    for (const auto& p : s.primitives) {
      records.push_back(to_record(p));
      primitives.push_back(p);
    }
  }
  report.primitive_count = primitives.size();
  csv::write_file((out / "primitives.jsonl").string(), to_jsonl(records));

  // featurize
  const auto features = featurize_primitives(primitives, cfg.rescale_l, cfg.jobs);
  csv::write_file((out / "features.csv").string(), features_to_csv(features));
  if (cfg.export_matrices) {
    const auto mdir = out / "matrices";
    ensure_dir(mdir.string());
    for (const auto& fv : features) {
      const auto fm = unflatten_features(fv, cfg.rescale_l);
      const auto stem = fv.source.encounter_id + "_" + std::to_string(fv.source.m) + "_" + std::to_string(fv.source.n);
      csv::write_file((mdir / (stem + "_position.txt")).string(), matrix_to_text(fm.position));
      csv::write_file((mdir / (stem + "_speed.txt")).string(), matrix_to_text(fm.speed));
    }
  }

  // cluster
  std::vector<PrimitiveIdentity> ids;
  std::vector<Point> points;
  for (const auto& fv : features) {
    ids.push_back(fv.source);
    points.push_back(fv.phi);
  }
  std::vector<int> assignments;
  ClusterModel model;
  if (!points.empty()) {
    const std::size_t k = std::min(cfg.cluster_k, points.size());
    try {
      model = kmeans_fit(points, k, mix_seed(cfg.global_seed, stable_hash("cluster")));
    } catch (const std::exception& e) {
      throw StageError("cluster", "", e.what());
    }
    assignments = model.assignments;
    report.cluster_k = k;
    report.objective = model.objective;
    if (!std::isnan(model.lambda_w)) report.lambda_w = model.lambda_w;
    if (!std::isnan(model.lambda_b)) report.lambda_b = model.lambda_b;
  }
  csv::write_file((out / "centroids.csv").string(), centroids_to_csv(model));
  csv::write_file((out / "assignments.csv").string(), assignments_to_csv(ids, assignments));

  // sweep
  const std::size_t k_max = std::min(cfg.sweep.k_max, points.size() > 0 ? points.size() - 1 : 0);
  if (cfg.sweep.k_min < k_max) {
    try {
      report.sweep = elbow_sweep(points, cfg.sweep.k_min, k_max, cfg.sweep.seeds_per_k,
                                 mix_seed(cfg.global_seed, stable_hash("sweep")), cfg.jobs);
    } catch (const std::exception& e) {
      throw StageError("sweep", "", e.what());
    }
    if (report.sweep.size() >= 3) report.elbow_k = find_elbow(report.sweep);
  }

  // report
  report.distributions =
      report_distributions(records, encounter_ids, assignments, report.cluster_k, cfg.duration_bin_s);
  try {
    write_report_files(report, cfg.output_dir);
    csv::write_file((out / "config.json").string(), pipeline_config_to_json(cfg));
  } catch (const std::exception& e) {
    throw StageError("report", "", e.what());
  }
  return report;
}

}  // namespace drivprim
