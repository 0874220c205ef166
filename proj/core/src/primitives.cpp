#include <json.hpp>

#include "drivprim/csv.hpp"
#include "drivprim/errors.hpp"
#include "drivprim/hdphmm.hpp"

namespace drivprim {

std::vector<DrivingPrimitive> extract_primitives(const StateSequence& seq,
                                                 const DrivingEncounter& enc,
                                                 double min_duration_s) {
  if (seq.labels.size() != enc.size()) {
    throw ValidationError("extract_primitives: sequence length " +
                          std::to_string(seq.labels.size()) + " differs from encounter length " +
                          std::to_string(enc.size()));
  }
  std::vector<DrivingPrimitive> out;
  std::size_t start = 0;
  for (std::size_t t = 1; t <= seq.labels.size(); ++t) {
    if (t < seq.labels.size() && seq.labels[t] == seq.labels[start]) continue;
    const std::size_t len = t - start;
    const double duration = static_cast<double>(len) / enc.rate_hz();
    // 1e-9 slack so that e.g. 2 samples at 10 Hz count as 0.2 s.
    if (len >= 2 && duration + 1e-9 >= min_duration_s) {
      out.push_back(make_primitive(enc, start, t - 1, seq.labels[start]));
    }
    start = t;
  }
  return out;
}

PrimitiveRecord to_record(const DrivingPrimitive& p) {
  return {p.encounter_id, p.m, p.n, p.state_label, p.duration_s()};
}

std::string to_jsonl(const std::vector<PrimitiveRecord>& records) {
  std::string out;
  for (const auto& r : records) {
    nlohmann::ordered_json j;
    j["encounter_id"] = r.encounter_id;
    j["m"] = r.m;
    j["n"] = r.n;
    j["label"] = r.label;
    j["duration_s"] = r.duration_s;
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::vector<PrimitiveRecord> parse_jsonl(std::string_view text) {
  std::vector<PrimitiveRecord> out;
  std::size_t line_no = 0;
  for (const auto line : csv::lines(text)) {
    ++line_no;
    if (csv::trim(line).empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      PrimitiveRecord r;
      r.encounter_id = j.at("encounter_id").get<std::string>();
      r.m = j.at("m").get<std::size_t>();
      r.n = j.at("n").get<std::size_t>();
      r.label = j.at("label").get<int>();
      r.duration_s = j.at("duration_s").get<double>();
      if (r.m > r.n) throw ValidationError("m > n");
      out.push_back(std::move(r));
    } catch (const std::exception& e) {
      throw ParseError("primitive record at line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace drivprim
