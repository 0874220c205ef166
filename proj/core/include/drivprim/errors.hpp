#pragma once

#include <stdexcept>
#include <string>

namespace drivprim {

/// Malformed input text (CSV/JSON). The message names the offending line.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Well-formed input that violates a data invariant.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration or hyperparameters.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Failure inside the end-to-end pipeline, tagged with the stage and the
/// encounter being processed (empty when the failure is corpus-wide).
class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, std::string encounter_id, const std::string& what)
      : std::runtime_error("[" + stage + "]" +
                           (encounter_id.empty() ? "" : " encounter " + encounter_id) + ": " +
                           what),
        stage_(std::move(stage)),
        encounter_id_(std::move(encounter_id)) {}

  const std::string& stage() const noexcept { return stage_; }
  const std::string& encounter_id() const noexcept { return encounter_id_; }

 private:
  std::string stage_;
  std::string encounter_id_;
};

}  // namespace drivprim
