#pragma once

#include <string>
#include <vector>

#include "slimipl/data.hpp"
#include "slimipl/model.hpp"
#include "slimipl/trainer.hpp"

namespace slimipl::config {

struct DecodeSettings {
  int beam_size = 16;
  double lm_weight = 0.0;
  double length_bonus = 0.0;
  int lm_order = 3;
  double lm_smoothing = 0.1;

  bool operator==(const DecodeSettings&) const = default;
};

struct ExperimentConfig {
  data::SynthTaskConfig task;
  data::SplitSizes sizes;
  std::uint64_t data_seed = 1;
  model::ModelConfig model;
  trainer::TrainConfig train;
  DecodeSettings decode;
  std::string output_dir = "runs/default";

  // Checks every nested invariant and cross-section consistency.
  void validate() const;
  bool operator==(const ExperimentConfig&) const = default;
};

// Sectioned key = value text. Parsing is strict: every key is required and
// unknown sections or keys are errors naming the offending key.
std::string to_ini(const ExperimentConfig& cfg);
ExperimentConfig parse_ini(const std::string& text,
                           const std::vector<std::string>& overrides = {});
ExperimentConfig load(const std::string& path, const std::vector<std::string>& overrides = {});

// Train-only subset ([train], [augment], [divergence]) used inside checkpoints.
std::string train_to_ini(const trainer::TrainConfig& cfg);
trainer::TrainConfig train_from_ini(const std::string& text);

// "desk" (default synthetic task), "ll10" and "ls100" (published hyperparameter rows
// mapped onto the desk task).
ExperimentConfig preset(const std::string& name);
std::vector<std::string> preset_names();

std::string format_double(double v);

}  // namespace slimipl::config
