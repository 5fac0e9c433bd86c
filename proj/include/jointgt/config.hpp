#pragma once

// Run configuration: a flat JSON object whose keys mirror the fields below.
// Unknown keys and wrongly typed values are ConfigErrors.

#include <cstddef>
#include <filesystem>

#include <json.hpp>

#include "jointgt/decoder.hpp"
#include "jointgt/model.hpp"
#include "jointgt/training.hpp"

namespace jointgt {

struct RunConfig {
  ModelConfig model;  // vocab_size is filled in from the corpus
  TrainConfig train;
  BeamConfig beam;
  std::size_t min_freq = 1;
};

// Overwrites the fields named in `j`.
void apply_config_json(RunConfig& config, const nlohmann::json& j);
RunConfig load_run_config(const std::filesystem::path& path, RunConfig base = {});
nlohmann::json to_json(const RunConfig& config);

// Checks that every example fits the model's length limits.
void check_lengths(const RunConfig& config, const std::vector<Example>& corpus);

}  // namespace jointgt
