#pragma once

// Checkpoint directory layout:
//   manifest.json  model config, vocabulary file name, ordered parameter
//                  list of {name, shape, dtype = "f64"}
//   params.bin     raw little-endian float64 values in manifest order
//   vocab.txt      one token per line

#include <filesystem>

#include <json.hpp>

#include "jointgt/model.hpp"
#include "jointgt/vocab.hpp"

namespace jointgt {

struct Checkpoint {
  Model model;
  Vocabulary vocab;
  nlohmann::json extra;  // free-form run metadata stored alongside
};

void save_checkpoint(const std::filesystem::path& dir, const Model& model, const Vocabulary& vocab,
                     const nlohmann::json& extra = nlohmann::json::object());

// Throws CheckpointError on missing files, malformed manifests, shape
// mismatches or truncated parameter data.
Checkpoint load_checkpoint(const std::filesystem::path& dir);

// Copies parameters from `source` into `target` by name. Every target
// parameter must exist in the source with the same shape, except structure
// weights, which are zero-filled when absent. Throws CheckpointError.
void transfer_parameters(const Model& source, Model& target);

}  // namespace jointgt
