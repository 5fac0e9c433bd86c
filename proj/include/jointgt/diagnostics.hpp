#pragma once

// A small fixed graph-text pair and model used for end-to-end gradient
// checks of every loss.

#include <cstdint>
#include <string>
#include <vector>

#include "jointgt/model.hpp"
#include "jointgt/objectives.hpp"
#include "jointgt/tensor.hpp"
#include "jointgt/vocab.hpp"

namespace jointgt {

// Three entities, two triples, eight text tokens.
GraphTextPair toy_pair();

// 2 + 2 layers, d_model 16, 2 heads; vocab_size is left at 0.
ModelConfig toy_model_config();

struct ToySetup {
  Model model;
  Vocabulary vocab;
  Example example;
};

// Vocabulary from toy_pair(); model dimensions from `config`.
ToySetup make_toy_setup(ModelConfig config, std::uint64_t seed);

struct LossGradCheck {
  std::string loss;  // text, graph, ot, finetune
  GradCheckReport report;
};

// Checks the text, graph, OT (plan held fixed) and fine-tuning losses. The
// masking seeds are fixed per loss so each loss is a deterministic function
// of the parameters; the graph seed is chosen so that something is masked.
std::vector<LossGradCheck> check_loss_gradients(ToySetup& setup, const GradCheckOptions& options = {});

}  // namespace jointgt
