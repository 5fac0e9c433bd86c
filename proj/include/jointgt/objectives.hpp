#pragma once

// Pre-training and fine-tuning losses.
//
//   text reconstruction   encoder: graph <SEP> masked text, decoder: text
//   graph reconstruction  encoder: masked graph <SEP> text, tied head on the
//                         masked graph positions
//   OT alignment          encoder: graph, decoder: text; cosine cost between
//                         pooled graph units and decoder states, plan from
//                         IPOT held constant
//   fine-tuning           encoder: graph, decoder: text

#include <vector>

#include "jointgt/graph.hpp"
#include "jointgt/masking.hpp"
#include "jointgt/model.hpp"
#include "jointgt/ot.hpp"
#include "jointgt/tensor.hpp"
#include "jointgt/vocab.hpp"

namespace jointgt {

// A pair resolved against a vocabulary.
struct Example {
  GraphTextPair pair;
  LinearizedGraph lin;
  std::vector<int> graph_ids;
  std::vector<int> text_ids;
};

Example prepare_example(const GraphTextPair& pair, const Vocabulary& vocab);
std::vector<Example> prepare_examples(const std::vector<GraphTextPair>& corpus, const Vocabulary& vocab);

struct LossWeights {
  double text = 1.0;
  double graph = 1.0;
  double ot = 1.0;
};

struct ObjectiveConfig {
  MaskingRates masking;
  OTConfig ot;
  LossWeights weights;
};

Tensor loss_text_reconstruction(const Model& model, const Example& ex, const Vocabulary& vocab, Rng& rng,
                                const MaskingRates& rates = {});

// Zero (with no gradient path) when the corruption masked nothing.
Tensor loss_graph_reconstruction(const Model& model, const Example& ex, const Vocabulary& vocab, Rng& rng,
                                 const MaskingRates& rates = {});

// Pooled graph units (entities, then existing relations) from final encoder
// states of the graph-only input.
Tensor graph_unit_states(const Tensor& encoder_states, const Example& ex);

// If frozen_plan is given it replaces the IPOT solve; plan_out receives the
// plan that was used.
Tensor loss_ot_alignment(const Model& model, const Example& ex, const OTConfig& config = {},
                         const TransportPlan* frozen_plan = nullptr, TransportPlan* plan_out = nullptr);

Tensor loss_finetune(const Model& model, const Example& ex);

struct LossBundle {
  double l_text = 0.0;
  double l_graph = 0.0;
  double l_ot = 0.0;
  LossWeights weights;
  Tensor total;
};

// Weighted sum of the three losses on one example. A term whose weight is
// zero is skipped and reported as 0.
LossBundle combined_pretrain_loss(const Model& model, const Example& ex, const Vocabulary& vocab, Rng& rng,
                                  const ObjectiveConfig& config = {});

}  // namespace jointgt
