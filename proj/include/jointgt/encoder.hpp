#pragma once

// Structure-aware Transformer encoder.
//
// Each layer runs pre-norm self-attention over the whole input, then (for
// the structured variants) the aggregation block, then the feed-forward
// sublayer. The aggregation block pools entity and relation vectors out of
// the graph span, lets entities attend to each other with relation-aware
// keys and values, and adds the result back onto every token of the entity.

#include <cstddef>
#include <map>
#include <vector>

#include "jointgt/graph.hpp"
#include "jointgt/model.hpp"
#include "jointgt/tensor.hpp"

namespace jointgt {

struct EncoderInput {
  std::vector<int> ids;
  // Tokens [0, graph_span) are the (possibly corrupted) linearized graph.
  std::size_t graph_span = 0;
  std::vector<std::vector<std::size_t>> entity_positions;
  std::map<RelationKey, std::vector<std::size_t>> relation_positions;
  // true = padding; empty = no padding.
  std::vector<bool> padding;

  std::size_t num_entities() const { return entity_positions.size(); }
  // Throws IndexError if a position map leaves the graph span.
  void validate() const;
};

// Builds the input for graph tokens optionally followed by <SEP> and text.
EncoderInput make_encoder_input(std::vector<int> graph_ids, const LinearizedGraph& lin,
                                const std::vector<int>* text_ids = nullptr);

// Pooled graph units for one layer.
struct PooledUnits {
  Tensor entities;   // (|V|, d)
  // (|V|*|V|, d); row i*|V|+j holds q_ij, zero when (i, j) has no relation.
  Tensor relations;
};

// Per-layer diagnostics collected when a trace is passed to encode().
struct EncoderTrace {
  std::vector<std::vector<Tensor>> self_attention;  // [layer][head]
  std::vector<std::vector<Tensor>> structure_attention;  // [layer][head], (|V|, |V|)
  std::vector<PooledUnits> pooled;  // [layer]
};

// Mean-pools entity rows and relation rows of h (rows outside the graph span
// are never read). Throws EmptyPoolError if an entity has no position.
PooledUnits pool_units(const Tensor& h, const EncoderInput& input);

// Relation-aware attention among entities using <prefix>wqs/wks/wvs/wkr/wvr.
// Heads are concatenated without an output projection.
Tensor structure_aware_attention(const PooledUnits& units, const ParamStore& params,
                                 const std::string& prefix, std::size_t num_heads,
                                 std::vector<Tensor>* weights = nullptr);

// Adds row j of fused to every position of entity j; other rows pass
// through untouched.
Tensor residual_fuse(const Tensor& h, const Tensor& fused, const EncoderInput& input);

// Multi-head self-attention sublayer of layer `layer` (no residual).
Tensor encoder_self_attention(const Tensor& h, const EncoderInput& input, const Model& model,
                              std::size_t layer, std::vector<Tensor>* weights = nullptr);

// Final hidden states, (ids.size(), d_model). Throws LengthError when the
// input exceeds max_input_len.
Tensor encode(const EncoderInput& input, const Model& model, EncoderTrace* trace = nullptr);

}  // namespace jointgt
