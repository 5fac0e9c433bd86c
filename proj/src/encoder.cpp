#include "jointgt/encoder.hpp"

#include <cmath>
#include <numeric>

#include "jointgt/errors.hpp"
#include "jointgt/layers.hpp"
#include "jointgt/vocab.hpp"

namespace jointgt {

void EncoderInput::validate() const {
  if (graph_span > ids.size()) throw IndexError("graph span exceeds input length");
  if (!padding.empty() && padding.size() != ids.size()) {
    throw ShapeError("padding mask length differs from input length");
  }
  for (const auto& positions : entity_positions) {
    for (std::size_t p : positions) {
      if (p >= graph_span) throw IndexError("entity position " + std::to_string(p) + " outside graph span");
    }
  }
  for (const auto& [key, positions] : relation_positions) {
    if (key.first >= entity_positions.size() || key.second >= entity_positions.size()) {
      throw IndexError("relation refers to a missing entity");
    }
    for (std::size_t p : positions) {
      if (p >= graph_span) throw IndexError("relation position " + std::to_string(p) + " outside graph span");
    }
  }
}

EncoderInput make_encoder_input(std::vector<int> graph_ids, const LinearizedGraph& lin,
                                const std::vector<int>* text_ids) {
  EncoderInput input;
  input.graph_span = graph_ids.size();
  input.ids = std::move(graph_ids);
  if (text_ids != nullptr) {
    input.ids.push_back(Vocabulary::kSep);
    input.ids.insert(input.ids.end(), text_ids->begin(), text_ids->end());
  }
  input.entity_positions = lin.entity_positions;
  input.relation_positions = lin.relation_positions;
  return input;
}

PooledUnits pool_units(const Tensor& h, const EncoderInput& input) {
  const std::size_t num_entities = input.num_entities();
  const std::size_t d = h.dim(1);
  std::vector<Tensor> entity_rows;
  entity_rows.reserve(num_entities);
  for (std::size_t i = 0; i < num_entities; ++i) {
    if (input.entity_positions[i].empty()) {
      throw EmptyPoolError("entity " + std::to_string(i) + " has no token positions");
    }
    entity_rows.push_back(index_mean_pool(h, input.entity_positions[i]));
  }
  std::vector<Tensor> relation_rows;
  relation_rows.reserve(num_entities * num_entities);
  const Tensor zero = Tensor::zeros({d});
  for (std::size_t i = 0; i < num_entities; ++i) {
    for (std::size_t j = 0; j < num_entities; ++j) {
      auto it = input.relation_positions.find({i, j});
      if (it == input.relation_positions.end() || it->second.empty()) {
        relation_rows.push_back(zero);
      } else {
        relation_rows.push_back(index_mean_pool(h, it->second));
      }
    }
  }
  return {stack(entity_rows), stack(relation_rows)};
}

Tensor structure_aware_attention(const PooledUnits& units, const ParamStore& params,
                                 const std::string& prefix, std::size_t num_heads,
                                 std::vector<Tensor>* weights) {
  const std::size_t n = units.entities.dim(0);
  const std::size_t d = units.entities.dim(1);
  const std::size_t d_k = d / num_heads;
  const double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(d_k));

  const Tensor zq = matmul(units.entities, params.get(prefix + "wqs"));
  const Tensor zk = matmul(units.entities, params.get(prefix + "wks"));
  const Tensor zv = matmul(units.entities, params.get(prefix + "wvs"));
  const Tensor rk = matmul(units.relations, params.get(prefix + "wkr"));
  const Tensor rv = matmul(units.relations, params.get(prefix + "wvr"));

  std::vector<Tensor> heads;
  heads.reserve(num_heads);
  for (std::size_t h = 0; h < num_heads; ++h) {
    const std::size_t lo = h * d_k, hi = lo + d_k;
    const Tensor zq_h = slice_cols(zq, lo, hi);
    const Tensor zk_h = slice_cols(zk, lo, hi);
    const Tensor zv_h = slice_cols(zv, lo, hi);
    const Tensor rk_h = slice_cols(rk, lo, hi);
    const Tensor rv_h = slice_cols(rv, lo, hi);
    std::vector<Tensor> rows;
    std::vector<Tensor> betas;
    rows.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      // keys_j = z_j W^KS + q_ij W^KR ; values_j = z_j W^VS + q_ij W^VR
      const Tensor keys = add(zk_h, slice_rows(rk_h, i * n, (i + 1) * n));
      const Tensor values = add(zv_h, slice_rows(rv_h, i * n, (i + 1) * n));
      const Tensor u = scale(matmul_nt(slice_rows(zq_h, i, i + 1), keys), inv_sqrt_dk);
      const Tensor beta = softmax(u, 1);
      if (weights != nullptr) betas.push_back(beta);
      rows.push_back(matmul(beta, values));
    }
    if (weights != nullptr) weights->push_back(concat(betas, 0));
    heads.push_back(n == 1 ? rows[0] : concat(rows, 0));
  }
  return num_heads == 1 ? heads[0] : concat(heads, 1);
}

Tensor residual_fuse(const Tensor& h, const Tensor& fused, const EncoderInput& input) {
  std::vector<int> source(h.dim(0), -1);
  for (std::size_t e = 0; e < input.num_entities(); ++e) {
    for (std::size_t p : input.entity_positions[e]) source.at(p) = static_cast<int>(e);
  }
  return scatter_add_rows(h, fused, source);
}

Tensor encoder_self_attention(const Tensor& h, const EncoderInput& input, const Model& model,
                              std::size_t layer, std::vector<Tensor>* weights) {
  AttentionMask mask;
  mask.key_padding = &input.padding;
  return multi_head_attention(h, h, model.params, names::encoder_layer(layer) + "attn",
                              model.config.encoder.num_heads, mask, weights);
}

namespace {

// Learned, context-free unit vectors for the REL variant.
PooledUnits learned_units(const EncoderInput& input, const Model& model) {
  const Tensor entity_table = embedding_lookup(model.params.get(names::kRelEntityEmbedding), input.ids);
  const Tensor relation_table =
      embedding_lookup(model.params.get(names::kRelRelationEmbedding), input.ids);
  PooledUnits from_entities = pool_units(entity_table, input);
  PooledUnits from_relations = pool_units(relation_table, input);
  return {from_entities.entities, from_relations.relations};
}

std::vector<std::size_t> iota(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), std::size_t{0});
  return v;
}

}  // namespace

Tensor encode(const EncoderInput& input, const Model& model, EncoderTrace* trace) {
  const EncoderConfig& cfg = model.config.encoder;
  if (input.ids.empty()) throw LengthError("empty encoder input");
  if (input.ids.size() > cfg.max_input_len) {
    throw LengthError("encoder input of " + std::to_string(input.ids.size()) + " tokens exceeds " +
                      std::to_string(cfg.max_input_len));
  }
  input.validate();
  const bool structured = cfg.variant != EncoderVariant::kSeq && input.num_entities() > 0;

  const Tensor positions = gather_rows(model.params.get(names::kEncoderPositions), iota(input.ids.size()));
  Tensor h = add(embedding_lookup(model.params.get(names::kTokenEmbedding), input.ids), positions);

  PooledUnits learned;
  if (structured && cfg.variant == EncoderVariant::kRel) learned = learned_units(input, model);

  for (std::size_t l = 0; l < cfg.num_layers; ++l) {
    const std::string p = names::encoder_layer(l);
    std::vector<Tensor>* attn_weights = nullptr;
    if (trace != nullptr) attn_weights = &trace->self_attention.emplace_back();
    h = add(h, encoder_self_attention(layer_norm(h, model.params, p + "ln1"), input, model, l, attn_weights));

    if (structured) {
      PooledUnits units = cfg.variant == EncoderVariant::kJoint ? pool_units(h, input) : learned;
      std::vector<Tensor>* struct_weights = nullptr;
      if (trace != nullptr) {
        struct_weights = &trace->structure_attention.emplace_back();
        trace->pooled.push_back(units);
      }
      const Tensor fused = structure_aware_attention(units, model.params, p + "struct.", cfg.num_heads,
                                                     struct_weights);
      h = residual_fuse(h, fused, input);
    }

    h = add(h, feed_forward(layer_norm(h, model.params, p + "ln2"), model.params, p + "ff"));
  }
  return layer_norm(h, model.params, "enc.ln_f");
}

}  // namespace jointgt
