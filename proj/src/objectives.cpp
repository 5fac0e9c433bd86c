#include "jointgt/objectives.hpp"

#include "jointgt/decoder.hpp"
#include "jointgt/encoder.hpp"
#include "jointgt/errors.hpp"

namespace jointgt {

Example prepare_example(const GraphTextPair& pair, const Vocabulary& vocab) {
  Example ex;
  ex.pair = pair;
  ex.lin = linearize(pair.graph);
  ex.graph_ids = vocab.encode(ex.lin.tokens);
  ex.text_ids = vocab.encode(pair.text);
  return ex;
}

std::vector<Example> prepare_examples(const std::vector<GraphTextPair>& corpus, const Vocabulary& vocab) {
  std::vector<Example> out;
  out.reserve(corpus.size());
  for (const auto& pair : corpus) out.push_back(prepare_example(pair, vocab));
  return out;
}

Tensor loss_text_reconstruction(const Model& model, const Example& ex, const Vocabulary& vocab, Rng& rng,
                                const MaskingRates& rates) {
  const MaskedText masked = mask_text(ex.pair, rng, rates.text_entity, rates.text_other);
  const std::vector<int> corrupted = vocab.encode(masked.corrupted);
  const EncoderInput input = make_encoder_input(ex.graph_ids, ex.lin, &corrupted);
  const Tensor memory = encode(input, model);
  const TeacherForced tf = decode_train(ex.text_ids, memory, model);
  return cross_entropy(tf.out.logits, tf.targets, Vocabulary::kPad);
}

Tensor loss_graph_reconstruction(const Model& model, const Example& ex, const Vocabulary& vocab, Rng& rng,
                                 const MaskingRates& rates) {
  const MaskedGraph masked = mask_graph(ex.lin, rng, rates.graph_entity, rates.graph_relation);
  std::vector<std::size_t> positions;
  std::vector<int> targets;
  for (std::size_t i = 0; i < masked.indicator.size(); ++i) {
    if (masked.indicator[i]) {
      positions.push_back(i);
      targets.push_back(ex.graph_ids[i]);
    }
  }
  if (positions.empty()) return Tensor::scalar(0.0);

  const EncoderInput input = make_encoder_input(vocab.encode(masked.corrupted), ex.lin, &ex.text_ids);
  const Tensor states = encode(input, model);
  const Tensor logits = lm_head(gather_rows(states, positions), model);
  return cross_entropy(logits, targets, -1);
}

Tensor graph_unit_states(const Tensor& encoder_states, const Example& ex) {
  std::vector<Tensor> rows;
  for (const auto& unit : unit_sequence(ex.pair.graph)) {
    const auto& positions = unit.kind == UnitKind::kEntity
                                ? ex.lin.entity_positions.at(unit.head)
                                : ex.lin.relation_positions.at({unit.head, unit.tail});
    rows.push_back(index_mean_pool(encoder_states, positions));
  }
  return stack(rows);
}

Tensor loss_ot_alignment(const Model& model, const Example& ex, const OTConfig& config,
                         const TransportPlan* frozen_plan, TransportPlan* plan_out) {
  const EncoderInput input = make_encoder_input(ex.graph_ids, ex.lin);
  const Tensor memory = encode(input, model);
  const Tensor graph_states = graph_unit_states(memory, ex);
  const TeacherForced tf = decode_train(ex.text_ids, memory, model);
  const Tensor cost = cosine_cost(graph_states, tf.text_states);

  TransportPlan plan;
  if (frozen_plan != nullptr) {
    if (frozen_plan->rows != cost.dim(0) || frozen_plan->cols != cost.dim(1)) {
      throw ShapeError("frozen transport plan does not match the cost matrix");
    }
    plan = *frozen_plan;
  } else {
    plan = ipot_uniform(cost.values(), cost.dim(0), cost.dim(1), config);
  }
  const Tensor weights = Tensor::from(cost.shape(), plan.plan);
  if (plan_out != nullptr) *plan_out = std::move(plan);
  return sum(mul(weights, cost));
}

Tensor loss_finetune(const Model& model, const Example& ex) {
  const Tensor memory = encode(make_encoder_input(ex.graph_ids, ex.lin), model);
  const TeacherForced tf = decode_train(ex.text_ids, memory, model);
  return cross_entropy(tf.out.logits, tf.targets, Vocabulary::kPad);
}

LossBundle combined_pretrain_loss(const Model& model, const Example& ex, const Vocabulary& vocab, Rng& rng,
                                  const ObjectiveConfig& config) {
  const LossWeights& w = config.weights;
  if (w.text < 0.0 || w.graph < 0.0 || w.ot < 0.0) throw UsageError("loss weights must be non-negative");

  LossBundle bundle;
  bundle.weights = w;
  std::vector<Tensor> terms;
  if (w.text != 0.0) {
    const Tensor l = loss_text_reconstruction(model, ex, vocab, rng, config.masking);
    bundle.l_text = l.item();
    terms.push_back(w.text == 1.0 ? l : scale(l, w.text));
  }
  if (w.graph != 0.0) {
    const Tensor l = loss_graph_reconstruction(model, ex, vocab, rng, config.masking);
    bundle.l_graph = l.item();
    terms.push_back(w.graph == 1.0 ? l : scale(l, w.graph));
  }
  if (w.ot != 0.0) {
    const Tensor l = loss_ot_alignment(model, ex, config.ot);
    bundle.l_ot = l.item();
    terms.push_back(w.ot == 1.0 ? l : scale(l, w.ot));
  }
  if (terms.empty()) {
    bundle.total = Tensor::scalar(0.0);
    return bundle;
  }
  bundle.total = terms[0];
  for (std::size_t i = 1; i < terms.size(); ++i) bundle.total = add(bundle.total, terms[i]);
  return bundle;
}

}  // namespace jointgt
