#include "jointgt/diagnostics.hpp"

#include "jointgt/errors.hpp"

namespace jointgt {

GraphTextPair toy_pair() {
  GraphTextPair pair;
  pair.graph.entities = {"alan bean", "nasa", "wapakoneta"};
  pair.graph.relations[{0, 1}] = "operator";
  pair.graph.relations[{0, 2}] = "birth place";
  pair.text = tokenize("alan bean from wapakoneta worked for nasa .");
  pair.entity_mentions = match_mentions(pair.graph, pair.text);
  return pair;
}

ModelConfig toy_model_config() {
  ModelConfig config;
  config.encoder = {.num_layers = 2, .num_heads = 2, .d_model = 16, .d_ff = 32, .max_input_len = 32};
  config.decoder = {.num_layers = 2, .num_heads = 2, .d_model = 16, .d_ff = 32, .max_output_len = 12};
  return config;
}

ToySetup make_toy_setup(ModelConfig config, std::uint64_t seed) {
  const GraphTextPair pair = toy_pair();
  Vocabulary vocab = build_vocab({pair}, 1);
  config.vocab_size = vocab.size();
  config.validate();
  Model model = init_model(config, seed);
  Example example = prepare_example(pair, vocab);
  return {std::move(model), std::move(vocab), std::move(example)};
}

std::vector<LossGradCheck> check_loss_gradients(ToySetup& setup, const GradCheckOptions& options) {
  Model& model = setup.model;
  const Vocabulary& vocab = setup.vocab;
  const Example& ex = setup.example;
  // grad_check perturbs model.params in place, so every closure reads the
  // store through `model` rather than the argument.
  std::vector<LossGradCheck> results;

  constexpr std::uint64_t kTextSeed = 7;
  results.push_back({"text", grad_check(
                                 [&](const ParamStore&) {
                                   Rng rng(kTextSeed);
                                   return loss_text_reconstruction(model, ex, vocab, rng);
                                 },
                                 model.params, options)});

  std::uint64_t graph_seed = 0;
  for (;; ++graph_seed) {
    if (graph_seed == 1000) throw Error("no masking seed selects a graph unit");
    NoGradGuard no_grad;
    Rng rng(graph_seed);
    if (loss_graph_reconstruction(model, ex, vocab, rng).item() > 0.0) break;
  }
  results.push_back({"graph", grad_check(
                                  [&](const ParamStore&) {
                                    Rng rng(graph_seed);
                                    return loss_graph_reconstruction(model, ex, vocab, rng);
                                  },
                                  model.params, options)});

  TransportPlan plan;
  {
    NoGradGuard no_grad;
    loss_ot_alignment(model, ex, {}, nullptr, &plan);
  }
  results.push_back({"ot", grad_check([&](const ParamStore&) { return loss_ot_alignment(model, ex, {}, &plan); },
                                      model.params, options)});

  results.push_back(
      {"finetune", grad_check([&](const ParamStore&) { return loss_finetune(model, ex); }, model.params, options)});
  return results;
}

}  // namespace jointgt
