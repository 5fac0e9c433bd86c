#include "jointgt/decoder.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "jointgt/errors.hpp"
#include "jointgt/layers.hpp"
#include "jointgt/vocab.hpp"

namespace jointgt {

Tensor lm_head(const Tensor& hidden, const Model& model) {
  return matmul_nt(hidden, model.params.get(names::kTokenEmbedding));
}

DecoderOutput decoder_forward(std::span<const int> input_ids, const Tensor& memory, const Model& model,
                              const std::vector<bool>* memory_padding) {
  const DecoderConfig& cfg = model.config.decoder;
  if (input_ids.empty()) throw LengthError("empty decoder input");
  if (input_ids.size() > cfg.max_output_len) {
    throw LengthError("decoder input of " + std::to_string(input_ids.size()) + " tokens exceeds " +
                      std::to_string(cfg.max_output_len));
  }
  std::vector<std::size_t> rows(input_ids.size());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  Tensor h = add(embedding_lookup(model.params.get(names::kTokenEmbedding), input_ids),
                 gather_rows(model.params.get(names::kDecoderPositions), rows));

  AttentionMask causal;
  causal.causal = true;
  AttentionMask cross;
  cross.key_padding = memory_padding;
  for (std::size_t l = 0; l < cfg.num_layers; ++l) {
    const std::string p = names::decoder_layer(l);
    const Tensor a = layer_norm(h, model.params, p + "ln1");
    h = add(h, multi_head_attention(a, a, model.params, p + "self", cfg.num_heads, causal));
    h = add(h, multi_head_attention(layer_norm(h, model.params, p + "ln2"), memory, model.params,
                                    p + "cross", cfg.num_heads, cross));
    h = add(h, feed_forward(layer_norm(h, model.params, p + "ln3"), model.params, p + "ff"));
  }
  Tensor hidden = layer_norm(h, model.params, "dec.ln_f");
  Tensor logits = lm_head(hidden, model);
  return {logits, hidden};
}

TeacherForced decode_train(std::span<const int> text_ids, const Tensor& memory, const Model& model) {
  if (text_ids.empty()) throw LengthError("empty target text");
  if (text_ids.size() + 1 > model.config.decoder.max_output_len) {
    throw LengthError("target of " + std::to_string(text_ids.size()) + " tokens exceeds max_output_len " +
                      std::to_string(model.config.decoder.max_output_len) + " (with <EOS>)");
  }
  std::vector<int> inputs{Vocabulary::kBos};
  inputs.insert(inputs.end(), text_ids.begin(), text_ids.end());
  TeacherForced result;
  result.targets.assign(text_ids.begin(), text_ids.end());
  result.targets.push_back(Vocabulary::kEos);
  result.out = decoder_forward(inputs, memory, model);
  result.text_states = slice_rows(result.out.hidden, 1, inputs.size());
  return result;
}

double penalized_score(double log_prob, std::size_t length, double length_penalty) {
  if (length == 0 || length_penalty == 0.0) return log_prob;
  return log_prob / std::pow(static_cast<double>(length), length_penalty);
}

namespace {

// Higher score first, then lexicographically smaller token sequence.
bool ranks_before(double score_a, const std::vector<int>& a, double score_b, const std::vector<int>& b) {
  if (score_a != score_b) return score_a > score_b;
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

Hypothesis finish(std::vector<int> tokens, double log_prob, double length_penalty) {
  Hypothesis h;
  h.score = penalized_score(log_prob, tokens.size(), length_penalty);
  h.tokens = std::move(tokens);
  h.log_prob = log_prob;
  return h;
}

}  // namespace

Hypothesis greedy_search(const NextTokenScorer& scorer, std::size_t max_len, double length_penalty,
                         int eos) {
  std::vector<int> tokens;
  double log_prob = 0.0;
  while (tokens.size() < max_len) {
    const std::vector<double> lp = scorer(tokens);
    // max_element returns the first maximum, i.e. the lowest id on ties.
    const auto best = static_cast<int>(std::max_element(lp.begin(), lp.end()) - lp.begin());
    tokens.push_back(best);
    log_prob += lp[static_cast<std::size_t>(best)];
    if (best == eos) break;
  }
  return finish(std::move(tokens), log_prob, length_penalty);
}

Hypothesis beam_search(const NextTokenScorer& scorer, const BeamConfig& config, int eos) {
  if (config.beam_size == 0) throw UsageError("beam_size must be at least 1");
  if (config.length_penalty < 0.0) throw UsageError("length_penalty must be non-negative");
  if (config.max_len == 0) return {};

  struct Beam {
    std::vector<int> tokens;
    double log_prob;
  };
  std::vector<Beam> running{{{}, 0.0}};
  std::vector<Hypothesis> finished;
  finished.push_back(greedy_search(scorer, config.max_len, config.length_penalty, eos));

  std::size_t completed = 0;
  for (std::size_t step = 1; step <= config.max_len && !running.empty(); ++step) {
    std::vector<Beam> candidates;
    for (const Beam& beam : running) {
      const std::vector<double> lp = scorer(beam.tokens);
      for (std::size_t t = 0; t < lp.size(); ++t) {
        Beam next{beam.tokens, beam.log_prob + lp[t]};
        next.tokens.push_back(static_cast<int>(t));
        candidates.push_back(std::move(next));
      }
    }
    // All candidates share one length, so raw and penalized order agree.
    std::sort(candidates.begin(), candidates.end(), [](const Beam& a, const Beam& b) {
      return ranks_before(a.log_prob, a.tokens, b.log_prob, b.tokens);
    });

    std::vector<Beam> next_running;
    for (std::size_t rank = 0; rank < candidates.size() && next_running.size() < config.beam_size; ++rank) {
      Beam& c = candidates[rank];
      if (c.tokens.back() == eos) {
        if (rank < config.beam_size) {
          finished.push_back(finish(std::move(c.tokens), c.log_prob, config.length_penalty));
          ++completed;
        }
      } else {
        next_running.push_back(std::move(c));
      }
    }
    running = std::move(next_running);
    if (completed >= config.beam_size) break;
    if (step == config.max_len) {
      for (Beam& b : running) finished.push_back(finish(std::move(b.tokens), b.log_prob, config.length_penalty));
    }
  }

  return *std::min_element(finished.begin(), finished.end(), [](const Hypothesis& a, const Hypothesis& b) {
    return ranks_before(a.score, a.tokens, b.score, b.tokens);
  });
}

std::vector<int> generate(const Tensor& memory, const BeamConfig& config, const Model& model) {
  NoGradGuard no_grad;
  BeamConfig bounded = config;
  bounded.max_len = std::min(config.max_len, model.config.decoder.max_output_len);
  NextTokenScorer scorer = [&](std::span<const int> prefix) {
    std::vector<int> inputs{Vocabulary::kBos};
    inputs.insert(inputs.end(), prefix.begin(), prefix.end());
    const DecoderOutput out = decoder_forward(inputs, memory, model);
    const Tensor last = slice_rows(out.logits, inputs.size() - 1, inputs.size());
    const Tensor lp = log_softmax(last, 1);
    return std::vector<double>(lp.values().begin(), lp.values().end());
  };
  Hypothesis best = beam_search(scorer, bounded, Vocabulary::kEos);
  std::vector<int> ids;
  for (int t : best.tokens) {
    if (t == Vocabulary::kEos) break;
    ids.push_back(t);
  }
  return ids;
}

}  // namespace jointgt
