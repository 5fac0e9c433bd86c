#pragma once

// Transformer decoder with a language-model head tied to the token
// embedding table, plus greedy and beam-search generation.

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "jointgt/model.hpp"
#include "jointgt/tensor.hpp"

namespace jointgt {

struct DecoderOutput {
  Tensor logits;  // (len, vocab)
  Tensor hidden;  // (len, d_model), after the final layer norm
};

// Runs the decoder on input_ids with causal self-attention and
// cross-attention over `memory`.
DecoderOutput decoder_forward(std::span<const int> input_ids, const Tensor& memory, const Model& model,
                              const std::vector<bool>* memory_padding = nullptr);

struct TeacherForced {
  DecoderOutput out;          // n + 1 rows: inputs <BOS> x_1..x_n
  std::vector<int> targets;   // x_1..x_n <EOS>
  Tensor text_states;         // (n, d): hidden state at the position holding x_j
};

// Teacher-forced pass over the text x_1..x_n. Throws LengthError if n + 1
// exceeds max_output_len.
TeacherForced decode_train(std::span<const int> text_ids, const Tensor& memory, const Model& model);

// Tied head: hidden (len, d) x embedding^T.
Tensor lm_head(const Tensor& hidden, const Model& model);

struct BeamConfig {
  std::size_t beam_size = 5;
  double length_penalty = 1.0;
  std::size_t max_len = 64;
};

struct Hypothesis {
  std::vector<int> tokens;  // generated ids, ending in <EOS> unless truncated
  double log_prob = 0.0;
  double score = 0.0;       // log_prob / len^length_penalty
};

// Log-probabilities of the next token given the tokens generated so far.
using NextTokenScorer = std::function<std::vector<double>(std::span<const int> prefix)>;

double penalized_score(double log_prob, std::size_t length, double length_penalty);

Hypothesis greedy_search(const NextTokenScorer& scorer, std::size_t max_len, double length_penalty,
                         int eos);

// Ties are broken toward lower token ids. The greedy hypothesis always takes
// part in the final ranking.
Hypothesis beam_search(const NextTokenScorer& scorer, const BeamConfig& config, int eos);

// Generated token ids without <BOS>/<EOS>.
std::vector<int> generate(const Tensor& memory, const BeamConfig& config, const Model& model);

}  // namespace jointgt
