#include <doctest.h>

#include <cmath>
#include <functional>
#include <random>

#include "jointgt/decoder.hpp"
#include "jointgt/errors.hpp"
#include "jointgt/vocab.hpp"

using namespace jointgt;

namespace {

ModelConfig small_config() {
  ModelConfig c;
  c.vocab_size = 20;
  c.encoder = {.num_layers = 1, .num_heads = 2, .d_model = 8, .d_ff = 16, .max_input_len = 16};
  c.decoder = {.num_layers = 2, .num_heads = 2, .d_model = 8, .d_ff = 16, .max_output_len = 10};
  return c;
}

Tensor random_memory(std::mt19937_64& rng, std::size_t rows, std::size_t d) {
  std::normal_distribution<double> dist(0.0, 1.0);
  std::vector<double> v(rows * d);
  for (double& x : v) x = dist(rng);
  return Tensor::from({rows, d}, v);
}

// Deterministic pseudo-random log-probabilities over `vocab` tokens for
// every prefix.
NextTokenScorer hashed_scorer(std::uint64_t seed, std::size_t vocab) {
  return [seed, vocab](std::span<const int> prefix) {
    std::uint64_t h = seed * 0x9E3779B97F4A7C15ULL + 1;
    for (int t : prefix) h = (h ^ static_cast<std::uint64_t>(t + 1)) * 0x100000001B3ULL;
    std::mt19937_64 rng(h);
    std::uniform_real_distribution<double> dist(-3.0, 3.0);
    std::vector<double> logits(vocab);
    for (double& x : logits) x = dist(rng);
    const double mx = *std::max_element(logits.begin(), logits.end());
    double z = 0.0;
    for (double x : logits) z += std::exp(x - mx);
    for (double& x : logits) x = x - mx - std::log(z);
    return logits;
  };
}

// Best sequence over every sequence that ends in eos within max_len tokens
// or runs to max_len without it.
Hypothesis exhaustive_best(const NextTokenScorer& scorer, std::size_t vocab, std::size_t max_len, double penalty,
                           int eos) {
  Hypothesis best;
  bool have = false;
  std::function<void(std::vector<int>&, double)> walk = [&](std::vector<int>& prefix, double lp) {
    const bool done = !prefix.empty() && (prefix.back() == eos || prefix.size() == max_len);
    if (done) {
      const double score = penalized_score(lp, prefix.size(), penalty);
      if (!have || score > best.score || (score == best.score && prefix < best.tokens)) {
        best = {prefix, lp, score};
        have = true;
      }
      return;
    }
    const auto next = scorer(prefix);
    for (std::size_t t = 0; t < vocab; ++t) {
      prefix.push_back(static_cast<int>(t));
      walk(prefix, lp + next[t]);
      prefix.pop_back();
    }
  };
  std::vector<int> prefix;
  walk(prefix, 0.0);
  return best;
}

}  // namespace

TEST_CASE("decoder self-attention is causal") {
  const Model model = init_model(small_config(), 3);
  std::mt19937_64 rng(1);
  const Tensor memory = random_memory(rng, 5, 8);
  std::vector<int> ids = {Vocabulary::kBos, 9, 10, 11, 12, 13};
  const DecoderOutput a = decoder_forward(ids, memory, model);
  ids[4] = 15;
  const DecoderOutput b = decoder_forward(ids, memory, model);
  const std::size_t v = model.config.vocab_size;
  for (std::size_t r = 0; r < 4; ++r) {
    for (std::size_t c = 0; c < v; ++c) CHECK(a.logits.at(r, c) == b.logits.at(r, c));
  }
  double diff = 0.0;
  for (std::size_t c = 0; c < v; ++c) diff = std::max(diff, std::abs(a.logits.at(4, c) - b.logits.at(4, c)));
  CHECK(diff > 0.0);
}

TEST_CASE("decoder output depends on the encoder memory") {
  const Model model = init_model(small_config(), 3);
  std::mt19937_64 rng(2);
  const std::vector<int> ids = {Vocabulary::kBos, 9, 10};
  const DecoderOutput a = decoder_forward(ids, random_memory(rng, 4, 8), model);
  const DecoderOutput b = decoder_forward(ids, random_memory(rng, 4, 8), model);
  double diff = 0.0;
  for (std::size_t i = 0; i < a.logits.numel(); ++i) diff = std::max(diff, std::abs(a.logits.at(i) - b.logits.at(i)));
  CHECK(diff > 1e-6);
}

TEST_CASE("the language-model head is tied to the token embeddings") {
  const Model model = init_model(small_config(), 4);
  std::mt19937_64 rng(3);
  const Tensor hidden = random_memory(rng, 3, 8);
  const Tensor logits = lm_head(hidden, model);
  const Tensor& table = model.params.get(names::kTokenEmbedding);
  REQUIRE(logits.shape() == Shape{3, model.config.vocab_size});
  for (std::size_t r = 0; r < 3; ++r) {
    for (std::size_t v = 0; v < model.config.vocab_size; ++v) {
      double expected = 0.0;
      for (std::size_t k = 0; k < 8; ++k) expected += hidden.at(r, k) * table.at(v, k);
      CHECK(logits.at(r, v) == doctest::Approx(expected).epsilon(1e-13));
    }
  }
}

TEST_CASE("teacher forcing shifts the text by one and exposes its states") {
  const Model model = init_model(small_config(), 5);
  std::mt19937_64 rng(4);
  const Tensor memory = random_memory(rng, 6, 8);
  const std::vector<int> text = {9, 10, 11};
  const TeacherForced tf = decode_train(text, memory, model);
  CHECK(tf.targets == std::vector<int>{9, 10, 11, Vocabulary::kEos});
  REQUIRE(tf.out.hidden.dim(0) == 4);
  REQUIRE(tf.text_states.shape() == Shape{3, 8});
  for (std::size_t r = 0; r < 3; ++r) {
    for (std::size_t c = 0; c < 8; ++c) CHECK(tf.text_states.at(r, c) == tf.out.hidden.at(r + 1, c));
  }
  const std::vector<int> too_long(10, 9);
  CHECK_THROWS_AS(decode_train(too_long, memory, model), LengthError);
}

TEST_CASE("beam search finds the exhaustive optimum when nothing is pruned") {
  const int eos = 2;
  for (double penalty : {0.0, 1.0, 5.0}) {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
      CAPTURE(penalty);
      CAPTURE(seed);
      const auto scorer = hashed_scorer(seed, 3);
      const Hypothesis oracle = exhaustive_best(scorer, 3, 3, penalty, eos);
      const Hypothesis beam = beam_search(scorer, {.beam_size = 27, .length_penalty = penalty, .max_len = 3}, eos);
      CHECK(beam.tokens == oracle.tokens);
      CHECK(beam.score == doctest::Approx(oracle.score).epsilon(1e-14));
    }
  }
}

TEST_CASE("a strong length penalty favors longer outputs") {
  // p(EOS) is high at every step, so without a penalty the one-token
  // output wins; dividing by len^5 makes the three-token path better.
  const int eos = 0;
  const NextTokenScorer scorer = [](std::span<const int>) {
    return std::vector<double>{std::log(0.6), std::log(0.3), std::log(0.1)};
  };
  const Hypothesis plain = beam_search(scorer, {.beam_size = 27, .length_penalty = 0.0, .max_len = 3}, eos);
  CHECK(plain.tokens == std::vector<int>{0});
  const Hypothesis long_ = beam_search(scorer, {.beam_size = 27, .length_penalty = 5.0, .max_len = 3}, eos);
  CHECK(long_.tokens.size() == 3);
}

TEST_CASE("beam size one is greedy decoding, and wider beams never score worse") {
  const int eos = 2;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    CAPTURE(seed);
    const auto scorer = hashed_scorer(seed, 6);
    const Hypothesis greedy = greedy_search(scorer, 6, 1.0, eos);
    const Hypothesis one = beam_search(scorer, {.beam_size = 1, .length_penalty = 1.0, .max_len = 6}, eos);
    CHECK(one.tokens == greedy.tokens);
    for (std::size_t width : {2u, 3u, 5u}) {
      const Hypothesis wide = beam_search(scorer, {.beam_size = width, .length_penalty = 1.0, .max_len = 6}, eos);
      CHECK(wide.score >= greedy.score);
    }
  }
}

TEST_CASE("beam search input validation") {
  const auto scorer = hashed_scorer(1, 3);
  CHECK_THROWS_AS(beam_search(scorer, {.beam_size = 0}, 2), UsageError);
  CHECK_THROWS_AS(beam_search(scorer, {.beam_size = 2, .length_penalty = -1.0}, 2), UsageError);
  CHECK(beam_search(scorer, {.beam_size = 2, .length_penalty = 1.0, .max_len = 0}, 2).tokens.empty());
}

TEST_CASE("generation strips end markers and respects the output limit") {
  const Model model = init_model(small_config(), 6);
  std::mt19937_64 rng(5);
  const Tensor memory = random_memory(rng, 5, 8);
  const auto ids = generate(memory, {.beam_size = 3, .length_penalty = 1.0, .max_len = 64}, model);
  CHECK(ids.size() <= model.config.decoder.max_output_len);
  for (int t : ids) {
    CHECK(t != Vocabulary::kEos);
    CHECK(t >= 0);
    CHECK(t < static_cast<int>(model.config.vocab_size));
  }
  CHECK(generate(memory, {.beam_size = 3, .length_penalty = 1.0, .max_len = 64}, model) == ids);
}
