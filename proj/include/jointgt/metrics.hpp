#pragma once

// Corpus BLEU and ROUGE-L over whitespace-tokenized sentences. Scores are
// percentages in [0, 100].

#include <cstddef>
#include <string>
#include <vector>

#include <json.hpp>

namespace jointgt {

using Sentence = std::vector<std::string>;

std::size_t lcs_length(const Sentence& a, const Sentence& b);

// F1 of LCS precision and recall, best over references, x100.
// Throws EvalError for an empty hypothesis or reference.
double rouge_l(const Sentence& hypothesis, const std::vector<Sentence>& references);
double rouge_l(const Sentence& hypothesis, const Sentence& reference);

struct BleuStats {
  std::vector<double> precisions;  // modified n-gram precision per order
  double brevity_penalty = 1.0;
  std::size_t hypothesis_length = 0;
  std::size_t reference_length = 0;
  double score = 0.0;  // x100
};

// Clipped counts are taken against all references of an instance; the
// reference length is the one closest to the hypothesis (shorter on ties).
// Orders with no hypothesis n-grams anywhere in the corpus are left out of
// the geometric mean, and zero match counts get 1e-9 added.
BleuStats corpus_bleu_stats(const std::vector<Sentence>& hypotheses,
                            const std::vector<std::vector<Sentence>>& references, std::size_t max_n = 4);
double corpus_bleu(const std::vector<Sentence>& hypotheses, const std::vector<std::vector<Sentence>>& references,
                   std::size_t max_n = 4);
double corpus_bleu(const std::vector<Sentence>& hypotheses, const std::vector<Sentence>& references,
                   std::size_t max_n = 4);

struct EvalRecord {
  double rouge_l = 0.0;
};

struct EvalReport {
  double bleu = 0.0;
  double rouge_l_f = 0.0;
  BleuStats bleu_stats;
  std::vector<EvalRecord> records;
};

EvalReport evaluate(const std::vector<Sentence>& hypotheses, const std::vector<Sentence>& references);
nlohmann::json to_json(const EvalReport& report);

}  // namespace jointgt
