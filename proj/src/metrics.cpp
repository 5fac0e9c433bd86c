#include "jointgt/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "jointgt/errors.hpp"

namespace jointgt {

std::size_t lcs_length(const Sentence& a, const Sentence& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double rouge_l(const Sentence& hypothesis, const Sentence& reference) {
  if (hypothesis.empty() || reference.empty()) throw EvalError("ROUGE-L needs non-empty sentences");
  const auto lcs = static_cast<double>(lcs_length(hypothesis, reference));
  if (lcs == 0.0) return 0.0;
  const double precision = lcs / static_cast<double>(hypothesis.size());
  const double recall = lcs / static_cast<double>(reference.size());
  return 100.0 * 2.0 * precision * recall / (precision + recall);
}

double rouge_l(const Sentence& hypothesis, const std::vector<Sentence>& references) {
  if (references.empty()) throw EvalError("ROUGE-L needs at least one reference");
  double best = 0.0;
  for (const auto& ref : references) best = std::max(best, rouge_l(hypothesis, ref));
  return best;
}

namespace {

using NgramCounts = std::map<std::vector<std::string>, std::size_t>;

NgramCounts count_ngrams(const Sentence& s, std::size_t n) {
  NgramCounts counts;
  if (s.size() < n) return counts;
  for (std::size_t i = 0; i + n <= s.size(); ++i) ++counts[Sentence(s.begin() + i, s.begin() + i + n)];
  return counts;
}

}  // namespace

BleuStats corpus_bleu_stats(const std::vector<Sentence>& hypotheses,
                            const std::vector<std::vector<Sentence>>& references, std::size_t max_n) {
  if (hypotheses.size() != references.size()) {
    throw EvalError("BLEU: " + std::to_string(hypotheses.size()) + " hypotheses but " +
                    std::to_string(references.size()) + " references");
  }
  if (max_n == 0) throw EvalError("BLEU: max_n must be positive");
  std::vector<double> matches(max_n, 0.0), totals(max_n, 0.0);
  BleuStats stats;
  for (std::size_t k = 0; k < hypotheses.size(); ++k) {
    const Sentence& hyp = hypotheses[k];
    const auto& refs = references[k];
    if (refs.empty()) throw EvalError("BLEU: instance " + std::to_string(k) + " has no reference");
    stats.hypothesis_length += hyp.size();

    std::size_t closest = refs[0].size();
    for (const auto& ref : refs) {
      const auto diff = [&](std::size_t len) {
        return len > hyp.size() ? len - hyp.size() : hyp.size() - len;
      };
      if (diff(ref.size()) < diff(closest) || (diff(ref.size()) == diff(closest) && ref.size() < closest)) {
        closest = ref.size();
      }
    }
    stats.reference_length += closest;

    for (std::size_t n = 1; n <= max_n; ++n) {
      const NgramCounts hyp_counts = count_ngrams(hyp, n);
      NgramCounts max_ref;
      for (const auto& ref : refs) {
        for (const auto& [gram, c] : count_ngrams(ref, n)) max_ref[gram] = std::max(max_ref[gram], c);
      }
      for (const auto& [gram, c] : hyp_counts) {
        totals[n - 1] += static_cast<double>(c);
        auto it = max_ref.find(gram);
        if (it != max_ref.end()) matches[n - 1] += static_cast<double>(std::min(c, it->second));
      }
    }
  }

  if (stats.hypothesis_length == 0) return stats;
  double log_sum = 0.0;
  std::size_t orders = 0;
  for (std::size_t n = 0; n < max_n; ++n) {
    if (totals[n] == 0.0) continue;
    const double p = (matches[n] == 0.0 ? 1e-9 : matches[n]) / totals[n];
    stats.precisions.push_back(p);
    log_sum += std::log(p);
    ++orders;
  }
  const double c = static_cast<double>(stats.hypothesis_length);
  const double r = static_cast<double>(stats.reference_length);
  stats.brevity_penalty = c > r ? 1.0 : std::exp(1.0 - r / c);
  stats.score = 100.0 * stats.brevity_penalty * std::exp(log_sum / static_cast<double>(orders));
  return stats;
}

double corpus_bleu(const std::vector<Sentence>& hypotheses, const std::vector<std::vector<Sentence>>& references,
                   std::size_t max_n) {
  return corpus_bleu_stats(hypotheses, references, max_n).score;
}

double corpus_bleu(const std::vector<Sentence>& hypotheses, const std::vector<Sentence>& references,
                   std::size_t max_n) {
  std::vector<std::vector<Sentence>> wrapped;
  wrapped.reserve(references.size());
  for (const auto& r : references) wrapped.push_back({r});
  return corpus_bleu(hypotheses, wrapped, max_n);
}

EvalReport evaluate(const std::vector<Sentence>& hypotheses, const std::vector<Sentence>& references) {
  if (hypotheses.size() != references.size()) {
    throw EvalError(std::to_string(hypotheses.size()) + " hypotheses but " + std::to_string(references.size()) +
                    " references");
  }
  EvalReport report;
  std::vector<std::vector<Sentence>> wrapped;
  for (const auto& r : references) wrapped.push_back({r});
  report.bleu_stats = corpus_bleu_stats(hypotheses, wrapped);
  report.bleu = report.bleu_stats.score;
  double total = 0.0;
  for (std::size_t k = 0; k < hypotheses.size(); ++k) {
    EvalRecord rec;
    rec.rouge_l = rouge_l(hypotheses[k], references[k]);
    total += rec.rouge_l;
    report.records.push_back(rec);
  }
  report.rouge_l_f = hypotheses.empty() ? 0.0 : total / static_cast<double>(hypotheses.size());
  return report;
}

nlohmann::json to_json(const EvalReport& report) {
  nlohmann::json per_example = nlohmann::json::array();
  for (std::size_t k = 0; k < report.records.size(); ++k) {
    per_example.push_back({{"index", k + 1}, {"rouge_l", report.records[k].rouge_l}});
  }
  return {{"bleu", report.bleu},
          {"rouge_l", report.rouge_l_f},
          {"bleu_precisions", report.bleu_stats.precisions},
          {"brevity_penalty", report.bleu_stats.brevity_penalty},
          {"hypothesis_length", report.bleu_stats.hypothesis_length},
          {"reference_length", report.bleu_stats.reference_length},
          {"examples", per_example}};
}

}  // namespace jointgt
