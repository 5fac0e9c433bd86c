#include "jointgt/masking.hpp"

namespace jointgt {
namespace {

bool draw(Rng& rng, double p) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  return unit(rng) < p;
}

}  // namespace

MaskedText mask_text(const GraphTextPair& pair, Rng& rng, double p_entity, double p_other) {
  const std::size_t n = pair.text.size();
  std::vector<bool> in_mention(n, false);
  for (const auto& [entity, positions] : pair.entity_mentions) {
    for (std::size_t p : positions) {
      if (p < n) in_mention[p] = true;
    }
  }

  MaskedText out;
  out.original = pair.text;
  out.masked.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.masked[i] = draw(rng, in_mention[i] ? p_entity : p_other);
    if (!out.masked[i]) {
      out.corrupted.push_back(pair.text[i]);
    } else if (i == 0 || !out.masked[i - 1]) {
      out.corrupted.emplace_back(kMaskToken);
    }
  }
  return out;
}

MaskedGraph mask_graph(const LinearizedGraph& lin, Rng& rng, double p_entity, double p_relation) {
  MaskedGraph out;
  out.original = lin.tokens;
  out.corrupted = lin.tokens;
  out.indicator.assign(lin.size(), false);

  auto blank = [&out](const std::vector<std::size_t>& positions) {
    for (std::size_t p : positions) {
      out.corrupted[p] = std::string(kMaskToken);
      out.indicator[p] = true;
    }
  };
  for (const auto& positions : lin.entity_positions) {
    const bool selected = draw(rng, p_entity);
    out.entity_selected.push_back(selected);
    if (selected) blank(positions);
  }
  for (const auto& [key, positions] : lin.relation_positions) {
    const bool selected = draw(rng, p_relation);
    out.relation_selected.push_back(selected);
    if (selected) blank(positions);
  }
  return out;
}

}  // namespace jointgt
