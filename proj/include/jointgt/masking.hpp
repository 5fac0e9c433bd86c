#pragma once

// Corruption procedures for the two reconstruction objectives.

#include <random>
#include <string>
#include <vector>

#include "jointgt/graph.hpp"

namespace jointgt {

using Rng = std::mt19937_64;

inline constexpr std::string_view kMaskToken = "<M>";

struct MaskedText {
  std::vector<std::string> corrupted;  // runs of masked tokens merged into one <M>
  std::vector<std::string> original;
  std::vector<bool> masked;            // per original position
};

struct MaskedGraph {
  std::vector<std::string> corrupted;  // same length as original
  std::vector<std::string> original;
  std::vector<bool> indicator;         // true where corrupted holds <M>
  std::vector<bool> entity_selected;   // per entity
  std::vector<bool> relation_selected; // per relation, ascending (head, tail)
};

struct MaskingRates {
  double text_entity = 0.40;
  double text_other = 0.20;
  double graph_entity = 0.40;
  double graph_relation = 0.20;
};

// Each text token is masked independently: with p_entity if it lies inside
// an entity mention, p_other otherwise.
MaskedText mask_text(const GraphTextPair& pair, Rng& rng, double p_entity = 0.40,
                     double p_other = 0.20);

// Selects whole units (entities with p_entity, relations with p_relation)
// and replaces each of their tokens with <M>. Markers are never touched.
MaskedGraph mask_graph(const LinearizedGraph& lin, Rng& rng, double p_entity = 0.40,
                       double p_relation = 0.20);

}  // namespace jointgt
