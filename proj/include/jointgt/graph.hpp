#pragma once

// Knowledge graphs, their triple-list linearization, and corpus files.
//
// Indices are 0-based in memory. The corpus file format uses 1-based entity
// indices and text positions; conversion happens in the loader.

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace jointgt {

// (head entity, tail entity)
using RelationKey = std::pair<std::size_t, std::size_t>;

struct KnowledgeGraph {
  std::vector<std::string> entities;
  // Ordered by (head, tail), which is also the emission order.
  std::map<RelationKey, std::string> relations;

  std::size_t num_entities() const { return entities.size(); }
  std::size_t num_relations() const { return relations.size(); }

  // Throws GraphHasNoTriples, or IndexError for a dangling index or an
  // entity that appears in no triple.
  void validate() const;
};

struct LinearizedGraph {
  std::vector<std::string> tokens;
  // entity_positions[i] = sorted token positions of entity i, over every
  // triple it appears in.
  std::vector<std::vector<std::size_t>> entity_positions;
  std::map<RelationKey, std::vector<std::size_t>> relation_positions;

  std::size_t size() const { return tokens.size(); }
};

enum class UnitKind { kEntity, kRelation };

struct GraphUnit {
  UnitKind kind;
  std::size_t head;  // entity index for kEntity
  std::size_t tail;  // equal to head for kEntity

  static GraphUnit entity(std::size_t i) { return {UnitKind::kEntity, i, i}; }
  static GraphUnit relation(std::size_t i, std::size_t j) { return {UnitKind::kRelation, i, j}; }
  friend bool operator==(const GraphUnit&, const GraphUnit&) = default;
};

struct GraphTextPair {
  KnowledgeGraph graph;
  std::vector<std::string> text;
  // entity index -> text token positions
  std::map<std::size_t, std::vector<std::size_t>> entity_mentions;
};

inline constexpr std::string_view kHeadMarker = "<H>";
inline constexpr std::string_view kRelationMarker = "<R>";
inline constexpr std::string_view kTailMarker = "<T>";

// Splits on whitespace and lower-cases ASCII letters.
std::vector<std::string> tokenize(std::string_view text);

LinearizedGraph linearize(const KnowledgeGraph& graph);

// Entities in index order, then relations in ascending (head, tail) order.
std::vector<GraphUnit> unit_sequence(const KnowledgeGraph& graph);

// Positions of every exact occurrence of each entity's token sequence in
// the text. Entities that never occur are omitted.
std::map<std::size_t, std::vector<std::size_t>> match_mentions(const KnowledgeGraph& graph,
                                                               const std::vector<std::string>& text);

// kIgnored leaves text and mentions empty (generation inputs).
enum class TextField { kRequired, kIgnored };

// One JSON record; line_number is used in CorpusParseError.
GraphTextPair parse_corpus_line(std::string_view line, std::size_t line_number,
                                TextField text_field = TextField::kRequired);
std::vector<GraphTextPair> load_corpus(const std::filesystem::path& path,
                                       TextField text_field = TextField::kRequired);

// Inverse of parse_corpus_line (mentions are written explicitly).
std::string to_corpus_line(const GraphTextPair& pair);
void write_corpus(const std::filesystem::path& path, const std::vector<GraphTextPair>& corpus);

}  // namespace jointgt
