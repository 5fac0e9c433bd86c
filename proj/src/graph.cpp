#include "jointgt/graph.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>

#include <json.hpp>

#include "jointgt/errors.hpp"

namespace jointgt {

using json = nlohmann::json;

void KnowledgeGraph::validate() const {
  if (entities.empty()) throw IndexError("knowledge graph has no entities");
  if (relations.empty()) throw GraphHasNoTriples();
  for (const auto& [key, rel] : relations) {
    if (key.first >= entities.size() || key.second >= entities.size()) {
      throw IndexError("relation (" + std::to_string(key.first + 1) + ", " +
                       std::to_string(key.second + 1) + ") references a missing entity");
    }
  }
  std::vector<bool> used(entities.size(), false);
  for (const auto& [key, rel] : relations) used[key.first] = used[key.second] = true;
  for (std::size_t i = 0; i < used.size(); ++i) {
    if (!used[i]) throw IndexError("entity " + std::to_string(i + 1) + " appears in no triple");
  }
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char ch : text) {
    if (std::isspace(static_cast<unsigned char>(ch))) {
      if (!current.empty()) tokens.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

LinearizedGraph linearize(const KnowledgeGraph& graph) {
  graph.validate();
  LinearizedGraph lin;
  lin.entity_positions.resize(graph.num_entities());

  auto emit_unit = [&lin](const std::string& surface, std::vector<std::size_t>& positions) {
    for (auto& tok : tokenize(surface)) {
      positions.push_back(lin.tokens.size());
      lin.tokens.push_back(std::move(tok));
    }
  };

  for (const auto& [key, rel] : graph.relations) {
    lin.tokens.emplace_back(kHeadMarker);
    emit_unit(graph.entities[key.first], lin.entity_positions[key.first]);
    lin.tokens.emplace_back(kRelationMarker);
    emit_unit(rel, lin.relation_positions[key]);
    lin.tokens.emplace_back(kTailMarker);
    emit_unit(graph.entities[key.second], lin.entity_positions[key.second]);
  }
  for (auto& positions : lin.entity_positions) std::sort(positions.begin(), positions.end());
  return lin;
}

std::vector<GraphUnit> unit_sequence(const KnowledgeGraph& graph) {
  std::vector<GraphUnit> units;
  units.reserve(graph.num_entities() + graph.num_relations());
  for (std::size_t i = 0; i < graph.num_entities(); ++i) units.push_back(GraphUnit::entity(i));
  for (const auto& [key, rel] : graph.relations) {
    units.push_back(GraphUnit::relation(key.first, key.second));
  }
  return units;
}

std::map<std::size_t, std::vector<std::size_t>> match_mentions(const KnowledgeGraph& graph,
                                                               const std::vector<std::string>& text) {
  std::map<std::size_t, std::vector<std::size_t>> mentions;
  for (std::size_t e = 0; e < graph.num_entities(); ++e) {
    const auto needle = tokenize(graph.entities[e]);
    if (needle.empty() || needle.size() > text.size()) continue;
    std::set<std::size_t> hits;
    for (std::size_t start = 0; start + needle.size() <= text.size(); ++start) {
      if (std::equal(needle.begin(), needle.end(), text.begin() + start)) {
        for (std::size_t k = 0; k < needle.size(); ++k) hits.insert(start + k);
      }
    }
    if (!hits.empty()) mentions[e].assign(hits.begin(), hits.end());
  }
  return mentions;
}

GraphTextPair parse_corpus_line(std::string_view line, std::size_t line_number, TextField text_field) {
  json record;
  try {
    record = json::parse(line);
  } catch (const json::parse_error& e) {
    throw CorpusParseError(line_number, std::string("invalid JSON: ") + e.what());
  }
  auto fail = [line_number](const std::string& what) { return CorpusParseError(line_number, what); };
  if (!record.is_object()) throw fail("record is not a JSON object");

  GraphTextPair pair;
  try {
    const auto& entities = record.at("entities");
    if (!entities.is_array() || entities.empty()) throw fail("'entities' must be a non-empty array");
    for (const auto& e : entities) {
      auto surface = e.get<std::string>();
      if (tokenize(surface).empty()) throw fail("entity with empty surface form");
      pair.graph.entities.push_back(std::move(surface));
    }

    const auto& triples = record.at("triples");
    if (!triples.is_array()) throw fail("'triples' must be an array");
    if (triples.empty()) throw fail("graph has no triples");
    const auto count = static_cast<long long>(pair.graph.entities.size());
    for (const auto& t : triples) {
      if (!t.is_array() || t.size() != 3) throw fail("triple must be [head, relation, tail]");
      const auto head = t[0].get<long long>();
      const auto tail = t[2].get<long long>();
      auto rel = t[1].get<std::string>();
      if (head < 1 || head > count || tail < 1 || tail > count) {
        throw fail("triple references entity index " + std::to_string(head < 1 || head > count ? head : tail) +
                   " but only " + std::to_string(count) + " entities exist");
      }
      if (tokenize(rel).empty()) throw fail("relation with empty surface form");
      RelationKey key{static_cast<std::size_t>(head - 1), static_cast<std::size_t>(tail - 1)};
      if (!pair.graph.relations.emplace(key, std::move(rel)).second) {
        throw fail("duplicate relation for entity pair (" + std::to_string(head) + ", " +
                   std::to_string(tail) + ")");
      }
    }

    try {
      pair.graph.validate();
    } catch (const Error& e) {
      throw fail(e.what());
    }

    if (text_field == TextField::kIgnored) return pair;
    pair.text = tokenize(record.at("text").get<std::string>());
    if (pair.text.empty()) throw fail("empty text");

    if (record.contains("mentions")) {
      const auto& mentions = record.at("mentions");
      if (!mentions.is_object()) throw fail("'mentions' must be an object");
      for (const auto& [key, positions] : mentions.items()) {
        std::size_t consumed = 0;
        long long entity = 0;
        try {
          entity = std::stoll(key, &consumed);
        } catch (const std::exception&) {
          consumed = 0;
        }
        if (consumed != key.size() || entity < 1 || entity > count) {
          throw fail("mention key '" + key + "' is not a valid entity index");
        }
        std::set<std::size_t> unique;
        for (const auto& p : positions) {
          const auto pos = p.get<long long>();
          if (pos < 1 || pos > static_cast<long long>(pair.text.size())) {
            throw fail("mention position " + std::to_string(pos) + " outside text of " +
                       std::to_string(pair.text.size()) + " tokens");
          }
          unique.insert(static_cast<std::size_t>(pos - 1));
        }
        if (!unique.empty()) {
          pair.entity_mentions[static_cast<std::size_t>(entity - 1)].assign(unique.begin(), unique.end());
        }
      }
    } else {
      pair.entity_mentions = match_mentions(pair.graph, pair.text);
    }
  } catch (const json::exception& e) {
    throw fail(std::string("malformed record: ") + e.what());
  }
  return pair;
}

std::vector<GraphTextPair> load_corpus(const std::filesystem::path& path, TextField text_field) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open corpus file " + path.string());
  std::vector<GraphTextPair> corpus;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (tokenize(line).empty()) continue;
    corpus.push_back(parse_corpus_line(line, line_number, text_field));
  }
  return corpus;
}

std::string to_corpus_line(const GraphTextPair& pair) {
  json record;
  record["entities"] = pair.graph.entities;
  json triples = json::array();
  for (const auto& [key, rel] : pair.graph.relations) {
    triples.push_back(json::array({key.first + 1, rel, key.second + 1}));
  }
  record["triples"] = std::move(triples);
  std::string text;
  for (const auto& tok : pair.text) {
    if (!text.empty()) text.push_back(' ');
    text += tok;
  }
  record["text"] = text;
  json mentions = json::object();
  for (const auto& [entity, positions] : pair.entity_mentions) {
    json arr = json::array();
    for (std::size_t p : positions) arr.push_back(p + 1);
    mentions[std::to_string(entity + 1)] = std::move(arr);
  }
  record["mentions"] = std::move(mentions);
  return record.dump();
}

void write_corpus(const std::filesystem::path& path, const std::vector<GraphTextPair>& corpus) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write corpus file " + path.string());
  for (const auto& pair : corpus) out << to_corpus_line(pair) << '\n';
}

}  // namespace jointgt
