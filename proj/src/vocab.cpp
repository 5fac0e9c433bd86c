#include "jointgt/vocab.hpp"

#include <algorithm>
#include <fstream>
#include <map>

#include "jointgt/errors.hpp"

namespace jointgt {

Vocabulary::Vocabulary() : Vocabulary(std::vector<std::string>(kSpecials.begin(), kSpecials.end())) {}

Vocabulary::Vocabulary(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  if (tokens_.size() < kNumSpecials) throw Error("vocabulary is missing special tokens");
  for (std::size_t i = 0; i < kNumSpecials; ++i) {
    if (tokens_[i] != kSpecials[i]) {
      throw Error("vocabulary id " + std::to_string(i) + " must be " + std::string(kSpecials[i]));
    }
  }
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (!ids_.emplace(tokens_[i], static_cast<int>(i)).second) {
      throw Error("duplicate vocabulary token '" + tokens_[i] + "'");
    }
  }
}

bool Vocabulary::contains(std::string_view token) const { return ids_.count(std::string(token)) > 0; }

int Vocabulary::id(std::string_view token) const {
  auto it = ids_.find(std::string(token));
  return it == ids_.end() ? kUnk : it->second;
}

const std::string& Vocabulary::token(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
    throw IndexError("token id " + std::to_string(id) + " outside vocabulary");
  }
  return tokens_[static_cast<std::size_t>(id)];
}

std::vector<int> Vocabulary::encode(std::span<const std::string> tokens) const {
  std::vector<int> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(id(t));
  return ids;
}

std::vector<std::string> Vocabulary::decode(std::span<const int> ids) const {
  std::vector<std::string> out;
  for (int id : ids) {
    if (id == kEos) break;
    if (id == kBos || id == kPad) continue;
    out.push_back(token(id));
  }
  return out;
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw Error("cannot write vocabulary " + path.string());
  for (const auto& t : tokens_) out << t << '\n';
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open vocabulary " + path.string());
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) tokens.push_back(line);
  return Vocabulary(std::move(tokens));
}

Vocabulary build_vocab(const std::vector<GraphTextPair>& corpus, std::size_t min_freq) {
  if (corpus.empty()) throw EmptyCorpus();
  std::map<std::string, std::size_t> counts;
  for (const auto& pair : corpus) {
    for (const auto& t : linearize(pair.graph).tokens) ++counts[t];
    for (const auto& t : pair.text) ++counts[t];
  }
  std::vector<std::pair<std::string, std::size_t>> ranked;
  for (auto& [token, count] : counts) {
    const bool special = std::find(Vocabulary::kSpecials.begin(), Vocabulary::kSpecials.end(),
                                   token) != Vocabulary::kSpecials.end();
    if (!special && count >= min_freq) ranked.emplace_back(token, count);
  }
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> tokens(Vocabulary::kSpecials.begin(), Vocabulary::kSpecials.end());
  for (auto& [token, count] : ranked) tokens.push_back(std::move(token));
  return Vocabulary(std::move(tokens));
}

}  // namespace jointgt
