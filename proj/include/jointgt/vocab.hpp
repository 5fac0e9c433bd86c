#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "jointgt/graph.hpp"

namespace jointgt {

class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kBos = 1;
  static constexpr int kEos = 2;
  static constexpr int kUnk = 3;
  static constexpr int kHead = 4;
  static constexpr int kRelation = 5;
  static constexpr int kTail = 6;
  static constexpr int kSep = 7;
  static constexpr int kMask = 8;
  static constexpr std::size_t kNumSpecials = 9;
  static constexpr std::array<std::string_view, kNumSpecials> kSpecials = {
      "<PAD>", "<BOS>", "<EOS>", "<UNK>", "<H>", "<R>", "<T>", "<SEP>", "<M>"};

  // Specials only.
  Vocabulary();
  // tokens[i] gets id i; the first nine must be the specials in order.
  explicit Vocabulary(std::vector<std::string> tokens);

  std::size_t size() const { return tokens_.size(); }
  bool contains(std::string_view token) const;
  // <UNK> for unknown tokens.
  int id(std::string_view token) const;
  const std::string& token(int id) const;
  const std::vector<std::string>& tokens() const { return tokens_; }

  std::vector<int> encode(std::span<const std::string> tokens) const;
  // Stops at <EOS> and drops <BOS>/<PAD>.
  std::vector<std::string> decode(std::span<const int> ids) const;

  // One token per line; line number (from 0) is the id.
  void save(const std::filesystem::path& path) const;
  static Vocabulary load(const std::filesystem::path& path);

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.tokens_ == b.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> ids_;
};

// Tokens of every linearized graph and text with count >= min_freq, ordered
// by descending count then lexicographically. Throws EmptyCorpus.
Vocabulary build_vocab(const std::vector<GraphTextPair>& corpus, std::size_t min_freq);

}  // namespace jointgt
