#include "hictl/corpus/vocab.hpp"

#include <algorithm>
#include <fstream>
#include <map>

#include "hictl/error.hpp"

namespace hictl::corpus {

namespace {

bool spells_special(std::string_view w) {
  return std::find(kSpecialTokens.begin(), kSpecialTokens.end(), w) != kSpecialTokens.end();
}

}  // namespace

Vocabulary::Vocabulary() {
  for (std::string_view s : kSpecialTokens) {
    index_.emplace(std::string(s), static_cast<int>(tokens_.size()));
    tokens_.emplace_back(s);
  }
}

Vocabulary Vocabulary::from_words(std::span<const std::string> words) {
  Vocabulary v;
  for (const auto& w : words) {
    if (w.empty() || spells_special(w)) throw DataError("invalid vocabulary word '" + w + "'");
    if (!v.index_.emplace(w, v.size()).second) throw DataError("duplicate vocabulary word '" + w + "'");
    v.tokens_.push_back(w);
  }
  return v;
}

std::optional<int> Vocabulary::find(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

int Vocabulary::id(std::string_view token) const {
  if (spells_special(token)) return kUnk;
  return find(token).value_or(kUnk);
}

const std::string& Vocabulary::token(int id) const {
  if (id < 0 || id >= size()) throw DataError("token id " + std::to_string(id) + " out of range");
  return tokens_[static_cast<std::size_t>(id)];
}

std::vector<int> Vocabulary::encode(std::string_view text) const {
  std::vector<int> ids;
  for (auto w : split_whitespace(text)) ids.push_back(id(w));
  return ids;
}

std::string Vocabulary::decode(std::span<const int> ids) const {
  std::string out;
  for (int id : ids) {
    if (id == kPad || id == kBos || id == kEos) continue;
    if (!out.empty()) out += ' ';
    out += token(id);
  }
  return out;
}

std::vector<std::string_view> split_whitespace(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; };
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    std::size_t j = i;
    while (j < text.size() && !is_space(text[j])) ++j;
    if (j > i) out.push_back(text.substr(i, j - i));
    i = j;
  }
  return out;
}

Vocabulary build_vocab(std::span<const std::filesystem::path> corpus_paths, int min_count) {
  if (corpus_paths.empty()) throw DataError("build_vocab: no corpus files given");
  std::map<std::string, long> counts;
  for (const auto& path : corpus_paths) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot read corpus file " + path.string());
    std::string line;
    while (std::getline(in, line)) {
      for (auto w : split_whitespace(line)) {
        if (!spells_special(w)) ++counts[std::string(w)];
      }
    }
  }
  if (counts.empty()) throw DataError("build_vocab: corpus contains no tokens");
  std::vector<std::pair<std::string, long>> kept;
  for (auto& [w, c] : counts) {
    if (c >= min_count) kept.emplace_back(w, c);
  }
  // std::map iteration is lexicographic, so a stable sort by count suffices.
  std::stable_sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> words;
  words.reserve(kept.size());
  for (auto& [w, c] : kept) words.push_back(w);
  return Vocabulary::from_words(words);
}

}  // namespace hictl::corpus
