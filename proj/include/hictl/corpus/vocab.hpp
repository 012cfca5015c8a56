#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace hictl::corpus {

// Reserved ids, identical in every vocabulary.
inline constexpr int kPad = 0;
inline constexpr int kUnk = 1;
inline constexpr int kCls = 2;
inline constexpr int kSep = 3;
inline constexpr int kMask = 4;
inline constexpr int kBos = 5;
inline constexpr int kEos = 6;
inline constexpr int kNumSpecials = 7;

inline constexpr std::array<std::string_view, kNumSpecials> kSpecialTokens{
    "[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]", "[BOS]", "[EOS]"};

inline bool is_special(int id) { return id >= 0 && id < kNumSpecials; }

/// Shared token inventory of all languages; ids are dense from 0 with the
/// specials first.
class Vocabulary {
 public:
  Vocabulary();

  /// Specials followed by `words` in the given order. Words must be unique
  /// and must not spell a special token.
  static Vocabulary from_words(std::span<const std::string> words);

  int size() const { return static_cast<int>(tokens_.size()); }
  int word_count() const { return size() - kNumSpecials; }

  std::optional<int> find(std::string_view token) const;
  /// Id of a raw-text token; unknown words and special spellings map to [UNK].
  int id(std::string_view token) const;
  const std::string& token(int id) const;
  const std::vector<std::string>& tokens() const { return tokens_; }

  /// Whitespace tokenisation of raw text.
  std::vector<int> encode(std::string_view text) const;
  /// Space-joined tokens, dropping [PAD], [BOS] and [EOS].
  std::string decode(std::span<const int> ids) const;

  bool operator==(const Vocabulary& other) const { return tokens_ == other.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

std::vector<std::string_view> split_whitespace(std::string_view text);

/// Counts whitespace tokens over every file (both sides of tab-separated
/// lines) and keeps types with count >= min_count, ordered by count
/// descending, then lexicographically.
Vocabulary build_vocab(std::span<const std::filesystem::path> corpus_paths, int min_count);

}  // namespace hictl::corpus
