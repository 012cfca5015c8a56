#include "hictl/corpus/corpus.hpp"

#include <fstream>

#include "hictl/error.hpp"

namespace hictl::corpus {

std::vector<TextPair> read_parallel(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read parallel corpus " + path.string());
  std::vector<TextPair> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (split_whitespace(line).empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": expected source<TAB>target");
    }
    out.push_back({line.substr(0, tab), line.substr(tab + 1)});
  }
  return out;
}

void write_parallel(const std::filesystem::path& path, std::span<const TextPair> pairs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  for (const auto& p : pairs) out << p.source << '\t' << p.target << '\n';
}

std::vector<std::string> read_monolingual(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read corpus " + path.string());
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!split_whitespace(line).empty()) out.push_back(line);
  }
  return out;
}

void write_lines(const std::filesystem::path& path, std::span<const std::string> lines) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  for (const auto& l : lines) out << l << '\n';
}

MaskedSequence apply_masking(std::span<const int> sequence, double mask_rate, std::uint64_t seed,
                             int vocab_size) {
  std::vector<int> eligible;
  for (std::size_t i = 0; i < sequence.size(); ++i) {
    if (!is_special(sequence[i])) eligible.push_back(static_cast<int>(i));
  }
  if (eligible.empty()) throw DataError("apply_masking: sequence has no maskable position");
  MaskedSequence out{{sequence.begin(), sequence.end()}, {}, {}};
  const std::size_t k = selected_count(mask_rate, eligible.size());
  if (k == 0) return out;
  num::Rng rng(seed);
  for (std::size_t i = 0; i < k; ++i) std::swap(eligible[i], eligible[i + rng.below(eligible.size() - i)]);
  eligible.resize(k);
  std::sort(eligible.begin(), eligible.end());
  const int words = vocab_size - kNumSpecials;
  for (int pos : eligible) {
    const int original = out.tokens[static_cast<std::size_t>(pos)];
    const double u = rng.uniform();
    if (u < 0.8) {
      out.tokens[static_cast<std::size_t>(pos)] = kMask;
    } else if (u < 0.9 && words > 0) {
      out.tokens[static_cast<std::size_t>(pos)] = kNumSpecials + static_cast<int>(rng.below(static_cast<std::uint64_t>(words)));
    }
    out.positions.push_back(pos);
    out.labels.push_back(original);
  }
  return out;
}

MappingKind parse_mapping_kind(std::string_view name) {
  if (name == "identity") return MappingKind::kIdentity;
  if (name == "map" || name == "bijective-map") return MappingKind::kBijective;
  if (name == "map+reverse") return MappingKind::kBijectiveReverse;
  throw ConfigError("unknown mapping kind '" + std::string(name) + "' (identity, map, map+reverse)");
}

std::string_view to_string(MappingKind kind) {
  switch (kind) {
    case MappingKind::kIdentity: return "identity";
    case MappingKind::kBijective: return "map";
    case MappingKind::kBijectiveReverse: return "map+reverse";
  }
  return "?";
}

std::vector<std::string> translate_tokens(std::span<const std::string> tokens,
                                          const std::vector<std::string>& from_words,
                                          const std::vector<std::string>& to_words,
                                          const std::vector<int>& mapping, bool reverse) {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) {
    auto it = std::find(from_words.begin(), from_words.end(), t);
    if (it == from_words.end()) throw DataError("translate_tokens: '" + t + "' has no mapping");
    out.push_back(to_words[static_cast<std::size_t>(mapping[static_cast<std::size_t>(it - from_words.begin())])]);
  }
  if (reverse) std::reverse(out.begin(), out.end());
  return out;
}

SynthCorpus synth_bilingual(int vocab_size, int n_pairs, MappingKind kind, std::uint64_t seed,
                            const SynthOptions& opts) {
  if (vocab_size <= kNumSpecials + 1) throw ConfigError("synth_bilingual: vocab_size must exceed the specials");
  if (n_pairs < 0 || opts.min_len < 1 || opts.max_len < opts.min_len) {
    throw ConfigError("synth_bilingual: invalid pair count or length range");
  }
  const int available = vocab_size - kNumSpecials;
  const int k = kind == MappingKind::kIdentity ? available : available / 2;
  std::vector<std::string> a_words, b_words;
  for (int i = 0; i < k; ++i) a_words.push_back("a" + std::to_string(i));
  if (kind != MappingKind::kIdentity) {
    for (int i = 0; i < k; ++i) b_words.push_back("b" + std::to_string(i));
  }

  num::Rng rng(num::derive_seed(seed, {0x5e9d}));
  std::vector<int> mapping(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) mapping[static_cast<std::size_t>(i)] = i;
  if (kind != MappingKind::kIdentity) {
    for (int i = k - 1; i > 0; --i) std::swap(mapping[static_cast<std::size_t>(i)], mapping[rng.below(static_cast<std::uint64_t>(i + 1))]);
  }

  SynthCorpus out;
  std::vector<std::string> words = a_words;
  words.insert(words.end(), b_words.begin(), b_words.end());
  out.vocab = Vocabulary::from_words(words);
  out.mapping = mapping;
  out.pairs.reserve(static_cast<std::size_t>(n_pairs));
  const auto span_len = static_cast<std::uint64_t>(opts.max_len - opts.min_len + 1);
  for (int p = 0; p < n_pairs; ++p) {
    const int len = opts.min_len + static_cast<int>(rng.below(span_len));
    std::vector<std::string> x;
    for (int t = 0; t < len; ++t) x.push_back(a_words[rng.below(static_cast<std::uint64_t>(k))]);
    std::vector<std::string> y =
        kind == MappingKind::kIdentity
            ? x
            : translate_tokens(x, a_words, b_words, mapping, kind == MappingKind::kBijectiveReverse);
    auto join = [](const std::vector<std::string>& toks) {
      std::string s;
      for (const auto& t : toks) s += (s.empty() ? "" : " ") + t;
      return s;
    };
    out.pairs.push_back({join(x), join(y)});
  }
  return out;
}

ParallelSource::ParallelSource(std::span<const TextPair> pairs, const Vocabulary& vocab) {
  pairs_.reserve(pairs.size());
  for (const auto& p : pairs) {
    SentencePair sp{vocab.encode(p.source), vocab.encode(p.target), true};
    if (sp.x.empty() || sp.y.empty()) throw DataError("parallel pair with an empty side");
    pairs_.push_back(std::move(sp));
  }
}

SentencePair ParallelSource::pair(std::size_t index, std::uint64_t) const { return pairs_.at(index); }

MonolingualSource::MonolingualSource(std::vector<std::vector<int>> sentences, double perturb_rate)
    : sentences_(std::move(sentences)), perturb_rate_(perturb_rate) {
  for (const auto& s : sentences_) {
    if (s.empty()) throw DataError("empty monolingual sentence");
  }
}

SentencePair MonolingualSource::pair(std::size_t index, std::uint64_t seed) const {
  const auto& x = sentences_.at(index);
  return {x, perturb<int>(x, perturb_rate_, seed), false};
}

ConcatSource::ConcatSource(std::vector<std::shared_ptr<const PairSource>> parts) : parts_(std::move(parts)) {
  for (const auto& p : parts_) total_ += p->size();
}

SentencePair ConcatSource::pair(std::size_t index, std::uint64_t seed) const {
  for (const auto& p : parts_) {
    if (index < p->size()) return p->pair(index, seed);
    index -= p->size();
  }
  throw DataError("ConcatSource: index out of range");
}

}  // namespace hictl::corpus
