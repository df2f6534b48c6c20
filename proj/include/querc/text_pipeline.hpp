#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "querc/model_io.hpp"

namespace querc {

inline constexpr std::string_view kNumberToken = "<num>";
inline constexpr std::string_view kStringToken = "<str>";

struct TokenizerOptions {
  bool normalize_literals = true;
  std::size_t max_sequence_length = 256;
};

struct TokenSequence {
  std::vector<std::string> tokens;
  // Token count before truncation.
  std::size_t source_length = 0;

  std::size_t size() const { return tokens.size(); }
  bool empty() const { return tokens.empty(); }
};

// Lexical, dialect-agnostic split of SQL text. Comments are stripped, bare
// words lowercased, punctuation emitted as tokens, quoted identifiers keep
// their case. Bytes that fit no rule come out as opaque tokens.
TokenSequence tokenize(std::string_view query_text, const TokenizerOptions& options = {});

using TokenId = std::uint32_t;

// Tokenizer settings plus the vocabulary cutoff; echoed into model metadata.
struct TextOptions {
  TokenizerOptions tokenizer;
  std::size_t min_count = 2;

  nlohmann::json to_json() const;
  static TextOptions from_json(const nlohmann::json& j);
};

// Dense token <-> id map. Ids 0..3 are the specials; the remaining tokens
// are ordered by descending frequency, ties lexicographic.
class Vocabulary {
 public:
  static constexpr TokenId kUnk = 0;
  static constexpr TokenId kSos = 1;
  static constexpr TokenId kEos = 2;
  static constexpr TokenId kPad = 3;
  static constexpr std::size_t kSpecialCount = 4;

  Vocabulary();

  // Throws Error on an empty corpus or min_count == 0. The frequency of UNK
  // is the number of corpus occurrences that fell below the cutoff.
  static Vocabulary build(std::span<const TokenSequence> corpus, std::size_t min_count);

  static Vocabulary from_table(const StringTable& table);
  StringTable to_table() const;

  std::size_t size() const { return tokens_.size(); }
  TokenId id(std::string_view token) const;
  const std::string& token(TokenId id) const { return tokens_.at(id); }
  std::uint64_t frequency(TokenId id) const { return frequencies_.at(id); }

  std::vector<TokenId> encode(const TokenSequence& seq) const;

  bool operator==(const Vocabulary& other) const {
    return tokens_ == other.tokens_ && frequencies_ == other.frequencies_;
  }

 private:
  void index();

  std::vector<std::string> tokens_;
  std::vector<std::uint64_t> frequencies_;
  std::unordered_map<std::string, TokenId> ids_;
};

// Stable 64-bit digest of a token-id corpus, stored in model metadata.
std::uint64_t corpus_fingerprint(std::span<const std::vector<TokenId>> corpus);

}  // namespace querc
