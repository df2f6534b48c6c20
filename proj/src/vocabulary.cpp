#include <algorithm>
#include <map>

#include "querc/errors.hpp"
#include "querc/random.hpp"
#include "querc/text_pipeline.hpp"

namespace querc {

nlohmann::json TextOptions::to_json() const {
  return {{"normalize_literals", tokenizer.normalize_literals},
          {"max_sequence_length", tokenizer.max_sequence_length},
          {"min_count", min_count}};
}

TextOptions TextOptions::from_json(const nlohmann::json& j) {
  TextOptions t;
  t.tokenizer.normalize_literals = j.at("normalize_literals").get<bool>();
  t.tokenizer.max_sequence_length = j.at("max_sequence_length").get<std::size_t>();
  t.min_count = j.at("min_count").get<std::size_t>();
  return t;
}

Vocabulary::Vocabulary() : tokens_{"<unk>", "<sos>", "<eos>", "<pad>"}, frequencies_(kSpecialCount, 0) {
  index();
}

void Vocabulary::index() {
  ids_.clear();
  ids_.reserve(tokens_.size());
  for (std::size_t i = 0; i < tokens_.size(); ++i) ids_.emplace(tokens_[i], static_cast<TokenId>(i));
}

Vocabulary Vocabulary::build(std::span<const TokenSequence> corpus, std::size_t min_count) {
  if (corpus.empty()) throw Error("cannot build a vocabulary from an empty corpus");
  if (min_count == 0) throw Error("min_count must be >= 1");
  std::map<std::string, std::uint64_t, std::less<>> counts;
  for (const auto& seq : corpus) {
    for (const auto& t : seq.tokens) ++counts[t];
  }
  Vocabulary v;
  std::vector<std::pair<std::string, std::uint64_t>> kept;
  for (auto& [tok, n] : counts) {
    // Specials are never regular tokens, even if some input spells them.
    if (v.ids_.contains(tok) || n < min_count) {
      v.frequencies_[kUnk] += n;
      continue;
    }
    kept.emplace_back(tok, n);
  }
  std::stable_sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  for (auto& [tok, n] : kept) {
    v.tokens_.push_back(tok);
    v.frequencies_.push_back(n);
  }
  v.index();
  return v;
}

Vocabulary Vocabulary::from_table(const StringTable& table) {
  if (table.entries.size() < kSpecialCount || table.counts.size() != table.entries.size()) {
    throw FormatError("vocabulary table is malformed");
  }
  Vocabulary v;
  for (std::size_t i = 0; i < kSpecialCount; ++i) {
    if (table.entries[i] != v.tokens_[i]) throw FormatError("vocabulary specials out of place");
  }
  v.tokens_ = table.entries;
  v.frequencies_ = table.counts;
  v.index();
  if (v.ids_.size() != v.tokens_.size()) throw FormatError("vocabulary has duplicate tokens");
  return v;
}

StringTable Vocabulary::to_table() const { return {tokens_, frequencies_}; }

TokenId Vocabulary::id(std::string_view token) const {
  auto it = ids_.find(std::string(token));
  return it == ids_.end() ? kUnk : it->second;
}

std::vector<TokenId> Vocabulary::encode(const TokenSequence& seq) const {
  std::vector<TokenId> out;
  out.reserve(seq.tokens.size());
  for (const auto& t : seq.tokens) out.push_back(id(t));
  return out;
}

std::uint64_t corpus_fingerprint(std::span<const std::vector<TokenId>> corpus) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& doc : corpus) {
    for (TokenId id : doc) {
      h = fnv1a({reinterpret_cast<const char*>(&id), sizeof(id)}, h);
    }
    const TokenId sep = 0xffffffffU;
    h = fnv1a({reinterpret_cast<const char*>(&sep), sizeof(sep)}, h);
  }
  return h;
}

}  // namespace querc
