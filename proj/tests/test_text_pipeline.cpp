#include <gtest/gtest.h>

#include <algorithm>

#include "querc/errors.hpp"
#include "querc/text_pipeline.hpp"
#include "test_util.hpp"

namespace querc {
namespace {

using Tokens = std::vector<std::string>;

TokenSequence seq(Tokens t) {
  TokenSequence s;
  s.source_length = t.size();
  s.tokens = std::move(t);
  return s;
}

TEST(Tokenize, NormalizesNumbersAndCase) {
  EXPECT_EQ(tokenize("SELECT a FROM t WHERE x = 5").tokens,
            (Tokens{"select", "a", "from", "t", "where", "x", "=", "<num>"}));
}

TEST(Tokenize, NormalizesStrings) {
  EXPECT_EQ(tokenize("select * from T where n = 'bob'").tokens,
            (Tokens{"select", "*", "from", "t", "where", "n", "=", "<str>"}));
}

TEST(Tokenize, KeepsLiteralsWhenNormalizationIsOff) {
  TokenizerOptions o;
  o.normalize_literals = false;
  const auto t = tokenize("WHERE n = 'Bob''s' AND x >= 3.5e2", o).tokens;
  EXPECT_EQ(t, (Tokens{"where", "n", "=", "'Bob''s'", "and", "x", ">=", "3.5e2"}));
}

TEST(Tokenize, StripsCommentsAndKeepsQuotedIdentifiers) {
  const auto t = tokenize("SELECT \"MixedCase\", `Tick` -- trailing\n FROM /* block\n comment */ t").tokens;
  EXPECT_EQ(t, (Tokens{"select", "MixedCase", ",", "Tick", "from", "t"}));
}

TEST(Tokenize, TwoCharacterOperators) {
  EXPECT_EQ(tokenize("a<=b>=c<>d!=e||f::g==h->i").tokens,
            (Tokens{"a", "<=", "b", ">=", "c", "<>", "d", "!=", "e", "||", "f", "::", "g", "==", "h", "->", "i"}));
}

TEST(Tokenize, TruncatesAndRecordsSourceLength) {
  std::string text;
  for (int i = 0; i < 2000; ++i) text += "x ";
  const auto s = tokenize(text);
  EXPECT_EQ(s.size(), 256u);
  EXPECT_EQ(s.source_length, 2000u);
}

TEST(Tokenize, EmptyAndCommentOnlyInputs) {
  EXPECT_TRUE(tokenize("").empty());
  EXPECT_TRUE(tokenize("   -- nothing here").empty());
}

// Property: no empty tokens, bounded length, idempotent on its own joined output.
TEST(Tokenize, PropertyIdempotentAndWellFormed) {
  Rng rng(21);
  const std::vector<std::string> pieces = {"SELECT", "a", "Foo", "'x y'", "42", "3.14", "(", ")", ",", "<=",
                                           "\"Q\"",  "*", "--c\n", "/*k*/", "||", "é", "@", "$1", "  ", "\t"};
  TokenizerOptions o;
  o.max_sequence_length = 30;
  for (int trial = 0; trial < 300; ++trial) {
    std::string text;
    for (std::size_t n = rng.below(40); n > 0; --n) text += pieces[rng.below(pieces.size())] + " ";
    const auto s = tokenize(text, o);
    EXPECT_LE(s.size(), o.max_sequence_length);
    EXPECT_GE(s.source_length, s.size());
    for (const auto& t : s.tokens) EXPECT_FALSE(t.empty());
    if (s.source_length > s.size()) continue;
    std::string joined;
    for (const auto& t : s.tokens) {
      // Placeholders re-tokenize as words and punctuation; map them back to literals.
      if (t == "<num>") {
        joined += "7 ";
      } else if (t == "<str>") {
        joined += "'s' ";
      } else if (std::any_of(t.begin(), t.end(), [](unsigned char c) { return std::isupper(c); })) {
        joined += "\"" + t + "\" ";
      } else {
        joined += t + " ";
      }
    }
    EXPECT_EQ(tokenize(joined, o).tokens, s.tokens) << text;
  }
}

TEST(Vocabulary, CountsFrequencies) {
  const std::vector<TokenSequence> corpus = {seq({"a", "b", "a"})};
  const auto v = Vocabulary::build(corpus, 1);
  ASSERT_EQ(v.size(), 6u);
  EXPECT_EQ(v.token(Vocabulary::kUnk), "<unk>");
  EXPECT_EQ(v.token(4), "a");
  EXPECT_EQ(v.frequency(4), 2u);
  EXPECT_EQ(v.token(5), "b");
  EXPECT_EQ(v.frequency(5), 1u);
}

TEST(Vocabulary, CutoffExcludesRareTokens) {
  const std::vector<TokenSequence> corpus = {seq({"a", "b", "a"})};
  const auto v = Vocabulary::build(corpus, 2);
  EXPECT_EQ(v.size(), 5u);
  EXPECT_EQ(v.id("b"), Vocabulary::kUnk);
  EXPECT_EQ(v.frequency(Vocabulary::kUnk), 1u);
  for (TokenId id = Vocabulary::kSpecialCount; id < v.size(); ++id) EXPECT_GE(v.frequency(id), 2u);
}

TEST(Vocabulary, EqualFrequenciesTieLexicographically) {
  const std::vector<TokenSequence> corpus = {seq({"zeta", "alpha", "mid"})};
  const auto v = Vocabulary::build(corpus, 1);
  EXPECT_EQ(v.id("alpha"), 4u);
  EXPECT_EQ(v.id("mid"), 5u);
  EXPECT_EQ(v.id("zeta"), 6u);
}

TEST(Vocabulary, EncodeMapsUnknownsAndPreservesLength) {
  const std::vector<TokenSequence> corpus = {seq({"a", "b", "a", "b"})};
  const auto v = Vocabulary::build(corpus, 1);
  EXPECT_EQ(v.encode(seq({"a", "b"})), (std::vector<TokenId>{v.id("a"), v.id("b")}));
  EXPECT_EQ(v.encode(seq({"a", "zzz"})), (std::vector<TokenId>{v.id("a"), Vocabulary::kUnk}));
  EXPECT_TRUE(v.encode(seq({})).empty());
}

TEST(Vocabulary, RejectsDegenerateInputs) {
  EXPECT_THROW(Vocabulary::build({}, 1), Error);
  const std::vector<TokenSequence> corpus = {seq({"a"})};
  EXPECT_THROW(Vocabulary::build(corpus, 0), Error);
}

// Property: any record order gives the same map, and encode keeps lengths.
TEST(Vocabulary, PropertyOrderIndependent) {
  Rng rng(8);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<TokenSequence> corpus;
    for (std::size_t n = 1 + rng.below(12); n > 0; --n) {
      Tokens t;
      for (std::size_t k = rng.below(8); k > 0; --k) t.push_back(std::string(1, static_cast<char>('a' + rng.below(6))));
      corpus.push_back(seq(t));
    }
    const std::size_t min_count = 1 + rng.below(3);
    const auto v1 = Vocabulary::build(corpus, min_count);
    rng.shuffle(std::span(corpus));
    const auto v2 = Vocabulary::build(corpus, min_count);
    EXPECT_EQ(v1, v2);
    for (const auto& s : corpus) EXPECT_EQ(v1.encode(s).size(), s.size());
    EXPECT_EQ(Vocabulary::from_table(v1.to_table()), v1);
  }
}

}  // namespace
}  // namespace querc
