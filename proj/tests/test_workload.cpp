#include <gtest/gtest.h>

#include <sstream>

#include "querc/advisor_sim.hpp"
#include "querc/errors.hpp"
#include "querc/log_io.hpp"
#include "test_util.hpp"

namespace querc {
namespace {

using testing::TempDir;

LogReadResult read_string(const std::string& text, const ReadOptions& options = {}) {
  std::istringstream in(text);
  return read_log(in, "memory", options);
}

TEST(ReadLog, MapsFieldsDirectly) {
  const auto r = read_string(R"({"query_text":"SELECT 1","labels":{"user":"u1"}})" "\n");
  ASSERT_EQ(r.log.size(), 1u);
  EXPECT_TRUE(r.rejected.empty());
  EXPECT_EQ(r.log.records[0].query_text, "SELECT 1");
  ASSERT_NE(r.log.records[0].label("user"), nullptr);
  EXPECT_EQ(*r.log.records[0].label("user"), "u1");
  EXPECT_FALSE(r.log.records[0].timestamp.has_value());
}

TEST(ReadLog, MissingQueryTextIsRejectedPerLine) {
  const auto r = read_string(
      R"({"labels":{"user":"u1"}})" "\n"
      R"({"query_text":"SELECT 2"})" "\n");
  ASSERT_EQ(r.rejected.size(), 1u);
  EXPECT_EQ(r.rejected[0].line, 1u);
  EXPECT_NE(r.rejected[0].reason.find("query_text"), std::string::npos);
  ASSERT_EQ(r.log.size(), 1u);
  EXPECT_EQ(r.log.records[0].query_text, "SELECT 2");
}

TEST(ReadLog, StrictModeThrowsWithLineNumber) {
  ReadOptions strict;
  strict.strict = true;
  try {
    read_string("{\"query_text\":\"SELECT 1\"}\n{not json\n", strict);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(ReadLog, RejectsBlankTextAndBadTypes) {
  const auto r = read_string(
      "{\"query_text\":\"   \"}\n"
      "{\"query_text\":\"SELECT 1\",\"labels\":{\"u\":3}}\n"
      "{\"query_text\":\"SELECT 1\",\"timestamp\":\"noon\"}\n"
      "{\"query_text\":\"SELECT 1\",\"labels\":{\"\":\"x\"}}\n"
      "[1,2]\n"
      "\n"
      "{\"query_text\":\"SELECT 1\",\"runtime_ms\":12,\"error_code\":\"E1\",\"timestamp\":7}\n");
  EXPECT_EQ(r.rejected.size(), 6u);
  ASSERT_EQ(r.log.size(), 1u);
  EXPECT_EQ(r.log.records[0].runtime_ms, 12);
  EXPECT_EQ(r.log.records[0].error_code, "E1");
  EXPECT_EQ(r.log.records[0].timestamp, 7);
}

TEST(ReadLog, ChannelFilterKeepsOnlyRequestedLabels) {
  ReadOptions opts;
  opts.channels = {"user"};
  const auto r = read_string(R"({"query_text":"SELECT 1","labels":{"user":"u1","account":"a"}})" "\n", opts);
  ASSERT_EQ(r.log.size(), 1u);
  EXPECT_EQ(r.log.records[0].labels.size(), 1u);
  EXPECT_TRUE(r.log.records[0].label("user"));
}

TEST(ReadLog, GeneratedLogKeepsCountAndOrder) {
  TempDir dir;
  const auto spec = sim::preset_spec("tenants");
  const WorkloadLog log = sim::generate_workload(spec, 1000, 5);
  write_log(log, dir / "w.jsonl");
  const auto r = read_log(dir / "w.jsonl");
  EXPECT_TRUE(r.rejected.empty());
  ASSERT_EQ(r.log.size(), 1000u);
  for (std::size_t i = 0; i < log.size(); ++i) ASSERT_EQ(r.log.records[i], log.records[i]) << i;
}

// Property: accepted + rejected == lines, and write(read(f)) reads back field for field.
TEST(ReadLog, PropertyCountsAndLosslessRoundTrip) {
  Rng rng(99);
  const std::vector<std::string> bad = {"{", "null", "{\"labels\":{}}", "{\"query_text\":\"\"}", "   ", "42"};
  for (int trial = 0; trial < 25; ++trial) {
    std::ostringstream text;
    std::size_t lines = 1 + rng.below(40), good = 0;
    for (std::size_t i = 0; i < lines; ++i) {
      if (rng.uniform() < 0.3) {
        text << bad[rng.below(bad.size())] << '\n';
        continue;
      }
      LabeledQuery q;
      q.query_text = "SELECT " + std::to_string(rng.below(1000)) + " \"q\\\" \t é";
      for (std::size_t k = rng.below(4); k > 0; --k) q.labels["ch" + std::to_string(k)] = std::to_string(rng.next());
      if (rng.uniform() < 0.5) q.timestamp = static_cast<std::int64_t>(rng.next() >> 2);
      if (rng.uniform() < 0.5) q.runtime_ms = static_cast<std::int64_t>(rng.below(100000));
      if (rng.uniform() < 0.3) q.error_code = "ERR" + std::to_string(rng.below(10));
      text << to_json_line(q) << '\n';
      ++good;
    }
    const auto r = read_string(text.str());
    EXPECT_EQ(r.line_count, lines);
    EXPECT_EQ(r.log.size() + r.rejected.size(), r.line_count);
    EXPECT_EQ(r.log.size(), good);
    std::ostringstream again;
    write_log(r.log, again);
    const auto r2 = read_string(again.str());
    ASSERT_EQ(r2.log.size(), r.log.size());
    for (std::size_t i = 0; i < r.log.size(); ++i) EXPECT_EQ(r2.log.records[i], r.log.records[i]);
  }
}

TEST(EmbeddingVector, RejectsEmptyAndNonFinite) {
  EXPECT_THROW(EmbeddingVector(std::vector<double>{}), Error);
  EXPECT_THROW(EmbeddingVector(std::vector<double>{1.0, std::nan("")}), Error);
  EXPECT_THROW(EmbeddingVector(std::vector<double>{INFINITY}), Error);
  const EmbeddingVector v({1.0, 2.0});
  EXPECT_EQ(v.dimension(), 2u);
}

TEST(CosineSimilarity, KnownValues) {
  const std::vector<double> a = {1, 0}, b = {0, 1}, c = {2, 0}, z = {0, 0};
  EXPECT_DOUBLE_EQ(cosine_similarity(a, b), 0.0);
  EXPECT_DOUBLE_EQ(cosine_similarity(a, c), 1.0);
  EXPECT_DOUBLE_EQ(cosine_similarity(a, z), 0.0);
}

}  // namespace
}  // namespace querc
