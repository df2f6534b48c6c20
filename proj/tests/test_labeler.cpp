#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

#include "querc/errors.hpp"
#include "querc/labeler.hpp"
#include "test_util.hpp"

namespace querc {
namespace {

struct Dataset {
  Matrix x;
  std::vector<std::string> y;
};

// 20 points around -1 labelled "a" and 20 around +1 labelled "b".
Dataset two_blobs(std::uint64_t seed) {
  Rng rng(seed);
  Dataset d{Matrix(40, 1), {}};
  for (std::size_t i = 0; i < 40; ++i) {
    const bool b = i >= 20;
    d.x(i, 0) = (b ? 1.0 : -1.0) + 0.2 * rng.normal();
    d.y.push_back(b ? "b" : "a");
  }
  return d;
}

ForestConfig small_config(std::uint64_t seed = 1) {
  ForestConfig c;
  c.n_trees = 25;
  c.seed = seed;
  return c;
}

double training_accuracy(const ForestModel& m, const Dataset& d) {
  std::size_t hit = 0;
  for (std::size_t i = 0; i < d.x.rows; ++i) hit += m.predict(d.x.row(i)).label == d.y[i];
  return static_cast<double>(hit) / static_cast<double>(d.x.rows);
}

TEST(Forest, ConstantModel) {
  Rng rng(1);
  const Matrix x = testing::random_matrix(rng, 10, 3);
  const std::vector<std::string> y(10, "only");
  const ForestModel m = train_forest(x, y, small_config());
  EXPECT_EQ(m.classes, std::vector<std::string>{"only"});
  for (int t = 0; t < 5; ++t) {
    std::vector<double> v = {rng.uniform(-9, 9), rng.uniform(-9, 9), rng.uniform(-9, 9)};
    const Prediction p = m.predict(v);
    EXPECT_EQ(p.label, "only");
    EXPECT_EQ(p.confidence, 1.0);
  }
}

TEST(Forest, TwoBlobs) {
  const Dataset d = two_blobs(3);
  const ForestModel m = train_forest(d.x, d.y, small_config());
  EXPECT_EQ(training_accuracy(m, d), 1.0);
  const std::vector<double> left = {-1.0}, right = {1.0};
  const Prediction pa = m.predict(left);
  EXPECT_EQ(pa.label, "a");
  EXPECT_GE(pa.confidence, 0.9);

  const AuditResult flagged = audit_flag(m, EmbeddingVector(right), "a");
  EXPECT_TRUE(flagged.mismatch);
  EXPECT_EQ(flagged.predicted, "b");
  EXPECT_GE(flagged.confidence, 0.9);
  EXPECT_FALSE(audit_flag(m, EmbeddingVector(left), "a").mismatch);
  EXPECT_TRUE(audit_flag(m, EmbeddingVector(left), "nobody").mismatch);
}

TEST(Forest, TieGoesToEarliestClass) {
  ForestModel m;
  m.classes = {"a", "b", "c"};
  m.dimension = 1;
  DecisionTree t;
  TreeNode leaf;
  leaf.counts = {0.0, 3.0, 3.0};
  t.nodes.push_back(leaf);
  m.trees.push_back(t);
  const std::vector<double> v = {0.0};
  const Prediction p = m.predict(v);
  EXPECT_EQ(p.label, "b");
  EXPECT_DOUBLE_EQ(p.confidence, 0.5);
}

TEST(Forest, DeterministicPerSeed) {
  const Dataset d = two_blobs(4);
  const ForestModel a = train_forest(d.x, d.y, small_config(9));
  const ForestModel b = train_forest(d.x, d.y, small_config(9));
  EXPECT_EQ(a.trees, b.trees);
  EXPECT_EQ(a.to_artifact().sections.size(), b.to_artifact().sections.size());
}

TEST(Forest, DimensionMismatchThrows) {
  const Dataset d = two_blobs(5);
  const ForestModel m = train_forest(d.x, d.y, small_config());
  EXPECT_THROW(predict(m, EmbeddingVector({1.0, 2.0})), Error);
  EXPECT_THROW(train_forest(d.x, std::vector<std::string>(3, "a"), small_config()), Error);
}

TEST(Forest, ConfigValidation) {
  ForestConfig c;
  c.n_trees = 0;
  EXPECT_THROW(c.validate(), Error);
  c = ForestConfig{};
  c.min_leaf = 0;
  EXPECT_THROW(c.validate(), Error);
  const ForestConfig d = small_config(4);
  EXPECT_EQ(ForestConfig::from_json(d.to_json()).to_json(), d.to_json());
}

TEST(Forest, StructureRespectsConfigAndCounts) {
  Rng gen(6);
  for (int trial = 0; trial < 8; ++trial) {
    const std::size_t n = 20 + gen.below(60), dim = 1 + gen.below(5);
    const Matrix x = testing::random_matrix(gen, n, dim);
    std::vector<std::string> y;
    for (std::size_t i = 0; i < n; ++i) y.push_back("c" + std::to_string(gen.below(3)));
    ForestConfig c = small_config(trial);
    c.max_depth = 1 + gen.below(6);
    c.min_leaf = 1 + gen.below(4);
    const ForestModel m = train_forest(x, y, c);
    EXPECT_EQ(m.trees.size(), c.n_trees);
    for (const DecisionTree& t : m.trees) {
      EXPECT_LE(t.depth(), c.max_depth);
      double total = 0.0;
      for (const TreeNode& node : t.nodes) {
        if (!node.is_leaf()) continue;
        const double s = std::accumulate(node.counts.begin(), node.counts.end(), 0.0);
        EXPECT_GE(s, 1.0);
        total += s;
      }
      EXPECT_EQ(total, static_cast<double>(n));
    }
    for (int probe = 0; probe < 10; ++probe) {
      std::vector<double> v(dim);
      for (auto& e : v) e = gen.uniform(-2, 2);
      const Prediction p = m.predict(v);
      EXPECT_GE(p.confidence, 0.0);
      EXPECT_LE(p.confidence, 1.0);
      EXPECT_NEAR(std::accumulate(p.distribution.begin(), p.distribution.end(), 0.0), 1.0, 1e-9);
    }
  }
}

TEST(Forest, UnlimitedCapacityFitsDistinctInputs) {
  Rng gen(7);
  const Matrix x = testing::random_matrix(gen, 80, 3);
  std::vector<std::string> y;
  for (std::size_t i = 0; i < 80; ++i) y.push_back(gen.below(2) ? "x" : "y");
  ForestConfig c = small_config();
  c.max_depth = ForestConfig::kUnlimitedDepth;
  c.min_leaf = 1;
  const ForestModel m = train_forest(x, y, c);
  EXPECT_EQ(training_accuracy(m, {x, y}), 1.0);
}

TEST(CrossValidation, ConstantLabelsScoreOne) {
  Rng rng(8);
  const Matrix x = testing::random_matrix(rng, 30, 2);
  const CrossValidation cv = cross_validate(x, std::vector<std::string>(30, "k"), 10, small_config());
  EXPECT_EQ(cv.accuracy, 1.0);
  EXPECT_EQ(cv.fold_accuracy.size(), 10u);
}

TEST(CrossValidation, RandomLabelsAreChance) {
  double sum = 0.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Rng rng(seed);
    const Matrix x = testing::random_matrix(rng, 200, 4);
    std::vector<std::string> y;
    for (std::size_t i = 0; i < 200; ++i) y.push_back(rng.below(2) ? "p" : "q");
    const double acc = cross_validate(x, y, 10, small_config(seed)).accuracy;
    EXPECT_NEAR(acc, 0.5, 0.1) << "seed " << seed;
    sum += acc;
  }
  EXPECT_NEAR(sum / 5.0, 0.5, 0.05);
}

TEST(CrossValidation, FoldsAreStratified) {
  const Dataset d = two_blobs(9);
  const CrossValidation cv = cross_validate(d.x, d.y, 10, small_config());
  std::vector<std::size_t> per_fold_a(10, 0), per_fold_b(10, 0);
  for (std::size_t i = 0; i < d.y.size(); ++i) (d.y[i] == "a" ? per_fold_a : per_fold_b)[cv.fold_of[i]]++;
  for (std::size_t f = 0; f < 10; ++f) {
    EXPECT_EQ(per_fold_a[f], 2u);
    EXPECT_EQ(per_fold_b[f], 2u);
  }
  EXPECT_EQ(cv.accuracy, 1.0);
}

TEST(CrossValidation, PermutationInvariant) {
  Rng gen(10);
  for (int trial = 0; trial < 5; ++trial) {
    const Matrix x = testing::random_matrix(gen, 60, 3);
    std::vector<std::string> y;
    for (std::size_t i = 0; i < 60; ++i) y.push_back(x(i, 0) + 0.3 * gen.normal() > 0 ? "hi" : "lo");
    std::vector<std::size_t> perm(60);
    std::iota(perm.begin(), perm.end(), 0);
    for (std::size_t i = perm.size() - 1; i > 0; --i) std::swap(perm[i], perm[gen.below(i + 1)]);
    Matrix px(60, 3);
    std::vector<std::string> py(60);
    for (std::size_t i = 0; i < 60; ++i) {
      std::copy(x.row(perm[i]).begin(), x.row(perm[i]).end(), px.row(i).begin());
      py[i] = y[perm[i]];
    }
    const CrossValidation a = cross_validate(x, y, 10, small_config(trial));
    const CrossValidation b = cross_validate(px, py, 10, small_config(trial));
    EXPECT_EQ(a.accuracy, b.accuracy) << "trial " << trial;
    for (std::size_t i = 0; i < 60; ++i) EXPECT_EQ(b.fold_of[i], a.fold_of[perm[i]]);
  }
}

TEST(CrossValidation, IdenticalQuerySetsAreIndistinguishable) {
  Rng gen(11);
  const Matrix base = testing::random_matrix(gen, 30, 4);
  Matrix x(60, 4);
  std::vector<std::string> y;
  for (std::size_t i = 0; i < 60; ++i) {
    std::copy(base.row(i % 30).begin(), base.row(i % 30).end(), x.row(i).begin());
    y.push_back(i < 30 ? "alice" : "bob");
  }
  const CrossValidation cv = cross_validate(x, y, 10, small_config());
  EXPECT_LE(cv.accuracy, 0.55);
}

TEST(CrossValidation, RejectsTooFewSamples) {
  const Dataset d = two_blobs(12);
  EXPECT_THROW(cross_validate(d.x, d.y, 1, small_config()), Error);
  Matrix tiny(3, 1, 0.0);
  EXPECT_THROW(cross_validate(tiny, std::vector<std::string>{"a", "b", "a"}, 4, small_config()), Error);
}

TEST(Forest, ArtifactRoundTrip) {
  const Dataset d = two_blobs(13);
  const ForestModel m = train_forest(d.x, d.y, small_config());
  const ForestModel back = ForestModel::from_artifact(m.to_artifact());
  EXPECT_EQ(back.classes, m.classes);
  EXPECT_EQ(back.trees, m.trees);
  EXPECT_EQ(back.dimension, m.dimension);
}

}  // namespace
}  // namespace querc
