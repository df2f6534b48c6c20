#pragma once

// Query labeling over embeddings with an extremely-randomized decision forest.

#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "querc/matrix.hpp"
#include "querc/model_io.hpp"
#include "querc/workload.hpp"

namespace querc {

struct ForestConfig {
  std::size_t n_trees = 100;
  std::size_t max_depth = 16;
  std::size_t min_leaf = 2;
  std::size_t features_per_split = 0;  // 0: round(sqrt(d))
  std::size_t thresholds_per_feature = 4;
  std::uint64_t seed = 1;

  static constexpr std::size_t kUnlimitedDepth = std::numeric_limits<std::uint32_t>::max();

  void validate() const;
  nlohmann::json to_json() const;
  static ForestConfig from_json(const nlohmann::json& j);
};

struct TreeNode {
  std::int32_t feature = -1;  // -1 marks a leaf
  double threshold = 0.0;     // x[feature] <= threshold goes left
  std::int32_t left = -1;
  std::int32_t right = -1;
  std::vector<double> counts;  // leaf only: training samples per class

  bool is_leaf() const { return feature < 0; }
  bool operator==(const TreeNode&) const = default;
};

struct DecisionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  std::size_t depth() const;
  bool operator==(const DecisionTree&) const = default;
};

struct Prediction {
  std::string label;
  double confidence = 0.0;
  std::vector<double> distribution;  // parallel to ForestModel::classes
};

struct ForestModel {
  std::vector<std::string> classes;  // sorted
  std::vector<DecisionTree> trees;
  ForestConfig config;
  std::size_t dimension = 0;

  Prediction predict(std::span<const double> v) const;

  ModelArtifact to_artifact() const;
  static ForestModel from_artifact(const ModelArtifact& artifact);
};

// Every tree sees the full sample. At each node a random subset of
// coordinates is tried with random thresholds drawn uniformly within the
// node's range, and the best Gini decrease wins. A single distinct label
// yields a constant model.
ForestModel train_forest(const Matrix& x, std::span<const std::string> y, const ForestConfig& config);

// Throws Error on a dimension mismatch.
Prediction predict(const ForestModel& model, const EmbeddingVector& v);

struct CrossValidation {
  double accuracy = 0.0;  // mean of per-fold accuracies
  std::vector<double> fold_accuracy;
  std::vector<std::size_t> fold_of;     // per sample
  std::vector<std::string> predicted;   // per sample, from the fold that held it out
};

// Stratified k-fold. Fold membership comes from per-label round-robin over a
// keyed shuffle whose keys depend on (seed, vector, label), so permuting the
// input does not change the result. Labels rarer than `folds` are spread
// best-effort.
CrossValidation cross_validate(const Matrix& x, std::span<const std::string> y, std::size_t folds,
                               const ForestConfig& config);

struct AuditResult {
  bool mismatch = false;
  std::string predicted;
  double confidence = 0.0;
};

// Mismatch iff the predicted label differs from the claimed one.
AuditResult audit_flag(const ForestModel& model, const EmbeddingVector& v, std::string_view claimed);

}  // namespace querc
