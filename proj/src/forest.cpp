#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "querc/errors.hpp"
#include "querc/labeler.hpp"
#include "querc/random.hpp"

namespace querc {

namespace {

double gini(std::span<const double> counts, double n) {
  if (n <= 0.0) return 0.0;
  double s = 0.0;
  for (double c : counts) s += c * c;
  return 1.0 - s / (n * n);
}

class TreeBuilder {
 public:
  TreeBuilder(const Matrix& x, std::span<const std::size_t> y, std::size_t n_classes, const ForestConfig& config,
              std::size_t features_per_split, std::uint64_t seed)
      : x_(x), y_(y), n_classes_(n_classes), config_(config), features_per_split_(features_per_split), rng_(seed) {}

  DecisionTree build(std::vector<std::size_t> all) {
    DecisionTree tree;
    struct Pending {
      std::size_t node;
      std::vector<std::size_t> indices;
      std::size_t depth;
    };
    std::vector<Pending> stack;
    tree.nodes.emplace_back();
    stack.push_back({0, std::move(all), 0});
    std::vector<std::size_t> features(x_.cols);
    std::vector<double> values;
    while (!stack.empty()) {
      Pending p = std::move(stack.back());
      stack.pop_back();
      std::vector<double> counts(n_classes_, 0.0);
      for (std::size_t i : p.indices) counts[y_[i]] += 1.0;
      const double n = static_cast<double>(p.indices.size());
      const bool pure = std::count_if(counts.begin(), counts.end(), [](double c) { return c > 0.0; }) <= 1;
      Split split;
      if (!pure && p.depth < config_.max_depth && p.indices.size() >= 2 * config_.min_leaf) {
        split = best_split(p.indices, counts, n, features, values);
      }
      if (!split.valid) {
        tree.nodes[p.node].counts = std::move(counts);
        continue;
      }
      std::vector<std::size_t> left, right;
      for (std::size_t i : p.indices) (x_(i, split.feature) <= split.threshold ? left : right).push_back(i);
      const auto l = static_cast<std::int32_t>(tree.nodes.size());
      tree.nodes.emplace_back();
      tree.nodes.emplace_back();
      TreeNode& node = tree.nodes[p.node];
      node.feature = static_cast<std::int32_t>(split.feature);
      node.threshold = split.threshold;
      node.left = l;
      node.right = l + 1;
      // Right pushed first so the left subtree is expanded first.
      stack.push_back({static_cast<std::size_t>(l + 1), std::move(right), p.depth + 1});
      stack.push_back({static_cast<std::size_t>(l), std::move(left), p.depth + 1});
    }
    return tree;
  }

 private:
  struct Split {
    bool valid = false;
    std::size_t feature = 0;
    double threshold = 0.0;
    double gain = -std::numeric_limits<double>::infinity();
  };

  Split best_split(const std::vector<std::size_t>& idx, const std::vector<double>& counts, double n,
                   std::vector<std::size_t>& features, std::vector<double>& values) {
    std::iota(features.begin(), features.end(), std::size_t{0});
    rng_.shuffle(std::span(features));
    const double parent = gini(counts, n);
    Split best;
    std::size_t tried = 0;
    std::vector<double> left(n_classes_), right(n_classes_);
    for (std::size_t f : features) {
      if (tried >= features_per_split_ && best.valid) break;
      values.resize(idx.size());
      double lo = std::numeric_limits<double>::infinity(), hi = -lo;
      for (std::size_t k = 0; k < idx.size(); ++k) {
        values[k] = x_(idx[k], f);
        lo = std::min(lo, values[k]);
        hi = std::max(hi, values[k]);
      }
      if (!(hi > lo)) continue;
      ++tried;
      for (std::size_t t = 0; t < config_.thresholds_per_feature; ++t) {
        const double thr = rng_.uniform(lo, hi);
        std::fill(left.begin(), left.end(), 0.0);
        double nl = 0.0;
        for (std::size_t k = 0; k < idx.size(); ++k) {
          if (values[k] <= thr) {
            left[y_[idx[k]]] += 1.0;
            nl += 1.0;
          }
        }
        const double nr = n - nl;
        if (nl < static_cast<double>(config_.min_leaf) || nr < static_cast<double>(config_.min_leaf)) continue;
        for (std::size_t c = 0; c < n_classes_; ++c) right[c] = counts[c] - left[c];
        const double gain = parent - (nl / n) * gini(left, nl) - (nr / n) * gini(right, nr);
        if (gain > best.gain) {
          best = {true, f, thr, gain};
        }
      }
    }
    return best;
  }

  const Matrix& x_;
  std::span<const std::size_t> y_;
  std::size_t n_classes_;
  const ForestConfig& config_;
  std::size_t features_per_split_;
  Rng rng_;
};

}  // namespace

void ForestConfig::validate() const {
  if (n_trees < 1 || max_depth < 1 || min_leaf < 1 || thresholds_per_feature < 1) {
    throw Error("forest: n_trees, max_depth, min_leaf and thresholds_per_feature must be positive");
  }
}

nlohmann::json ForestConfig::to_json() const {
  return {{"n_trees", n_trees},
          {"max_depth", max_depth},
          {"min_leaf", min_leaf},
          {"features_per_split", features_per_split},
          {"thresholds_per_feature", thresholds_per_feature},
          {"seed", seed}};
}

ForestConfig ForestConfig::from_json(const nlohmann::json& j) {
  ForestConfig c;
  c.n_trees = j.at("n_trees").get<std::size_t>();
  c.max_depth = j.at("max_depth").get<std::size_t>();
  c.min_leaf = j.at("min_leaf").get<std::size_t>();
  c.features_per_split = j.at("features_per_split").get<std::size_t>();
  c.thresholds_per_feature = j.at("thresholds_per_feature").get<std::size_t>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

std::size_t DecisionTree::depth() const {
  std::vector<std::size_t> d(nodes.size(), 0);
  std::size_t deepest = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    deepest = std::max(deepest, d[i]);
    if (!nodes[i].is_leaf()) {
      d[static_cast<std::size_t>(nodes[i].left)] = d[i] + 1;
      d[static_cast<std::size_t>(nodes[i].right)] = d[i] + 1;
    }
  }
  return deepest;
}

ForestModel train_forest(const Matrix& x, std::span<const std::string> y, const ForestConfig& config) {
  config.validate();
  if (x.rows != y.size()) throw Error("forest: X and y differ in length");
  if (x.rows < 2) throw Error("forest: need at least 2 samples");
  if (x.cols < 1) throw Error("forest: vectors must have dimension >= 1");

  ForestModel model;
  model.config = config;
  model.dimension = x.cols;
  model.classes.assign(y.begin(), y.end());
  std::sort(model.classes.begin(), model.classes.end());
  model.classes.erase(std::unique(model.classes.begin(), model.classes.end()), model.classes.end());
  std::vector<std::size_t> labels(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    labels[i] = static_cast<std::size_t>(
        std::lower_bound(model.classes.begin(), model.classes.end(), y[i]) - model.classes.begin());
  }
  const std::size_t fps =
      config.features_per_split > 0
          ? std::min(config.features_per_split, x.cols)
          : std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(std::sqrt(static_cast<double>(x.cols)))));

  std::vector<std::size_t> all(x.rows);
  std::iota(all.begin(), all.end(), std::size_t{0});
  model.trees.reserve(config.n_trees);
  for (std::size_t t = 0; t < config.n_trees; ++t) {
    TreeBuilder builder(x, labels, model.classes.size(), config, fps, derive_seed(config.seed, t));
    model.trees.push_back(builder.build(all));
  }
  return model;
}

Prediction ForestModel::predict(std::span<const double> v) const {
  if (v.size() != dimension) {
    throw Error("forest: vector dimension " + std::to_string(v.size()) + " != model dimension " +
                std::to_string(dimension));
  }
  Prediction p;
  p.distribution.assign(classes.size(), 0.0);
  for (const auto& tree : trees) {
    std::size_t n = 0;
    while (!tree.nodes[n].is_leaf()) {
      const auto& node = tree.nodes[n];
      n = static_cast<std::size_t>(v[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left : node.right);
    }
    const auto& counts = tree.nodes[n].counts;
    const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
    for (std::size_t c = 0; c < counts.size(); ++c) p.distribution[c] += counts[c] / total;
  }
  for (auto& d : p.distribution) d /= static_cast<double>(trees.size());
  std::size_t best = 0;
  for (std::size_t c = 1; c < p.distribution.size(); ++c) {
    if (p.distribution[c] > p.distribution[best]) best = c;
  }
  p.label = classes[best];
  p.confidence = std::clamp(p.distribution[best], 0.0, 1.0);
  return p;
}

Prediction predict(const ForestModel& model, const EmbeddingVector& v) { return model.predict(v.values()); }

ModelArtifact ForestModel::to_artifact() const {
  ModelArtifact a;
  a.kind = ModelKind::forest_classifier;
  a.add("classes", StringTable{classes, std::vector<std::uint64_t>(classes.size(), 0)});
  std::size_t total = 0;
  for (const auto& t : trees) total += t.nodes.size();
  Matrix offsets(trees.size() + 1, 1);
  Matrix nodes(total, 4);
  Matrix leaf_counts(total, classes.size());
  std::size_t row = 0;
  for (std::size_t t = 0; t < trees.size(); ++t) {
    offsets(t, 0) = static_cast<double>(row);
    for (const auto& n : trees[t].nodes) {
      nodes(row, 0) = n.feature;
      nodes(row, 1) = n.threshold;
      nodes(row, 2) = n.left;
      nodes(row, 3) = n.right;
      for (std::size_t c = 0; c < n.counts.size(); ++c) leaf_counts(row, c) = n.counts[c];
      ++row;
    }
  }
  offsets(trees.size(), 0) = static_cast<double>(row);
  a.add("tree_offsets", std::move(offsets));
  a.add("nodes", std::move(nodes));
  a.add("leaf_counts", std::move(leaf_counts));
  a.add("metadata", nlohmann::json{{"config", config.to_json()}, {"dimension", dimension}});
  return a;
}

ForestModel ForestModel::from_artifact(const ModelArtifact& a) {
  if (a.kind != ModelKind::forest_classifier) {
    throw KindMismatchError("expected a forest_classifier model, found " + std::string(to_string(a.kind)));
  }
  ForestModel m;
  m.classes = a.strings("classes").entries;
  const auto& meta = a.json("metadata");
  try {
    m.config = ForestConfig::from_json(meta.at("config"));
    m.dimension = meta.at("dimension").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("forest metadata: ") + e.what());
  }
  const Matrix& offsets = a.matrix("tree_offsets");
  const Matrix& nodes = a.matrix("nodes");
  const Matrix& counts = a.matrix("leaf_counts");
  if (offsets.cols != 1 || offsets.rows < 1 || nodes.cols != 4 || counts.rows != nodes.rows ||
      counts.cols != m.classes.size()) {
    throw FormatError("forest sections have inconsistent shapes");
  }
  for (std::size_t t = 0; t + 1 < offsets.rows; ++t) {
    const auto begin = static_cast<std::size_t>(offsets(t, 0));
    const auto end = static_cast<std::size_t>(offsets(t + 1, 0));
    if (begin > end || end > nodes.rows) throw FormatError("forest tree offsets out of range");
    DecisionTree tree;
    for (std::size_t r = begin; r < end; ++r) {
      TreeNode n;
      n.feature = static_cast<std::int32_t>(nodes(r, 0));
      n.threshold = nodes(r, 1);
      n.left = static_cast<std::int32_t>(nodes(r, 2));
      n.right = static_cast<std::int32_t>(nodes(r, 3));
      const auto size = static_cast<std::int32_t>(end - begin);
      if (n.is_leaf()) {
        auto row = counts.row(r);
        n.counts.assign(row.begin(), row.end());
      } else if (n.left <= 0 || n.right <= 0 || n.left >= size || n.right >= size ||
                 static_cast<std::size_t>(n.feature) >= m.dimension) {
        throw FormatError("forest node references out of range");
      }
      tree.nodes.push_back(std::move(n));
    }
    m.trees.push_back(std::move(tree));
  }
  return m;
}

AuditResult audit_flag(const ForestModel& model, const EmbeddingVector& v, std::string_view claimed) {
  const Prediction p = predict(model, v);
  return {p.label != claimed, p.label, p.confidence};
}

}  // namespace querc
