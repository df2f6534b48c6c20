#pragma once

// Paragraph-vector embedder, distributed-memory variant (PV-DM).
//
// For every position of a query the hidden vector is the mean of the input
// embeddings of the surrounding tokens and the query's own document vector.
// That hidden vector scores the target token against the output embeddings
// with a negative-sampling loss. Unseen queries get a fresh document vector
// fitted with the token matrices frozen.

#include <cstdint>
#include <span>
#include <vector>

#include "json.hpp"
#include "querc/embedder.hpp"
#include "querc/matrix.hpp"
#include "querc/text_pipeline.hpp"
#include "querc/workload.hpp"

namespace querc {

struct Doc2VecConfig {
  std::size_t dimension = 128;
  std::size_t window = 5;
  std::size_t negatives = 5;
  std::size_t epochs = 20;
  double learning_rate = 0.025;
  double min_learning_rate = 0.0001;
  std::uint64_t seed = 1;
  TextOptions text;

  // Throws Error when an invariant is violated.
  void validate() const;
  nlohmann::json to_json() const;
  static Doc2VecConfig from_json(const nlohmann::json& j);
};

struct ContextWindow {
  std::vector<TokenId> context;
  TokenId target = 0;

  bool operator==(const ContextWindow&) const = default;
};

// One window per position; the context is every id within distance `window`
// of the target, excluding the target itself.
std::vector<ContextWindow> context_windows(std::span<const TokenId> ids, std::size_t window);

struct Doc2VecModel {
  Vocabulary vocab;
  Doc2VecConfig config;
  Matrix token_in;     // |V| x d
  Matrix token_out;    // |V| x d
  Matrix doc_vectors;  // N x d, one row per training record
  std::vector<double> epoch_losses;
  std::uint64_t corpus_fingerprint = 0;

  ModelArtifact to_artifact() const;
  static Doc2VecModel from_artifact(const ModelArtifact& artifact);
};

// Deterministic for a fixed (corpus order, config). Throws DivergenceError on
// a non-finite loss.
Doc2VecModel train_doc2vec(const WorkloadLog& corpus, const Doc2VecConfig& config);
// Same, on a pre-built vocabulary and encoded documents.
Doc2VecModel train_doc2vec(Vocabulary vocab, std::span<const std::vector<TokenId>> docs,
                           const Doc2VecConfig& config);

EmbeddingVector infer_vector(const Doc2VecModel& model, const TokenSequence& seq, std::size_t steps);
EmbeddingVector infer_vector(const Doc2VecModel& model, std::span<const TokenId> ids, std::size_t steps);

class Doc2VecEmbedder final : public Embedder {
 public:
  explicit Doc2VecEmbedder(Doc2VecModel model, std::size_t infer_steps = 0);

  EmbeddingVector embed(std::string_view query_text) const override;
  std::size_t dimension() const override { return model_.config.dimension; }
  ModelKind kind() const override { return ModelKind::doc2vec; }
  ModelArtifact to_artifact() const override { return model_.to_artifact(); }

  const Doc2VecModel& model() const { return model_; }

 private:
  Doc2VecModel model_;
  std::size_t infer_steps_;
};

namespace detail {

// Loss of one window and its gradient. `hidden_grad` is dL/dh; each input row
// (context tokens and the document vector) receives hidden_grad / (|context|+1).
struct WindowGradient {
  double loss = 0.0;
  std::vector<double> hidden_grad;
  // Parallel to the scored rows: target first, then negatives.
  std::vector<TokenId> out_rows;
  std::vector<double> out_coeff;  // dL/dscore per scored row; out row gradient is coeff * h
  std::vector<double> hidden;
};

double window_loss(const Matrix& token_in, const Matrix& token_out, std::span<const double> doc,
                   std::span<const TokenId> context, TokenId target, std::span<const TokenId> negatives,
                   WindowGradient* grad);

}  // namespace detail

}  // namespace querc
