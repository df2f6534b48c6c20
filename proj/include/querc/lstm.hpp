#pragma once

// Sequence autoencoder built from two single-layer LSTMs.
//
// The encoder reads the embedded query tokens left to right from a zero
// state; its final hidden state is the query embedding. The decoder starts
// from the encoder's final (h, c), reads SOS followed by the query, and is
// trained to emit the query followed by EOS. Token embeddings are shared by
// encoder and decoder.
//
// Gate blocks inside every 4h-wide weight column range are ordered i, f, o, g.

#include <cstdint>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "querc/embedder.hpp"
#include "querc/matrix.hpp"
#include "querc/text_pipeline.hpp"
#include "querc/workload.hpp"

namespace querc {

struct LstmConfig {
  std::size_t input_size = 64;    // token embedding width
  std::size_t hidden_size = 128;
  std::size_t epochs = 10;
  double learning_rate = 0.1;
  double grad_clip = 5.0;
  double init_scale = 0.1;        // weights start uniform in [-init_scale, init_scale]
  bool teacher_forcing = true;
  std::uint64_t seed = 1;
  TextOptions text;

  void validate() const;
  nlohmann::json to_json() const;
  static LstmConfig from_json(const nlohmann::json& j);
};

struct LstmCell {
  Matrix input_weights;   // d_in x 4h
  Matrix hidden_weights;  // h x 4h
  Matrix bias;            // 1 x 4h

  LstmCell() = default;
  LstmCell(std::size_t input_size, std::size_t hidden_size)
      : input_weights(input_size, 4 * hidden_size), hidden_weights(hidden_size, 4 * hidden_size), bias(1, 4 * hidden_size) {}

  std::size_t input_size() const { return input_weights.rows; }
  std::size_t hidden_size() const { return hidden_weights.rows; }
};

// c' = f*c + i*g, h' = o*tanh(c'); i, f, o sigmoid, g tanh. No peepholes.
void lstm_cell_step(const LstmCell& cell, std::span<const double> x, std::span<const double> h,
                    std::span<const double> c, std::span<double> h_out, std::span<double> c_out);

struct LstmParams {
  Matrix embedding;   // |V| x d_in, shared by encoder and decoder
  LstmCell encoder;
  LstmCell decoder;
  Matrix projection;  // h x |V|
  Matrix output_bias; // 1 x |V|

  // All-zero parameters of the given shape.
  static LstmParams zeros(std::size_t vocab_size, std::size_t input_size, std::size_t hidden_size);

  std::size_t vocab_size() const { return embedding.rows; }
  std::size_t hidden_size() const { return encoder.hidden_size(); }

  // Visits every tensor in serialization order with its section name.
  void for_each_tensor(const std::function<void(std::string_view, Matrix&)>& f);
  void for_each_tensor(const std::function<void(std::string_view, const Matrix&)>& f) const;
};

// Final encoder hidden state. Throws EmptyQueryError on an empty sequence.
EmbeddingVector encode(const LstmParams& params, std::span<const TokenId> ids);

// Greedy decoding from the encoder state until EOS (not included) or max_len
// tokens. Argmax ties go to the lowest id.
std::vector<TokenId> reconstruct(const LstmParams& params, std::span<const TokenId> ids, std::size_t max_len);

// Mean per-token cross-entropy of regenerating `ids` + EOS. When `grad` is
// non-null it must have the shape of `params`; full-BPTT gradients are added to it.
double sequence_loss(const LstmParams& params, std::span<const TokenId> ids, bool teacher_forcing,
                     LstmParams* grad);

struct LstmModel {
  Vocabulary vocab;
  LstmConfig config;
  LstmParams params;
  std::vector<double> epoch_losses;
  // Global gradient norm after clipping, one entry per SGD step. Not persisted.
  std::vector<double> step_grad_norms;
  std::uint64_t corpus_fingerprint = 0;

  ModelArtifact to_artifact() const;
  static LstmModel from_artifact(const ModelArtifact& artifact);
};

LstmModel train_autoencoder(const WorkloadLog& corpus, const LstmConfig& config);
LstmModel train_autoencoder(Vocabulary vocab, std::span<const std::vector<TokenId>> sequences,
                            const LstmConfig& config);

class LstmEmbedder final : public Embedder {
 public:
  explicit LstmEmbedder(LstmModel model) : model_(std::move(model)) {}

  EmbeddingVector embed(std::string_view query_text) const override;
  std::size_t dimension() const override { return model_.params.hidden_size(); }
  ModelKind kind() const override { return ModelKind::lstm_autoencoder; }
  ModelArtifact to_artifact() const override { return model_.to_artifact(); }

  const LstmModel& model() const { return model_; }

 private:
  LstmModel model_;
};

}  // namespace querc
