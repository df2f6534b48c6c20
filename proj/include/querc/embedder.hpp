#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <string_view>

#include "querc/model_io.hpp"
#include "querc/workload.hpp"

namespace querc {

// A trained model mapping query text to a fixed-dimension vector.
// Implementations are immutable after construction and safe to share.
class Embedder {
 public:
  virtual ~Embedder() = default;

  // Throws EmptyQueryError when the text tokenizes to nothing.
  virtual EmbeddingVector embed(std::string_view query_text) const = 0;
  virtual std::size_t dimension() const = 0;
  virtual ModelKind kind() const = 0;
  virtual ModelArtifact to_artifact() const = 0;
};

// Accepts doc2vec and lstm_autoencoder containers; anything else is a
// KindMismatchError.
std::shared_ptr<const Embedder> load_embedder(const std::filesystem::path& path);
std::shared_ptr<const Embedder> embedder_from_artifact(const ModelArtifact& artifact);

}  // namespace querc
