#include "querc/embedder.hpp"

#include "querc/doc2vec.hpp"
#include "querc/errors.hpp"
#include "querc/lstm.hpp"

namespace querc {

std::shared_ptr<const Embedder> embedder_from_artifact(const ModelArtifact& artifact) {
  switch (artifact.kind) {
    case ModelKind::doc2vec:
      return std::make_shared<Doc2VecEmbedder>(Doc2VecModel::from_artifact(artifact));
    case ModelKind::lstm_autoencoder:
      return std::make_shared<LstmEmbedder>(LstmModel::from_artifact(artifact));
    default:
      throw KindMismatchError("expected an embedder model, found " + std::string(to_string(artifact.kind)));
  }
}

std::shared_ptr<const Embedder> load_embedder(const std::filesystem::path& path) {
  const ModelKind kind = peek_model_kind(path);
  if (kind != ModelKind::doc2vec && kind != ModelKind::lstm_autoencoder) {
    throw KindMismatchError("model " + path.string() + " has kind " + std::string(to_string(kind)) +
                            ", expected an embedder (doc2vec or lstm_autoencoder)");
  }
  return embedder_from_artifact(load_model(path));
}

}  // namespace querc
