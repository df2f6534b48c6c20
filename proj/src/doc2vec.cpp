#include "querc/doc2vec.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "querc/errors.hpp"
#include "querc/kernels.hpp"
#include "querc/random.hpp"

namespace querc {

namespace {

// log(1 + e^x) without overflow.
double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }
double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// Draws ids from the unigram distribution raised to 0.75.
class NoiseSampler {
 public:
  explicit NoiseSampler(const Vocabulary& vocab) : cdf_(vocab.size()) {
    double acc = 0.0;
    for (TokenId i = 0; i < vocab.size(); ++i) {
      acc += std::pow(static_cast<double>(vocab.frequency(i)), 0.75);
      cdf_[i] = acc;
    }
  }

  bool empty() const { return cdf_.empty() || cdf_.back() <= 0.0; }

  TokenId sample(Rng& rng) const {
    const double u = rng.uniform() * cdf_.back();
    auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    if (it == cdf_.end()) --it;
    return static_cast<TokenId>(it - cdf_.begin());
  }

 private:
  std::vector<double> cdf_;
};

void init_uniform(Matrix& m, double half_width, Rng& rng) {
  for (auto& v : m.data) v = rng.uniform(-half_width, half_width);
}

std::uint64_t token_hash(std::span<const TokenId> ids) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (TokenId id : ids) h = fnv1a({reinterpret_cast<const char*>(&id), sizeof(id)}, h);
  return h;
}

// Randomness that touches a document vector (its initial value and the
// negatives drawn for its windows in each pass) is keyed by the document's
// tokens, so equal token sequences are treated alike in training and inference.
std::uint64_t document_seed(std::uint64_t seed, std::span<const TokenId> ids) {
  return derive_seed(seed, token_hash(ids));
}

void draw_negatives(const NoiseSampler& noise, std::size_t k, TokenId target, Rng& rng,
                    std::vector<TokenId>& out) {
  out.clear();
  if (noise.empty()) return;
  for (std::size_t i = 0; i < k; ++i) {
    const TokenId n = noise.sample(rng);
    if (n != target) out.push_back(n);
  }
}

// One SGD step on a window. Token matrices are updated only when `token_in`
// is non-null (training); inference passes nullptr and moves the doc vector only.
double sgd_step(Matrix* token_in, Matrix* token_out, const Matrix& frozen_in, const Matrix& frozen_out,
                std::span<double> doc, const ContextWindow& w, std::span<const TokenId> negatives, double alpha,
                detail::WindowGradient& g) {
  const double loss = detail::window_loss(frozen_in, frozen_out, doc, w.context, w.target, negatives, &g);
  const double inv_n = 1.0 / static_cast<double>(w.context.size() + 1);
  if (token_out != nullptr) {
    for (std::size_t r = 0; r < g.out_rows.size(); ++r) {
      kernels::axpy(-alpha * g.out_coeff[r], g.hidden, token_out->row(g.out_rows[r]));
    }
  }
  if (token_in != nullptr) {
    for (TokenId c : w.context) kernels::axpy(-alpha * inv_n, g.hidden_grad, token_in->row(c));
  }
  kernels::axpy(-alpha * inv_n, g.hidden_grad, doc);
  return loss;
}

}  // namespace

void Doc2VecConfig::validate() const {
  if (dimension < 1) throw Error("doc2vec: dimension must be >= 1");
  if (window < 1) throw Error("doc2vec: window must be >= 1");
  if (negatives < 1) throw Error("doc2vec: negatives must be >= 1");
  if (!(learning_rate > min_learning_rate && min_learning_rate > 0.0)) {
    throw Error("doc2vec: need learning_rate > min_learning_rate > 0");
  }
}

nlohmann::json Doc2VecConfig::to_json() const {
  return {{"dimension", dimension},
          {"window", window},
          {"negatives", negatives},
          {"epochs", epochs},
          {"learning_rate", learning_rate},
          {"min_learning_rate", min_learning_rate},
          {"seed", seed},
          {"text", text.to_json()}};
}

Doc2VecConfig Doc2VecConfig::from_json(const nlohmann::json& j) {
  Doc2VecConfig c;
  c.dimension = j.at("dimension").get<std::size_t>();
  c.window = j.at("window").get<std::size_t>();
  c.negatives = j.at("negatives").get<std::size_t>();
  c.epochs = j.at("epochs").get<std::size_t>();
  c.learning_rate = j.at("learning_rate").get<double>();
  c.min_learning_rate = j.at("min_learning_rate").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.text = TextOptions::from_json(j.at("text"));
  return c;
}

std::vector<ContextWindow> context_windows(std::span<const TokenId> ids, std::size_t window) {
  std::vector<ContextWindow> out;
  out.reserve(ids.size());
  for (std::size_t t = 0; t < ids.size(); ++t) {
    ContextWindow w;
    w.target = ids[t];
    const std::size_t lo = t >= window ? t - window : 0;
    const std::size_t hi = std::min(ids.size() - 1, t + window);
    for (std::size_t j = lo; j <= hi; ++j) {
      if (j != t) w.context.push_back(ids[j]);
    }
    out.push_back(std::move(w));
  }
  return out;
}

namespace detail {

double window_loss(const Matrix& token_in, const Matrix& token_out, std::span<const double> doc,
                   std::span<const TokenId> context, TokenId target, std::span<const TokenId> negatives,
                   WindowGradient* grad) {
  const std::size_t d = doc.size();
  std::vector<double> local_h;
  std::vector<double>& h = grad != nullptr ? grad->hidden : local_h;
  h.assign(doc.begin(), doc.end());
  for (TokenId c : context) kernels::axpy(1.0, token_in.row(c), h);
  kernels::scale(1.0 / static_cast<double>(context.size() + 1), h);

  double loss = 0.0;
  if (grad != nullptr) {
    grad->hidden_grad.assign(d, 0.0);
    grad->out_rows.clear();
    grad->out_coeff.clear();
  }
  auto score = [&](TokenId row, bool positive) {
    const double s = kernels::dot(token_out.row(row), h);
    loss += positive ? softplus(-s) : softplus(s);
    if (grad != nullptr) {
      const double coeff = positive ? sigmoid(s) - 1.0 : sigmoid(s);
      grad->out_rows.push_back(row);
      grad->out_coeff.push_back(coeff);
      kernels::axpy(coeff, token_out.row(row), grad->hidden_grad);
    }
  };
  score(target, true);
  for (TokenId n : negatives) score(n, false);
  if (grad != nullptr) grad->loss = loss;
  return loss;
}

}  // namespace detail

Doc2VecModel train_doc2vec(Vocabulary vocab, std::span<const std::vector<TokenId>> docs,
                           const Doc2VecConfig& config) {
  config.validate();
  if (docs.empty()) throw Error("doc2vec: corpus is empty");

  Doc2VecModel model;
  model.config = config;
  model.vocab = std::move(vocab);
  model.corpus_fingerprint = corpus_fingerprint(docs);
  const std::size_t d = config.dimension;
  const double half = 0.5 / static_cast<double>(d);
  Rng rng(config.seed);
  model.token_in = Matrix(model.vocab.size(), d);
  model.token_out = Matrix(model.vocab.size(), d);
  model.doc_vectors = Matrix(docs.size(), d);
  init_uniform(model.token_in, half, rng);
  std::vector<std::uint64_t> doc_seeds(docs.size());
  for (std::size_t i = 0; i < docs.size(); ++i) {
    doc_seeds[i] = document_seed(config.seed, docs[i]);
    Rng doc_rng(doc_seeds[i]);
    for (auto& v : model.doc_vectors.row(i)) v = doc_rng.uniform(-half, half);
  }

  std::vector<std::vector<ContextWindow>> windows;
  windows.reserve(docs.size());
  std::size_t windows_per_epoch = 0;
  for (const auto& doc : docs) {
    windows.push_back(context_windows(doc, config.window));
    windows_per_epoch += windows.back().size();
  }
  const NoiseSampler noise(model.vocab);
  const double total_steps = static_cast<double>(std::max<std::size_t>(1, config.epochs * windows_per_epoch));

  std::vector<std::size_t> order(docs.size());
  std::vector<TokenId> negatives;
  detail::WindowGradient g;
  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(std::span(order));
    double epoch_loss = 0.0;
    for (std::size_t doc : order) {
      Rng noise_rng(derive_seed(doc_seeds[doc], epoch + 1));
      for (const auto& w : windows[doc]) {
        const double alpha = std::max(
            config.min_learning_rate,
            config.learning_rate - (config.learning_rate - config.min_learning_rate) * static_cast<double>(step) / total_steps);
        draw_negatives(noise, config.negatives, w.target, noise_rng, negatives);
        const double loss = sgd_step(&model.token_in, &model.token_out, model.token_in, model.token_out,
                                     model.doc_vectors.row(doc), w, negatives, alpha, g);
        if (!std::isfinite(loss)) throw DivergenceError(epoch, step, loss);
        epoch_loss += loss;
        ++step;
      }
    }
    model.epoch_losses.push_back(windows_per_epoch > 0 ? epoch_loss / static_cast<double>(windows_per_epoch) : 0.0);
  }
  return model;
}

Doc2VecModel train_doc2vec(const WorkloadLog& corpus, const Doc2VecConfig& config) {
  config.validate();
  if (corpus.empty()) throw Error("doc2vec: corpus is empty");
  std::vector<TokenSequence> seqs;
  seqs.reserve(corpus.size());
  for (const auto& q : corpus.records) seqs.push_back(tokenize(q.query_text, config.text.tokenizer));
  Vocabulary vocab = Vocabulary::build(seqs, config.text.min_count);
  std::vector<std::vector<TokenId>> docs;
  docs.reserve(seqs.size());
  for (const auto& s : seqs) docs.push_back(vocab.encode(s));
  return train_doc2vec(std::move(vocab), docs, config);
}

EmbeddingVector infer_vector(const Doc2VecModel& model, std::span<const TokenId> ids, std::size_t steps) {
  if (steps < 1) throw Error("infer_vector: steps must be >= 1");
  const auto& cfg = model.config;
  const std::size_t d = cfg.dimension;
  const std::uint64_t doc_seed = document_seed(cfg.seed, ids);
  Rng init_rng(doc_seed);
  std::vector<double> doc(d);
  const double half = 0.5 / static_cast<double>(d);
  for (auto& v : doc) v = init_rng.uniform(-half, half);

  const auto windows = context_windows(ids, cfg.window);
  const NoiseSampler noise(model.vocab);
  const double total = static_cast<double>(std::max<std::size_t>(1, steps * windows.size()));
  std::vector<TokenId> negatives;
  detail::WindowGradient g;
  std::size_t step = 0;
  for (std::size_t pass = 0; pass < steps; ++pass) {
    Rng rng(derive_seed(doc_seed, pass + 1));
    for (const auto& w : windows) {
      const double alpha = std::max(
          cfg.min_learning_rate,
          cfg.learning_rate - (cfg.learning_rate - cfg.min_learning_rate) * static_cast<double>(step) / total);
      draw_negatives(noise, cfg.negatives, w.target, rng, negatives);
      sgd_step(nullptr, nullptr, model.token_in, model.token_out, doc, w, negatives, alpha, g);
      ++step;
    }
  }
  return EmbeddingVector(std::move(doc));
}

EmbeddingVector infer_vector(const Doc2VecModel& model, const TokenSequence& seq, std::size_t steps) {
  const auto ids = model.vocab.encode(seq);
  return infer_vector(model, ids, steps);
}

ModelArtifact Doc2VecModel::to_artifact() const {
  ModelArtifact a;
  a.kind = ModelKind::doc2vec;
  a.add("vocabulary", vocab.to_table());
  a.add("token_in", token_in);
  a.add("token_out", token_out);
  a.add("doc_vectors", doc_vectors);
  a.add("metadata", nlohmann::json{{"config", config.to_json()},
                                   {"epoch_losses", epoch_losses},
                                   {"corpus_fingerprint", corpus_fingerprint}});
  return a;
}

Doc2VecModel Doc2VecModel::from_artifact(const ModelArtifact& a) {
  if (a.kind != ModelKind::doc2vec) {
    throw KindMismatchError("expected a doc2vec model, found " + std::string(to_string(a.kind)));
  }
  Doc2VecModel m;
  m.vocab = Vocabulary::from_table(a.strings("vocabulary"));
  m.token_in = a.matrix("token_in");
  m.token_out = a.matrix("token_out");
  m.doc_vectors = a.matrix("doc_vectors");
  const auto& meta = a.json("metadata");
  try {
    m.config = Doc2VecConfig::from_json(meta.at("config"));
    m.epoch_losses = meta.at("epoch_losses").get<std::vector<double>>();
    m.corpus_fingerprint = meta.at("corpus_fingerprint").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("doc2vec metadata: ") + e.what());
  }
  const std::size_t d = m.config.dimension;
  if (m.token_in.rows != m.vocab.size() || m.token_out.rows != m.vocab.size() || m.token_in.cols != d ||
      m.token_out.cols != d || m.doc_vectors.cols != d) {
    throw FormatError("doc2vec matrices disagree with vocabulary or dimension");
  }
  return m;
}

Doc2VecEmbedder::Doc2VecEmbedder(Doc2VecModel model, std::size_t infer_steps)
    : model_(std::move(model)), infer_steps_(infer_steps == 0 ? std::max<std::size_t>(1, model_.config.epochs) : infer_steps) {}

EmbeddingVector Doc2VecEmbedder::embed(std::string_view query_text) const {
  const auto seq = tokenize(query_text, model_.config.text.tokenizer);
  if (seq.empty()) throw EmptyQueryError("query tokenizes to an empty sequence");
  return infer_vector(model_, seq, infer_steps_);
}

}  // namespace querc
