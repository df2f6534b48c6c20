#include "querc/lstm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "querc/errors.hpp"
#include "querc/kernels.hpp"
#include "querc/random.hpp"

namespace querc {

namespace {

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

struct StepCache {
  std::vector<double> h_prev, c_prev;
  std::vector<double> gates;  // activated i, f, o, g
  std::vector<double> c, tanh_c, h;
};

void forward_step(const LstmCell& cell, std::span<const double> x, std::span<const double> h_prev,
                  std::span<const double> c_prev, StepCache& s) {
  const std::size_t hs = cell.hidden_size();
  s.h_prev.assign(h_prev.begin(), h_prev.end());
  s.c_prev.assign(c_prev.begin(), c_prev.end());
  s.gates.assign(cell.bias.data.begin(), cell.bias.data.end());
  kernels::gemv_transposed(cell.input_weights.data, cell.input_size(), 4 * hs, x, s.gates);
  kernels::gemv_transposed(cell.hidden_weights.data, hs, 4 * hs, h_prev, s.gates);
  s.c.resize(hs);
  s.tanh_c.resize(hs);
  s.h.resize(hs);
  for (std::size_t j = 0; j < hs; ++j) {
    const double i = sigmoid(s.gates[j]);
    const double f = sigmoid(s.gates[hs + j]);
    const double o = sigmoid(s.gates[2 * hs + j]);
    const double g = std::tanh(s.gates[3 * hs + j]);
    s.gates[j] = i;
    s.gates[hs + j] = f;
    s.gates[2 * hs + j] = o;
    s.gates[3 * hs + j] = g;
    s.c[j] = f * c_prev[j] + i * g;
    s.tanh_c[j] = std::tanh(s.c[j]);
    s.h[j] = o * s.tanh_c[j];
  }
}

// Accumulates weight gradients into `gcell`; writes dx, dh_prev, dc_prev.
void backward_step(const LstmCell& cell, const StepCache& s, std::span<const double> x,
                   std::span<const double> dh, std::span<const double> dc, LstmCell& gcell,
                   std::vector<double>& dz, std::vector<double>& dx, std::vector<double>& dh_prev,
                   std::vector<double>& dc_prev) {
  const std::size_t hs = cell.hidden_size();
  dz.resize(4 * hs);
  dc_prev.resize(hs);
  for (std::size_t j = 0; j < hs; ++j) {
    const double i = s.gates[j], f = s.gates[hs + j], o = s.gates[2 * hs + j], g = s.gates[3 * hs + j];
    const double tc = s.tanh_c[j];
    const double dc_total = dc[j] + dh[j] * o * (1.0 - tc * tc);
    dz[j] = dc_total * g * i * (1.0 - i);
    dz[hs + j] = dc_total * s.c_prev[j] * f * (1.0 - f);
    dz[2 * hs + j] = dh[j] * tc * o * (1.0 - o);
    dz[3 * hs + j] = dc_total * i * (1.0 - g * g);
    dc_prev[j] = dc_total * f;
  }
  kernels::rank1_update(1.0, x, dz, gcell.input_weights.data);
  kernels::rank1_update(1.0, s.h_prev, dz, gcell.hidden_weights.data);
  kernels::axpy(1.0, dz, gcell.bias.data);
  dx.assign(cell.input_size(), 0.0);
  kernels::gemv(cell.input_weights.data, cell.input_size(), 4 * hs, dz, dx);
  dh_prev.assign(hs, 0.0);
  kernels::gemv(cell.hidden_weights.data, hs, 4 * hs, dz, dh_prev);
}

// Softmax of projection(h) into `probs`.
void output_distribution(const LstmParams& p, std::span<const double> h, std::vector<double>& probs) {
  const std::size_t v = p.vocab_size();
  probs.assign(p.output_bias.data.begin(), p.output_bias.data.end());
  kernels::gemv_transposed(p.projection.data, p.hidden_size(), v, h, probs);
  const double mx = *std::max_element(probs.begin(), probs.end());
  double z = 0.0;
  for (auto& x : probs) {
    x = std::exp(x - mx);
    z += x;
  }
  for (auto& x : probs) x /= z;
}

TokenId argmax(std::span<const double> v) {
  return static_cast<TokenId>(std::max_element(v.begin(), v.end()) - v.begin());
}

void check_ids(const LstmParams& p, std::span<const TokenId> ids) {
  for (TokenId id : ids) {
    if (id >= p.vocab_size()) throw Error("token id " + std::to_string(id) + " outside the vocabulary");
  }
}

// Runs the encoder; caches are filled only when `caches` is non-null.
void run_encoder(const LstmParams& p, std::span<const TokenId> ids, std::vector<StepCache>* caches,
                 std::vector<double>& h, std::vector<double>& c) {
  const std::size_t hs = p.hidden_size();
  h.assign(hs, 0.0);
  c.assign(hs, 0.0);
  StepCache local;
  for (std::size_t t = 0; t < ids.size(); ++t) {
    StepCache& s = caches != nullptr ? (*caches)[t] : local;
    forward_step(p.encoder, p.embedding.row(ids[t]), h, c, s);
    h = s.h;
    c = s.c;
  }
}

void init_uniform(Matrix& m, double scale, Rng& rng) {
  for (auto& v : m.data) v = rng.uniform(-scale, scale);
}

}  // namespace

void LstmConfig::validate() const {
  if (input_size < 1 || hidden_size < 1) throw Error("lstm: input_size and hidden_size must be >= 1");
  if (!(grad_clip > 0.0)) throw Error("lstm: grad_clip must be > 0");
  if (!(learning_rate > 0.0)) throw Error("lstm: learning_rate must be > 0");
}

nlohmann::json LstmConfig::to_json() const {
  return {{"input_size", input_size},       {"hidden_size", hidden_size}, {"epochs", epochs},
          {"learning_rate", learning_rate}, {"grad_clip", grad_clip},     {"init_scale", init_scale},
          {"teacher_forcing", teacher_forcing}, {"seed", seed},           {"text", text.to_json()}};
}

LstmConfig LstmConfig::from_json(const nlohmann::json& j) {
  LstmConfig c;
  c.input_size = j.at("input_size").get<std::size_t>();
  c.hidden_size = j.at("hidden_size").get<std::size_t>();
  c.epochs = j.at("epochs").get<std::size_t>();
  c.learning_rate = j.at("learning_rate").get<double>();
  c.grad_clip = j.at("grad_clip").get<double>();
  c.init_scale = j.at("init_scale").get<double>();
  c.teacher_forcing = j.at("teacher_forcing").get<bool>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.text = TextOptions::from_json(j.at("text"));
  return c;
}

void lstm_cell_step(const LstmCell& cell, std::span<const double> x, std::span<const double> h,
                    std::span<const double> c, std::span<double> h_out, std::span<double> c_out) {
  StepCache s;
  forward_step(cell, x, h, c, s);
  std::copy(s.h.begin(), s.h.end(), h_out.begin());
  std::copy(s.c.begin(), s.c.end(), c_out.begin());
}

LstmParams LstmParams::zeros(std::size_t vocab_size, std::size_t input_size, std::size_t hidden_size) {
  LstmParams p;
  p.embedding = Matrix(vocab_size, input_size);
  p.encoder = LstmCell(input_size, hidden_size);
  p.decoder = LstmCell(input_size, hidden_size);
  p.projection = Matrix(hidden_size, vocab_size);
  p.output_bias = Matrix(1, vocab_size);
  return p;
}

void LstmParams::for_each_tensor(const std::function<void(std::string_view, Matrix&)>& f) {
  f("embedding", embedding);
  f("encoder.input_weights", encoder.input_weights);
  f("encoder.hidden_weights", encoder.hidden_weights);
  f("encoder.bias", encoder.bias);
  f("decoder.input_weights", decoder.input_weights);
  f("decoder.hidden_weights", decoder.hidden_weights);
  f("decoder.bias", decoder.bias);
  f("projection", projection);
  f("output_bias", output_bias);
}

void LstmParams::for_each_tensor(const std::function<void(std::string_view, const Matrix&)>& f) const {
  const_cast<LstmParams*>(this)->for_each_tensor([&](std::string_view n, Matrix& m) { f(n, m); });
}

EmbeddingVector encode(const LstmParams& params, std::span<const TokenId> ids) {
  if (ids.empty()) throw EmptyQueryError("cannot encode an empty token sequence");
  check_ids(params, ids);
  std::vector<double> h, c;
  run_encoder(params, ids, nullptr, h, c);
  return EmbeddingVector(std::move(h));
}

std::vector<TokenId> reconstruct(const LstmParams& params, std::span<const TokenId> ids, std::size_t max_len) {
  check_ids(params, ids);
  std::vector<double> h, c;
  run_encoder(params, ids, nullptr, h, c);
  std::vector<TokenId> out;
  std::vector<double> probs;
  StepCache s;
  TokenId input = Vocabulary::kSos;
  while (out.size() < max_len) {
    forward_step(params.decoder, params.embedding.row(input), h, c, s);
    h = s.h;
    c = s.c;
    output_distribution(params, h, probs);
    const TokenId next = argmax(probs);
    if (next == Vocabulary::kEos) break;
    out.push_back(next);
    input = next;
  }
  return out;
}

double sequence_loss(const LstmParams& p, std::span<const TokenId> ids, bool teacher_forcing, LstmParams* grad) {
  if (ids.empty()) throw EmptyQueryError("cannot train on an empty token sequence");
  check_ids(p, ids);
  const std::size_t T = ids.size();
  const std::size_t steps = T + 1;
  const std::size_t hs = p.hidden_size();

  std::vector<StepCache> enc(T), dec(steps);
  std::vector<std::vector<double>> probs(steps);
  std::vector<TokenId> dec_inputs(steps);
  std::vector<double> h, c;
  run_encoder(p, ids, &enc, h, c);

  double loss = 0.0;
  dec_inputs[0] = Vocabulary::kSos;
  for (std::size_t t = 0; t < steps; ++t) {
    if (t > 0) dec_inputs[t] = teacher_forcing ? ids[t - 1] : argmax(probs[t - 1]);
    forward_step(p.decoder, p.embedding.row(dec_inputs[t]), h, c, dec[t]);
    h = dec[t].h;
    c = dec[t].c;
    output_distribution(p, h, probs[t]);
    const TokenId target = t < T ? ids[t] : Vocabulary::kEos;
    loss -= std::log(std::max(probs[t][target], 1e-300));
  }
  const double inv = 1.0 / static_cast<double>(steps);
  loss *= inv;
  if (grad == nullptr) return loss;

  std::vector<double> dh_next(hs, 0.0), dc_next(hs, 0.0), dh(hs), dlogits;
  std::vector<double> dz, dx, dh_prev, dc_prev;
  for (std::size_t t = steps; t-- > 0;) {
    const TokenId target = t < T ? ids[t] : Vocabulary::kEos;
    dlogits = probs[t];
    dlogits[target] -= 1.0;
    kernels::scale(inv, dlogits);
    kernels::rank1_update(1.0, dec[t].h, dlogits, grad->projection.data);
    kernels::axpy(1.0, dlogits, grad->output_bias.data);
    dh = dh_next;
    kernels::gemv(p.projection.data, hs, p.vocab_size(), dlogits, dh);
    backward_step(p.decoder, dec[t], p.embedding.row(dec_inputs[t]), dh, dc_next, grad->decoder, dz, dx, dh_prev,
                  dc_prev);
    kernels::axpy(1.0, dx, grad->embedding.row(dec_inputs[t]));
    dh_next.swap(dh_prev);
    dc_next.swap(dc_prev);
  }
  for (std::size_t t = T; t-- > 0;) {
    backward_step(p.encoder, enc[t], p.embedding.row(ids[t]), dh_next, dc_next, grad->encoder, dz, dx, dh_prev,
                  dc_prev);
    kernels::axpy(1.0, dx, grad->embedding.row(ids[t]));
    dh_next.swap(dh_prev);
    dc_next.swap(dc_prev);
  }
  return loss;
}

LstmModel train_autoencoder(Vocabulary vocab, std::span<const std::vector<TokenId>> sequences,
                            const LstmConfig& config) {
  config.validate();
  if (sequences.empty()) throw Error("lstm: corpus is empty");
  LstmModel model;
  model.config = config;
  model.vocab = std::move(vocab);
  model.corpus_fingerprint = corpus_fingerprint(sequences);
  model.params = LstmParams::zeros(model.vocab.size(), config.input_size, config.hidden_size);

  Rng rng(config.seed);
  model.params.for_each_tensor([&](std::string_view name, Matrix& m) {
    if (name.ends_with("bias")) return;
    init_uniform(m, config.init_scale, rng);
  });

  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < sequences.size(); ++i) {
    if (!sequences[i].empty()) order.push_back(i);
  }
  if (order.empty()) throw Error("lstm: every sequence in the corpus is empty");

  LstmParams grad = LstmParams::zeros(model.vocab.size(), config.input_size, config.hidden_size);
  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(std::span(order));
    double epoch_loss = 0.0;
    for (std::size_t idx : order) {
      grad.for_each_tensor([](std::string_view, Matrix& m) { m.fill(0.0); });
      const double loss = sequence_loss(model.params, sequences[idx], config.teacher_forcing, &grad);
      if (!std::isfinite(loss)) throw DivergenceError(epoch, step, loss);
      double sq = 0.0;
      grad.for_each_tensor([&](std::string_view, Matrix& m) { sq += kernels::dot(m.data, m.data); });
      double norm = std::sqrt(sq);
      double coeff = -config.learning_rate;
      if (norm > config.grad_clip) {
        coeff *= config.grad_clip / norm;
        norm = config.grad_clip;
      }
      model.step_grad_norms.push_back(norm);
      // Pair tensors by visiting order.
      std::vector<Matrix*> grads;
      grad.for_each_tensor([&](std::string_view, Matrix& m) { grads.push_back(&m); });
      std::size_t k = 0;
      model.params.for_each_tensor([&](std::string_view, Matrix& m) { kernels::axpy(coeff, grads[k++]->data, m.data); });
      epoch_loss += loss;
      ++step;
    }
    model.epoch_losses.push_back(epoch_loss / static_cast<double>(order.size()));
  }
  return model;
}

LstmModel train_autoencoder(const WorkloadLog& corpus, const LstmConfig& config) {
  config.validate();
  if (corpus.empty()) throw Error("lstm: corpus is empty");
  std::vector<TokenSequence> seqs;
  seqs.reserve(corpus.size());
  for (const auto& q : corpus.records) seqs.push_back(tokenize(q.query_text, config.text.tokenizer));
  Vocabulary vocab = Vocabulary::build(seqs, config.text.min_count);
  std::vector<std::vector<TokenId>> ids;
  ids.reserve(seqs.size());
  for (const auto& s : seqs) ids.push_back(vocab.encode(s));
  return train_autoencoder(std::move(vocab), ids, config);
}

ModelArtifact LstmModel::to_artifact() const {
  ModelArtifact a;
  a.kind = ModelKind::lstm_autoencoder;
  a.add("vocabulary", vocab.to_table());
  params.for_each_tensor([&](std::string_view name, const Matrix& m) { a.add(std::string(name), m); });
  a.add("metadata", nlohmann::json{{"config", config.to_json()},
                                   {"epoch_losses", epoch_losses},
                                   {"corpus_fingerprint", corpus_fingerprint}});
  return a;
}

LstmModel LstmModel::from_artifact(const ModelArtifact& a) {
  if (a.kind != ModelKind::lstm_autoencoder) {
    throw KindMismatchError("expected an lstm_autoencoder model, found " + std::string(to_string(a.kind)));
  }
  LstmModel m;
  m.vocab = Vocabulary::from_table(a.strings("vocabulary"));
  const auto& meta = a.json("metadata");
  try {
    m.config = LstmConfig::from_json(meta.at("config"));
    m.epoch_losses = meta.at("epoch_losses").get<std::vector<double>>();
    m.corpus_fingerprint = meta.at("corpus_fingerprint").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("lstm metadata: ") + e.what());
  }
  m.params = LstmParams::zeros(m.vocab.size(), m.config.input_size, m.config.hidden_size);
  m.params.for_each_tensor([&](std::string_view name, Matrix& t) {
    const Matrix& stored = a.matrix(name);
    if (stored.rows != t.rows || stored.cols != t.cols) {
      throw FormatError("lstm tensor '" + std::string(name) + "' has the wrong shape");
    }
    t = stored;
  });
  return m;
}

EmbeddingVector LstmEmbedder::embed(std::string_view query_text) const {
  const auto seq = tokenize(query_text, model_.config.text.tokenizer);
  if (seq.empty()) throw EmptyQueryError("query tokenizes to an empty sequence");
  return encode(model_.params, model_.vocab.encode(seq));
}

}  // namespace querc
