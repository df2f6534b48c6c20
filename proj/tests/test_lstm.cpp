#include <gtest/gtest.h>

#include <cmath>

#include "querc/errors.hpp"
#include "querc/lstm.hpp"
#include "test_util.hpp"

namespace querc {
namespace {

double naive_sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Per-coordinate reference cell written straight from the gate equations.
void naive_step(const LstmCell& cell, const std::vector<double>& x, const std::vector<double>& h,
                const std::vector<double>& c, std::vector<double>& h_out, std::vector<double>& c_out) {
  const std::size_t H = cell.hidden_size(), D = cell.input_size();
  h_out.assign(H, 0.0);
  c_out.assign(H, 0.0);
  for (std::size_t j = 0; j < H; ++j) {
    double z[4];
    for (std::size_t gate = 0; gate < 4; ++gate) {
      const std::size_t col = gate * H + j;
      double s = cell.bias(0, col);
      for (std::size_t k = 0; k < D; ++k) s += x[k] * cell.input_weights(k, col);
      for (std::size_t k = 0; k < H; ++k) s += h[k] * cell.hidden_weights(k, col);
      z[gate] = s;
    }
    const double i = naive_sigmoid(z[0]), f = naive_sigmoid(z[1]), o = naive_sigmoid(z[2]), g = std::tanh(z[3]);
    c_out[j] = f * c[j] + i * g;
    h_out[j] = o * std::tanh(c_out[j]);
  }
}

TEST(LstmCell, ZeroWeightsZeroStateStaysZero) {
  const LstmCell cell(3, 4);
  const std::vector<double> x(3, 0.0), h(4, 0.0), c(4, 0.0);
  std::vector<double> h2(4), c2(4);
  lstm_cell_step(cell, x, h, c, h2, c2);
  for (std::size_t j = 0; j < 4; ++j) {
    EXPECT_EQ(h2[j], 0.0);
    EXPECT_EQ(c2[j], 0.0);
  }
}

TEST(LstmCell, ZeroWeightsHalveTheCell) {
  const LstmCell cell(3, 4);
  const std::vector<double> x(3, 0.7), h(4, -0.2), c(4, 1.0);
  std::vector<double> h2(4), c2(4);
  lstm_cell_step(cell, x, h, c, h2, c2);
  for (std::size_t j = 0; j < 4; ++j) {
    EXPECT_DOUBLE_EQ(c2[j], 0.5);
    EXPECT_NEAR(h2[j], 0.5 * std::tanh(0.5), 1e-15);
    EXPECT_NEAR(h2[j], 0.231, 1e-3);
  }
}

TEST(LstmCell, MatchesNaiveOracle) {
  Rng rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t D = 1 + rng.below(6), H = 1 + rng.below(8);
    LstmCell cell(D, H);
    cell.input_weights = testing::random_matrix(rng, D, 4 * H);
    cell.hidden_weights = testing::random_matrix(rng, H, 4 * H);
    cell.bias = testing::random_matrix(rng, 1, 4 * H);
    std::vector<double> x(D), h(H), c(H);
    for (auto& v : x) v = rng.uniform(-1, 1);
    for (auto& v : h) v = rng.uniform(-1, 1);
    for (auto& v : c) v = rng.uniform(-2, 2);
    std::vector<double> h1(H), c1(H), h2, c2;
    lstm_cell_step(cell, x, h, c, h1, c1);
    naive_step(cell, x, h, c, h2, c2);
    for (std::size_t j = 0; j < H; ++j) {
      EXPECT_NEAR(h1[j], h2[j], 1e-12);
      EXPECT_NEAR(c1[j], c2[j], 1e-12);
    }
  }
}

LstmParams random_params(Rng& rng, std::size_t V, std::size_t D, std::size_t H, double scale = 0.5) {
  LstmParams p = LstmParams::zeros(V, D, H);
  p.for_each_tensor([&](std::string_view, Matrix& m) {
    for (auto& v : m.data) v = rng.uniform(-scale, scale);
  });
  return p;
}

TEST(LstmEncode, SingleTokenIsOneStepFromZero) {
  Rng rng(4);
  const LstmParams p = random_params(rng, 8, 3, 5);
  const std::vector<TokenId> ids = {6};
  std::vector<double> h(5, 0.0), c(5, 0.0), h2(5), c2(5);
  lstm_cell_step(p.encoder, p.embedding.row(6), h, c, h2, c2);
  const EmbeddingVector v = encode(p, ids);
  ASSERT_EQ(v.dimension(), 5u);
  for (std::size_t j = 0; j < 5; ++j) EXPECT_EQ(v[j], h2[j]);
  EXPECT_EQ(encode(p, ids), v);
  EXPECT_THROW(encode(p, std::vector<TokenId>{}), EmptyQueryError);
  EXPECT_THROW(encode(p, std::vector<TokenId>{8}), Error);
}

TEST(LstmEncode, DimensionEqualsHiddenSize) {
  Rng rng(5);
  for (std::size_t H : {1, 4, 9}) {
    const LstmParams p = random_params(rng, 10, 3, H);
    for (std::size_t len = 1; len < 6; ++len) {
      std::vector<TokenId> ids(len);
      for (auto& id : ids) id = static_cast<TokenId>(rng.below(10));
      EXPECT_EQ(encode(p, ids).dimension(), H);
    }
  }
}

// Every parameter of every tensor against central differences.
void gradient_check(bool teacher_forcing, std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t V = 12, D = 3, H = 4;
  LstmParams p = random_params(rng, V, D, H);
  const std::vector<std::vector<TokenId>> corpus = {{4, 5, 6, 7, 8, 9}, {10, 11, 4}};
  auto total_loss = [&](const LstmParams& params) {
    double s = 0.0;
    for (const auto& ids : corpus) s += sequence_loss(params, ids, teacher_forcing, nullptr);
    return s;
  };
  LstmParams grad = LstmParams::zeros(V, D, H);
  for (const auto& ids : corpus) sequence_loss(p, ids, teacher_forcing, &grad);

  std::vector<Matrix*> grads;
  grad.for_each_tensor([&](std::string_view, Matrix& m) { grads.push_back(&m); });
  std::size_t k = 0;
  double worst = 0.0;
  p.for_each_tensor([&](std::string_view name, Matrix& m) {
    const Matrix& g = *grads[k++];
    for (std::size_t i = 0; i < m.data.size(); ++i) {
      const double saved = m.data[i], h = 1e-5;
      m.data[i] = saved + h;
      const double up = total_loss(p);
      m.data[i] = saved - h;
      const double down = total_loss(p);
      m.data[i] = saved;
      const double numeric = (up - down) / (2 * h);
      const double err = std::abs(numeric - g.data[i]) / std::max(1e-7, std::abs(numeric) + std::abs(g.data[i]));
      worst = std::max(worst, err);
      EXPECT_LE(err, 1e-4) << name << "[" << i << "] analytic " << g.data[i] << " numeric " << numeric;
    }
  });
  EXPECT_LE(worst, 1e-4);
}

TEST(LstmGradient, TeacherForcedMatchesFiniteDifferences) {
  gradient_check(true, 7);
  gradient_check(true, 8);
}

TEST(LstmGradient, FreeRunningMatchesFiniteDifferences) { gradient_check(false, 9); }

TEST(LstmReconstruct, ZeroModelRepeatsLowestId) {
  const LstmParams p = LstmParams::zeros(9, 3, 4);
  const std::vector<TokenId> ids = {5, 6, 7};
  EXPECT_EQ(reconstruct(p, ids, 4), (std::vector<TokenId>{0, 0, 0, 0}));
  EXPECT_EQ(reconstruct(p, ids, 1).size(), 1u);
  EXPECT_TRUE(reconstruct(p, ids, 0).empty());
}

struct ToyCorpus {
  Vocabulary vocab;
  std::vector<std::vector<TokenId>> sequences;
};

// 30 sequences of length 2..6 over eight tokens (|V| = 12 with specials).
ToyCorpus toy_corpus(std::uint64_t seed) {
  Rng rng(seed);
  std::vector<TokenSequence> seqs;
  for (int i = 0; i < 30; ++i) {
    TokenSequence s;
    for (std::size_t n = 2 + rng.below(5); n > 0; --n) s.tokens.push_back(std::string(1, static_cast<char>('a' + rng.below(8))));
    s.source_length = s.size();
    seqs.push_back(s);
  }
  ToyCorpus c{Vocabulary::build(seqs, 1), {}};
  for (const auto& s : seqs) c.sequences.push_back(c.vocab.encode(s));
  return c;
}

double reconstruction_accuracy(const LstmParams& p, const std::vector<std::vector<TokenId>>& seqs) {
  std::size_t hit = 0, total = 0;
  for (const auto& ids : seqs) {
    const auto out = reconstruct(p, ids, ids.size() + 2);
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (i < out.size() && out[i] == ids[i]) ++hit;
    }
    total += ids.size();
  }
  return static_cast<double>(hit) / static_cast<double>(total);
}

LstmConfig toy_config() {
  LstmConfig c;
  c.input_size = 8;
  c.hidden_size = 16;
  c.epochs = 300;
  c.seed = 3;
  return c;
}

const LstmModel& toy_model() {
  static const LstmModel m = [] {
    ToyCorpus c = toy_corpus(1);
    return train_autoencoder(c.vocab, c.sequences, toy_config());
  }();
  return m;
}

TEST(LstmTraining, MemorizesToyCorpus) {
  const ToyCorpus c = toy_corpus(1);
  EXPECT_LE(c.vocab.size(), 12u);
  EXPECT_GE(reconstruction_accuracy(toy_model().params, c.sequences), 0.95);
  EXPECT_LT(toy_model().epoch_losses.back(), toy_model().epoch_losses.front());
}

TEST(LstmTraining, TrainingSequenceReconstructsItself) {
  const ToyCorpus c = toy_corpus(1);
  std::size_t exact = 0;
  for (const auto& ids : c.sequences) {
    if (reconstruct(toy_model().params, ids, 10) == ids) ++exact;
  }
  EXPECT_GE(exact, 27u);
}

TEST(LstmTraining, ClippedNormNeverExceedsBound) {
  const ToyCorpus c = toy_corpus(2);
  LstmConfig cfg = toy_config();
  cfg.epochs = 5;
  cfg.grad_clip = 0.05;
  const LstmModel m = train_autoencoder(c.vocab, c.sequences, cfg);
  ASSERT_EQ(m.step_grad_norms.size(), 5u * 30u);
  std::size_t clipped = 0;
  for (double n : m.step_grad_norms) {
    EXPECT_LE(n, cfg.grad_clip + 1e-9);
    if (n == cfg.grad_clip) ++clipped;
  }
  EXPECT_GT(clipped, 0u);
}

TEST(LstmTraining, OrderSensitiveEncoding) {
  const auto& p = toy_model().params;
  const std::vector<TokenId> ab = {4, 5}, ba = {5, 4};
  EXPECT_NE(encode(p, ab), encode(p, ba));
}

TEST(LstmTraining, DeterministicForFixedSeed) {
  const ToyCorpus c = toy_corpus(2);
  LstmConfig cfg = toy_config();
  cfg.epochs = 3;
  const LstmModel a = train_autoencoder(c.vocab, c.sequences, cfg);
  const LstmModel b = train_autoencoder(c.vocab, c.sequences, cfg);
  EXPECT_EQ(a.params.embedding, b.params.embedding);
  EXPECT_EQ(a.params.projection, b.params.projection);
  EXPECT_EQ(a.epoch_losses, b.epoch_losses);
}

TEST(LstmEmbedder, RejectsEmptyQueries) {
  LstmConfig cfg;
  cfg.input_size = 4;
  cfg.hidden_size = 5;
  cfg.epochs = 1;
  const LstmEmbedder e(train_autoencoder(testing::four_template_log(2, 1), cfg));
  EXPECT_EQ(e.embed("SELECT * FROM orders").dimension(), 5u);
  EXPECT_THROW(e.embed("/* nothing */"), EmptyQueryError);
}

TEST(LstmConfig, ValidationAndJson) {
  LstmConfig c;
  c.hidden_size = 0;
  EXPECT_THROW(c.validate(), Error);
  c = LstmConfig{};
  c.grad_clip = 0;
  EXPECT_THROW(c.validate(), Error);
  const LstmConfig d = toy_config();
  EXPECT_EQ(LstmConfig::from_json(d.to_json()).to_json(), d.to_json());
}

}  // namespace
}  // namespace querc
