#include <gtest/gtest.h>

#include <cstring>

#include "querc/doc2vec.hpp"
#include "querc/errors.hpp"
#include "querc/labeler.hpp"
#include "querc/lstm.hpp"
#include "querc/model_io.hpp"
#include "test_util.hpp"

namespace querc {
namespace {

using testing::TempDir;

void put_u32(std::string& s, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void put_u64(std::string& s, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

Doc2VecModel small_doc2vec() {
  Doc2VecConfig c;
  c.dimension = 8;
  c.epochs = 3;
  c.seed = 5;
  return train_doc2vec(testing::four_template_log(5, 1), c);
}

LstmModel small_lstm() {
  LstmConfig c;
  c.input_size = 4;
  c.hidden_size = 6;
  c.epochs = 2;
  c.seed = 5;
  return train_autoencoder(testing::four_template_log(3, 2), c);
}

ForestModel small_forest() {
  Rng rng(3);
  Matrix x = testing::random_matrix(rng, 40, 3);
  std::vector<std::string> y;
  for (std::size_t i = 0; i < 40; ++i) y.push_back(x(i, 0) > 0 ? "pos" : "neg");
  ForestConfig c;
  c.n_trees = 5;
  return train_forest(x, y, c);
}

TEST(ModelContainer, ByteLayoutMatchesHandEncoding) {
  ModelArtifact a;
  a.kind = ModelKind::forest_classifier;
  Matrix m(1, 2);
  m(0, 0) = 1.0;
  m(0, 1) = -2.5;
  a.add("m", m);
  a.add("s", StringTable{{"ab"}, {7}});
  a.add("j", nlohmann::json{{"k", 1}});

  std::string want = "QRC1";
  put_u32(want, 1);
  want.push_back(3);
  put_u32(want, 3);

  put_u32(want, 1);
  want += "m";
  want.push_back(1);
  std::string mp;
  put_u64(mp, 1);
  put_u64(mp, 2);
  for (double v : {1.0, -2.5}) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    put_u64(mp, bits);
  }
  put_u64(want, mp.size());
  want += mp;

  put_u32(want, 1);
  want += "s";
  want.push_back(2);
  std::string sp;
  put_u64(sp, 1);
  put_u32(sp, 2);
  sp += "ab";
  put_u64(sp, 7);
  put_u64(want, sp.size());
  want += sp;

  put_u32(want, 1);
  want += "j";
  want.push_back(3);
  const std::string js = R"({"k":1})";
  put_u64(want, js.size());
  want += js;

  EXPECT_EQ(serialize_model(a), want);
  const ModelArtifact b = deserialize_model(want);
  EXPECT_EQ(b.kind, ModelKind::forest_classifier);
  EXPECT_EQ(b.matrix("m"), m);
  EXPECT_EQ(b.strings("s").entries[0], "ab");
  EXPECT_EQ(b.json("j")["k"], 1);
  EXPECT_THROW(b.matrix("s"), FormatError);
  EXPECT_THROW(b.matrix("missing"), FormatError);
}

TEST(ModelContainer, EveryTruncationIsRejected) {
  const std::string bytes = serialize_model(small_forest().to_artifact());
  for (std::size_t n = 0; n < bytes.size(); n += 1 + n / 64) {
    EXPECT_THROW(deserialize_model(std::string_view(bytes).substr(0, n)), FormatError) << n;
  }
  EXPECT_THROW(deserialize_model(bytes + "x"), FormatError);
}

TEST(ModelContainer, WrongMagicAndVersionAreRejected) {
  std::string bytes = serialize_model(small_forest().to_artifact());
  std::string bad_magic = bytes;
  bad_magic[0] = 'X';
  EXPECT_THROW(deserialize_model(bad_magic), FormatError);
  std::string v2 = bytes;
  v2[4] = 2;
  try {
    deserialize_model(v2);
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("expected 1, found 2"), std::string::npos) << e.what();
  }
}

TEST(ModelContainer, KindMismatchOnLoad) {
  TempDir dir;
  save_model(small_forest().to_artifact(), dir / "f.qrc");
  EXPECT_EQ(peek_model_kind(dir / "f.qrc"), ModelKind::forest_classifier);
  EXPECT_THROW(load_model(dir / "f.qrc", ModelKind::lstm_autoencoder), KindMismatchError);
  EXPECT_NO_THROW(load_model(dir / "f.qrc", ModelKind::forest_classifier));
  EXPECT_THROW(load_model(dir / "missing.qrc"), Error);
}

TEST(ModelContainer, Doc2VecRoundTripPreservesParameters) {
  TempDir dir;
  const Doc2VecModel m = small_doc2vec();
  save_model(m.to_artifact(), dir / "d.qrc");
  const Doc2VecModel back = Doc2VecModel::from_artifact(load_model(dir / "d.qrc", ModelKind::doc2vec));
  EXPECT_EQ(back.vocab, m.vocab);
  EXPECT_EQ(back.token_in, m.token_in);
  EXPECT_EQ(back.token_out, m.token_out);
  EXPECT_EQ(back.doc_vectors, m.doc_vectors);
  EXPECT_EQ(back.config.to_json(), m.config.to_json());
}

TEST(ModelContainer, SaveLoadSaveIsByteIdenticalForAllKinds) {
  TempDir dir;
  const std::vector<ModelArtifact> artifacts = {small_doc2vec().to_artifact(), small_lstm().to_artifact(),
                                                small_forest().to_artifact()};
  for (std::size_t i = 0; i < artifacts.size(); ++i) {
    const auto p1 = dir / ("a" + std::to_string(i)), p2 = dir / ("b" + std::to_string(i));
    save_model(artifacts[i], p1);
    ModelArtifact loaded = load_model(p1);
    switch (loaded.kind) {
      case ModelKind::doc2vec: loaded = Doc2VecModel::from_artifact(loaded).to_artifact(); break;
      case ModelKind::lstm_autoencoder: loaded = LstmModel::from_artifact(loaded).to_artifact(); break;
      case ModelKind::forest_classifier: loaded = ForestModel::from_artifact(loaded).to_artifact(); break;
    }
    save_model(loaded, p2);
    EXPECT_EQ(testing::read_bytes(p1), testing::read_bytes(p2)) << to_string(artifacts[i].kind);
  }
}

TEST(ModelContainer, LstmReloadEncodesBitIdentically) {
  TempDir dir;
  const LstmModel m = small_lstm();
  save_model(m.to_artifact(), dir / "l.qrc");
  const LstmModel back = LstmModel::from_artifact(load_model(dir / "l.qrc"));
  const std::vector<TokenId> ids = {4, 5, 6, 0, 7};
  EXPECT_EQ(encode(back.params, ids), encode(m.params, ids));
}

}  // namespace
}  // namespace querc
