#include "querc/model_io.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "querc/errors.hpp"

namespace querc {

namespace {

constexpr std::array<char, 4> kMagic{'Q', 'R', 'C', '1'};
constexpr std::size_t kHeaderSize = 4 + 4 + 1 + 4;

enum class SectionType : std::uint8_t { matrix = 1, strings = 2, json = 3 };

class Writer {
 public:
  void bytes(std::string_view s) { out_.append(s); }
  void u8(std::uint8_t v) { out_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) { put_le(v); }
  void u64(std::uint64_t v) { put_le(v); }
  void f64(double v) { put_le(std::bit_cast<std::uint64_t>(v)); }
  std::string take() { return std::move(out_); }
  std::size_t size() const { return out_.size(); }

 private:
  template <typename T>
  void put_le(T v) {
    for (std::size_t i = 0; i < sizeof(T); ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  std::string out_;
};

class Reader {
 public:
  explicit Reader(std::string_view in) : in_(in) {}

  std::string_view bytes(std::size_t n, const char* what) {
    if (n > in_.size() - pos_) {
      throw FormatError(std::string("truncated model file while reading ") + what);
    }
    auto s = in_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::uint8_t u8(const char* what) { return static_cast<std::uint8_t>(bytes(1, what)[0]); }
  std::uint32_t u32(const char* what) { return get_le<std::uint32_t>(what); }
  std::uint64_t u64(const char* what) { return get_le<std::uint64_t>(what); }
  double f64(const char* what) { return std::bit_cast<double>(get_le<std::uint64_t>(what)); }
  bool done() const { return pos_ == in_.size(); }
  std::size_t remaining() const { return in_.size() - pos_; }

 private:
  template <typename T>
  T get_le(const char* what) {
    auto b = bytes(sizeof(T), what);
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(static_cast<unsigned char>(b[i])) << (8 * i);
    return v;
  }
  std::string_view in_;
  std::size_t pos_ = 0;
};

void write_payload(Writer& w, const Matrix& m) {
  w.u64(m.rows);
  w.u64(m.cols);
  for (double v : m.data) w.f64(v);
}

void write_payload(Writer& w, const StringTable& t) {
  w.u64(t.entries.size());
  for (std::size_t i = 0; i < t.entries.size(); ++i) {
    w.u32(static_cast<std::uint32_t>(t.entries[i].size()));
    w.bytes(t.entries[i]);
    w.u64(i < t.counts.size() ? t.counts[i] : 0);
  }
}

void write_payload(Writer& w, const nlohmann::json& j) { w.bytes(j.dump()); }

SectionType type_of(const SectionValue& v) {
  switch (v.index()) {
    case 0: return SectionType::matrix;
    case 1: return SectionType::strings;
    default: return SectionType::json;
  }
}

ModelKind checked_kind(std::uint8_t tag) {
  if (tag < 1 || tag > 3) throw FormatError("unknown model kind tag " + std::to_string(tag));
  return static_cast<ModelKind>(tag);
}

ModelKind parse_header(Reader& r, std::uint32_t* version_out) {
  auto magic = r.bytes(4, "magic");
  if (std::memcmp(magic.data(), kMagic.data(), 4) != 0) {
    throw FormatError("not a model file: expected magic QRC1");
  }
  const std::uint32_t version = r.u32("format version");
  if (version != kModelFormatVersion) {
    throw FormatError("unsupported model format version: expected " + std::to_string(kModelFormatVersion) +
                      ", found " + std::to_string(version));
  }
  if (version_out != nullptr) *version_out = version;
  return checked_kind(r.u8("kind"));
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read model file " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::doc2vec: return "doc2vec";
    case ModelKind::lstm_autoencoder: return "lstm_autoencoder";
    case ModelKind::forest_classifier: return "forest_classifier";
  }
  return "unknown";
}

const Matrix& ModelArtifact::matrix(std::string_view name) const {
  for (const auto& s : sections) {
    if (s.name == name) {
      if (const auto* m = std::get_if<Matrix>(&s.value)) return *m;
      throw FormatError("section '" + std::string(name) + "' is not a matrix");
    }
  }
  throw FormatError("missing section '" + std::string(name) + "'");
}

const StringTable& ModelArtifact::strings(std::string_view name) const {
  for (const auto& s : sections) {
    if (s.name == name) {
      if (const auto* t = std::get_if<StringTable>(&s.value)) return *t;
      throw FormatError("section '" + std::string(name) + "' is not a string table");
    }
  }
  throw FormatError("missing section '" + std::string(name) + "'");
}

const nlohmann::json& ModelArtifact::json(std::string_view name) const {
  for (const auto& s : sections) {
    if (s.name == name) {
      if (const auto* j = std::get_if<nlohmann::json>(&s.value)) return *j;
      throw FormatError("section '" + std::string(name) + "' is not JSON");
    }
  }
  throw FormatError("missing section '" + std::string(name) + "'");
}

bool ModelArtifact::has(std::string_view name) const {
  for (const auto& s : sections) {
    if (s.name == name) return true;
  }
  return false;
}

std::string serialize_model(const ModelArtifact& model) {
  Writer w;
  w.bytes({kMagic.data(), kMagic.size()});
  w.u32(model.format_version);
  w.u8(static_cast<std::uint8_t>(model.kind));
  w.u32(static_cast<std::uint32_t>(model.sections.size()));
  for (const auto& s : model.sections) {
    w.u32(static_cast<std::uint32_t>(s.name.size()));
    w.bytes(s.name);
    w.u8(static_cast<std::uint8_t>(type_of(s.value)));
    Writer payload;
    std::visit([&](const auto& v) { write_payload(payload, v); }, s.value);
    w.u64(payload.size());
    w.bytes(payload.take());
  }
  return w.take();
}

ModelArtifact deserialize_model(std::string_view bytes) {
  Reader r(bytes);
  ModelArtifact model;
  model.kind = parse_header(r, &model.format_version);
  const std::uint32_t count = r.u32("section count");
  for (std::uint32_t i = 0; i < count; ++i) {
    Section s;
    s.name = std::string(r.bytes(r.u32("section name length"), "section name"));
    const auto type = r.u8("section type");
    const std::uint64_t len = r.u64("section length");
    if (len > r.remaining()) throw FormatError("truncated model file in section '" + s.name + "'");
    Reader p(r.bytes(static_cast<std::size_t>(len), "section payload"));
    switch (static_cast<SectionType>(type)) {
      case SectionType::matrix: {
        Matrix m;
        m.rows = p.u64("matrix rows");
        m.cols = p.u64("matrix cols");
        if (m.cols != 0 && m.rows > p.remaining() / 8 / m.cols) {
          throw FormatError("matrix '" + s.name + "' size exceeds payload");
        }
        m.data.resize(m.rows * m.cols);
        for (auto& v : m.data) v = p.f64("matrix data");
        s.value = std::move(m);
        break;
      }
      case SectionType::strings: {
        StringTable t;
        const std::uint64_t n = p.u64("string count");
        if (n > p.remaining()) throw FormatError("string table '" + s.name + "' size exceeds payload");
        for (std::uint64_t k = 0; k < n; ++k) {
          t.entries.emplace_back(p.bytes(p.u32("string length"), "string bytes"));
          t.counts.push_back(p.u64("string count value"));
        }
        s.value = std::move(t);
        break;
      }
      case SectionType::json: {
        auto text = p.bytes(p.remaining(), "json");
        try {
          s.value = nlohmann::json::parse(text);
        } catch (const nlohmann::json::exception& e) {
          throw FormatError("section '" + s.name + "' holds invalid JSON: " + e.what());
        }
        break;
      }
      default:
        throw FormatError("unknown section type " + std::to_string(type) + " in '" + s.name + "'");
    }
    if (!p.done()) throw FormatError("trailing bytes in section '" + s.name + "'");
    model.sections.push_back(std::move(s));
  }
  if (!r.done()) throw FormatError("trailing bytes after last section");
  return model;
}

void save_model(const ModelArtifact& model, const std::filesystem::path& path) {
  const std::string bytes = serialize_model(model);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write model file " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("write failed for " + path.string());
}

ModelArtifact load_model(const std::filesystem::path& path) { return deserialize_model(read_file(path)); }

ModelKind peek_model_kind(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read model file " + path.string());
  std::string header(kHeaderSize, '\0');
  in.read(header.data(), static_cast<std::streamsize>(header.size()));
  header.resize(static_cast<std::size_t>(in.gcount()));
  Reader r(header);
  return parse_header(r, nullptr);
}

ModelArtifact load_model(const std::filesystem::path& path, ModelKind expected) {
  const ModelKind found = peek_model_kind(path);
  if (found != expected) {
    throw KindMismatchError("model " + path.string() + " has kind " + std::string(to_string(found)) +
                            ", expected " + std::string(to_string(expected)));
  }
  return load_model(path);
}

}  // namespace querc
