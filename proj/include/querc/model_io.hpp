#pragma once

// Binary model container shared by every trained artifact.
//
// Layout (all integers little-endian):
//   "QRC1" | u32 format_version | u8 kind | u32 section_count
//   section_count x { u32 name_len | name | u8 type | u64 payload_len | payload }
//
// Payloads by type:
//   matrix  u64 rows | u64 cols | rows*cols f64 (row-major, IEEE-754 bits)
//   strings u64 count | count x { u32 len | bytes | u64 count }
//   json    UTF-8 text
//
// The writer is deterministic, so save -> load -> save is byte-identical.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "json.hpp"
#include "querc/matrix.hpp"

namespace querc {

inline constexpr std::uint32_t kModelFormatVersion = 1;

enum class ModelKind : std::uint8_t { doc2vec = 1, lstm_autoencoder = 2, forest_classifier = 3 };

std::string_view to_string(ModelKind kind);

// Token strings with an attached count (vocabulary frequencies, class labels).
struct StringTable {
  std::vector<std::string> entries;
  std::vector<std::uint64_t> counts;

  bool operator==(const StringTable&) const = default;
};

using SectionValue = std::variant<Matrix, StringTable, nlohmann::json>;

struct Section {
  std::string name;
  SectionValue value;
};

struct ModelArtifact {
  ModelKind kind = ModelKind::doc2vec;
  std::uint32_t format_version = kModelFormatVersion;
  std::vector<Section> sections;

  void add(std::string name, SectionValue value) { sections.push_back({std::move(name), std::move(value)}); }

  // Throw FormatError when the section is missing or has another type.
  const Matrix& matrix(std::string_view name) const;
  const StringTable& strings(std::string_view name) const;
  const nlohmann::json& json(std::string_view name) const;
  bool has(std::string_view name) const;
};

std::string serialize_model(const ModelArtifact& model);
ModelArtifact deserialize_model(std::string_view bytes);

void save_model(const ModelArtifact& model, const std::filesystem::path& path);
ModelArtifact load_model(const std::filesystem::path& path);
// Fails with KindMismatchError after reading only the header.
ModelArtifact load_model(const std::filesystem::path& path, ModelKind expected);
// Reads just the header.
ModelKind peek_model_kind(const std::filesystem::path& path);

}  // namespace querc
