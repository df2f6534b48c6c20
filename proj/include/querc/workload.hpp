#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace querc {

// A query plus its label channels (user, account, cluster, ...).
struct LabeledQuery {
  std::string query_text;
  std::map<std::string, std::string, std::less<>> labels;
  std::optional<std::int64_t> timestamp;
  std::optional<std::int64_t> runtime_ms;
  std::optional<std::string> error_code;

  const std::string* label(std::string_view channel) const {
    auto it = labels.find(channel);
    return it == labels.end() ? nullptr : &it->second;
  }

  bool operator==(const LabeledQuery&) const = default;
};

// Returns an empty string when the record is valid, otherwise the reason it is not.
std::string validate(const LabeledQuery& q);

struct WorkloadLog {
  std::vector<LabeledQuery> records;
  std::string source_id;

  std::size_t size() const { return records.size(); }
  bool empty() const { return records.empty(); }
};

// Fixed-dimension real vector with finite entries.
class EmbeddingVector {
 public:
  EmbeddingVector() = default;
  explicit EmbeddingVector(std::vector<double> values);

  std::size_t dimension() const { return values_.size(); }
  std::span<const double> values() const { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }

  bool operator==(const EmbeddingVector&) const = default;

 private:
  std::vector<double> values_;
};

double cosine_similarity(std::span<const double> a, std::span<const double> b);

}  // namespace querc
