#include <algorithm>
#include <cctype>
#include <cmath>

#include "querc/errors.hpp"
#include "querc/workload.hpp"

namespace querc {

namespace {

bool is_blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c) != 0; });
}

}  // namespace

std::string validate(const LabeledQuery& q) {
  if (is_blank(q.query_text)) return "query_text is empty";
  for (const auto& [channel, value] : q.labels) {
    if (channel.empty()) return "empty label channel name";
  }
  if (q.runtime_ms && *q.runtime_ms < 0) return "runtime_ms is negative";
  return {};
}

EmbeddingVector::EmbeddingVector(std::vector<double> values) : values_(std::move(values)) {
  if (values_.empty()) throw Error("embedding vector must have dimension >= 1");
  for (double v : values_) {
    if (!std::isfinite(v)) throw Error("embedding vector has a non-finite entry");
  }
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  if (aa == 0.0 || bb == 0.0) return 0.0;
  return ab / std::sqrt(aa * bb);
}

}  // namespace querc
