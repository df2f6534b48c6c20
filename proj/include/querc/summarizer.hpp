#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "querc/embedder.hpp"
#include "querc/matrix.hpp"
#include "querc/workload.hpp"

namespace querc {

struct KMeansOptions {
  std::size_t restarts = 10;
  std::size_t max_iterations = 300;
};

struct KMeansResult {
  Matrix centroids;                      // k x d
  std::vector<std::size_t> assignments;  // nearest centroid, ties to the lowest id
  double sse = 0.0;
  std::size_t iterations = 0;
};

// k-means++ seeding and Lloyd iterations; the best of `restarts` runs by SSE.
// An empty cluster is reseeded at the point farthest from its own centroid.
// Throws Error if k is outside [1, rows].
KMeansResult kmeans(const Matrix& points, std::size_t k, std::uint64_t seed, const KMeansOptions& options = {});

// Lloyd iterations from the given centroids (no restarts).
KMeansResult lloyd(const Matrix& points, Matrix centroids, std::size_t max_iterations = 300);

double total_sse(const Matrix& points, const Matrix& centroids, std::span<const std::size_t> assignments);

struct ElbowResult {
  std::size_t k = 1;
  std::vector<std::pair<std::size_t, double>> sse_curve;
  KMeansResult clustering;  // the run for the chosen k
};

// Smallest k whose next cluster explains less than `epsilon` of the total
// dispersion, (SSE(k) - SSE(k+1)) / SSE(1) < epsilon, and also removes less
// than a third of what is left, (SSE(k) - SSE(k+1)) / SSE(k) < 1/3.
// SSE(k) == 0 stops at k; no qualifying k yields k_max. The curve is non-increasing: each k also
// tries a warm start from the k-1 solution plus its worst-fit point.
ElbowResult choose_k(const Matrix& points, std::size_t k_max, double epsilon, std::uint64_t seed);

Matrix to_matrix(std::span<const EmbeddingVector> vectors);

struct SummaryParams {
  std::optional<std::size_t> k;
  std::size_t k_max = 0;  // 0: min(floor(sqrt(N)), 50)
  double epsilon = 0.05;
  bool l2_normalize = false;
  std::uint64_t seed = 1;
};

struct Witness {
  std::size_t index = 0;  // into the source log
  LabeledQuery query;
  std::size_t cluster = 0;
  std::size_t cluster_size = 0;
};

struct ExcludedQuery {
  std::size_t index = 0;
  std::string reason;
};

struct WorkloadSummary {
  std::vector<Witness> witnesses;  // ascending index, one per cluster
  std::size_t k = 0;
  double epsilon = 0.0;
  // Per source record: cluster id, or -1 when the record was excluded.
  std::vector<std::int64_t> assignments;
  std::vector<std::pair<std::size_t, double>> sse_curve;
  std::vector<ExcludedQuery> excluded;

  WorkloadLog witness_log() const;
};

// Embeds every query, picks k (given or by elbow), clusters, and keeps the
// member nearest each centroid. Queries the embedder rejects are excluded and
// reported; throws Error if none remain.
WorkloadSummary summarize(const WorkloadLog& log, const Embedder& embedder, const SummaryParams& params);

nlohmann::json to_json(const WorkloadSummary& summary);
WorkloadSummary summary_from_json(const nlohmann::json& j);
void write_summary(const WorkloadSummary& summary, const std::filesystem::path& json_path);
WorkloadSummary read_summary(const std::filesystem::path& json_path);
// One witness query per line, newlines inside a query folded to spaces.
void write_witness_sql(const WorkloadSummary& summary, const std::filesystem::path& sql_path);

}  // namespace querc
