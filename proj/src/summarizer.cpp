#include "querc/summarizer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "querc/errors.hpp"
#include "querc/kernels.hpp"
#include "querc/log_io.hpp"

namespace querc {

WorkloadLog WorkloadSummary::witness_log() const {
  WorkloadLog log;
  log.source_id = "summary";
  for (const auto& w : witnesses) log.records.push_back(w.query);
  return log;
}

WorkloadSummary summarize(const WorkloadLog& log, const Embedder& embedder, const SummaryParams& params) {
  if (log.empty()) throw Error("summarize: workload log is empty");
  WorkloadSummary summary;
  summary.epsilon = params.epsilon;
  summary.assignments.assign(log.size(), -1);

  std::vector<EmbeddingVector> vectors;
  std::vector<std::size_t> source;  // row -> record index
  for (std::size_t i = 0; i < log.size(); ++i) {
    try {
      EmbeddingVector v = embedder.embed(log.records[i].query_text);
      if (v.dimension() != embedder.dimension()) throw Error("embedder returned a vector of the wrong dimension");
      vectors.push_back(std::move(v));
      source.push_back(i);
    } catch (const Error& e) {
      summary.excluded.push_back({i, e.what()});
    }
  }
  if (vectors.empty()) throw Error("summarize: the embedder rejected every query");

  Matrix points = to_matrix(vectors);
  if (params.l2_normalize) {
    for (std::size_t i = 0; i < points.rows; ++i) {
      const double norm = std::sqrt(kernels::dot(points.row(i), points.row(i)));
      if (norm > 0.0) kernels::scale(1.0 / norm, points.row(i));
    }
  }

  KMeansResult clustering;
  if (params.k) {
    clustering = kmeans(points, *params.k, params.seed);
    summary.sse_curve.emplace_back(*params.k, clustering.sse);
  } else {
    std::size_t k_max = params.k_max;
    if (k_max == 0) {
      k_max = std::min<std::size_t>(50, static_cast<std::size_t>(std::sqrt(static_cast<double>(points.rows))));
    }
    k_max = std::max<std::size_t>(2, k_max);
    ElbowResult elbow = choose_k(points, k_max, params.epsilon, params.seed);
    summary.sse_curve = std::move(elbow.sse_curve);
    clustering = std::move(elbow.clustering);
  }

  // Nearest member per cluster; ascending scan keeps the lowest index on ties.
  const std::size_t k = clustering.centroids.rows;
  std::vector<std::size_t> best(k, std::numeric_limits<std::size_t>::max());
  std::vector<double> best_d(k, std::numeric_limits<double>::infinity());
  std::vector<std::size_t> sizes(k, 0);
  for (std::size_t r = 0; r < points.rows; ++r) {
    const std::size_t c = clustering.assignments[r];
    ++sizes[c];
    const double d = kernels::squared_distance(points.row(r), clustering.centroids.row(c));
    if (d < best_d[c]) {
      best_d[c] = d;
      best[c] = r;
    }
  }

  // Drop clusters left empty (possible only with duplicate points) and
  // number the rest by their witness' position in the log.
  std::vector<std::size_t> live;
  for (std::size_t c = 0; c < k; ++c) {
    if (sizes[c] > 0) live.push_back(c);
  }
  std::sort(live.begin(), live.end(), [&](std::size_t a, std::size_t b) { return best[a] < best[b]; });
  std::vector<std::int64_t> renumber(k, -1);
  for (std::size_t n = 0; n < live.size(); ++n) renumber[live[n]] = static_cast<std::int64_t>(n);

  for (std::size_t r = 0; r < points.rows; ++r) {
    summary.assignments[source[r]] = renumber[clustering.assignments[r]];
  }
  for (std::size_t n = 0; n < live.size(); ++n) {
    const std::size_t c = live[n];
    const std::size_t index = source[best[c]];
    summary.witnesses.push_back({index, log.records[index], n, sizes[c]});
  }
  summary.k = live.size();
  return summary;
}

nlohmann::json to_json(const WorkloadSummary& s) {
  nlohmann::json j;
  j["k"] = s.k;
  j["epsilon"] = s.epsilon;
  j["sse_curve"] = nlohmann::json::array();
  for (const auto& [k, sse] : s.sse_curve) j["sse_curve"].push_back({{"k", k}, {"sse", sse}});
  j["witnesses"] = nlohmann::json::array();
  for (const auto& w : s.witnesses) {
    j["witnesses"].push_back({{"index", w.index},
                              {"query_text", w.query.query_text},
                              {"cluster", w.cluster},
                              {"cluster_size", w.cluster_size},
                              {"record", to_json(w.query)}});
  }
  j["assignments"] = s.assignments;
  j["excluded"] = nlohmann::json::array();
  for (const auto& e : s.excluded) j["excluded"].push_back({{"index", e.index}, {"reason", e.reason}});
  return j;
}

WorkloadSummary summary_from_json(const nlohmann::json& j) {
  try {
    WorkloadSummary s;
    s.k = j.at("k").get<std::size_t>();
    s.epsilon = j.at("epsilon").get<double>();
    for (const auto& p : j.at("sse_curve")) s.sse_curve.emplace_back(p.at("k").get<std::size_t>(), p.at("sse").get<double>());
    for (const auto& w : j.at("witnesses")) {
      Witness wit;
      wit.index = w.at("index").get<std::size_t>();
      wit.cluster = w.at("cluster").get<std::size_t>();
      wit.cluster_size = w.at("cluster_size").get<std::size_t>();
      if (w.contains("record")) {
        wit.query = record_from_json(w.at("record"));
      } else {
        wit.query.query_text = w.at("query_text").get<std::string>();
      }
      s.witnesses.push_back(std::move(wit));
    }
    if (j.contains("assignments")) s.assignments = j.at("assignments").get<std::vector<std::int64_t>>();
    if (j.contains("excluded")) {
      for (const auto& e : j.at("excluded")) s.excluded.push_back({e.at("index").get<std::size_t>(), e.at("reason").get<std::string>()});
    }
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("malformed summary: ") + e.what());
  }
}

void write_summary(const WorkloadSummary& summary, const std::filesystem::path& json_path) {
  std::ofstream out(json_path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write summary " + json_path.string());
  out << to_json(summary).dump(2) << '\n';
}

WorkloadSummary read_summary(const std::filesystem::path& json_path) {
  std::ifstream in(json_path);
  if (!in) throw Error("cannot read summary " + json_path.string());
  try {
    return summary_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(std::string("summary is not valid JSON: ") + e.what());
  }
}

void write_witness_sql(const WorkloadSummary& summary, const std::filesystem::path& sql_path) {
  std::ofstream out(sql_path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + sql_path.string());
  for (const auto& w : summary.witnesses) {
    std::string text = w.query.query_text;
    std::replace(text.begin(), text.end(), '\n', ' ');
    std::replace(text.begin(), text.end(), '\r', ' ');
    out << text << '\n';
  }
}

}  // namespace querc
