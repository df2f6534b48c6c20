#include <algorithm>
#include <cmath>
#include <limits>

#include "querc/errors.hpp"
#include "querc/kernels.hpp"
#include "querc/random.hpp"
#include "querc/summarizer.hpp"

namespace querc {

namespace {

// Returns true if any assignment changed.
bool assign(const Matrix& points, const Matrix& centroids, std::vector<std::size_t>& assignments,
            std::vector<double>& dist) {
  bool changed = false;
  for (std::size_t i = 0; i < points.rows; ++i) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < centroids.rows; ++j) {
      const double d = kernels::squared_distance(points.row(i), centroids.row(j));
      if (d < best_d) {
        best_d = d;
        best = j;
      }
    }
    if (assignments[i] != best) {
      assignments[i] = best;
      changed = true;
    }
    dist[i] = best_d;
  }
  return changed;
}

// Recomputes means; reseeds empty clusters. Returns true if a cluster was reseeded.
bool update_centroids(const Matrix& points, Matrix& centroids, const std::vector<std::size_t>& assignments) {
  const std::size_t k = centroids.rows;
  std::vector<std::size_t> counts(k, 0);
  centroids.fill(0.0);
  for (std::size_t i = 0; i < points.rows; ++i) {
    kernels::axpy(1.0, points.row(i), centroids.row(assignments[i]));
    ++counts[assignments[i]];
  }
  for (std::size_t j = 0; j < k; ++j) {
    if (counts[j] > 0) kernels::scale(1.0 / static_cast<double>(counts[j]), centroids.row(j));
  }
  bool reseeded = false;
  std::vector<double> own(points.rows);
  for (std::size_t i = 0; i < points.rows; ++i) {
    own[i] = kernels::squared_distance(points.row(i), centroids.row(assignments[i]));
  }
  for (std::size_t j = 0; j < k; ++j) {
    if (counts[j] > 0) continue;
    std::size_t far = 0;
    for (std::size_t i = 1; i < points.rows; ++i) {
      if (own[i] > own[far]) far = i;
    }
    // Nothing distinct left to seed from; the cluster stays empty.
    if (own[far] <= 0.0) continue;
    std::copy(points.row(far).begin(), points.row(far).end(), centroids.row(j).begin());
    own[far] = 0.0;
    reseeded = true;
  }
  return reseeded;
}

Matrix kmeans_plus_plus(const Matrix& points, std::size_t k, Rng& rng) {
  const std::size_t n = points.rows;
  Matrix centroids(k, points.cols);
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());
  std::size_t pick = rng.below(n);
  for (std::size_t j = 0; j < k; ++j) {
    if (j > 0) {
      double total = 0.0;
      for (double v : d2) total += v;
      if (total <= 0.0) {
        pick = rng.below(n);
      } else {
        const double u = rng.uniform() * total;
        double acc = 0.0;
        pick = n - 1;
        for (std::size_t i = 0; i < n; ++i) {
          acc += d2[i];
          if (acc > u) {
            pick = i;
            break;
          }
        }
      }
    }
    std::copy(points.row(pick).begin(), points.row(pick).end(), centroids.row(j).begin());
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], kernels::squared_distance(points.row(i), centroids.row(j)));
    }
  }
  return centroids;
}

}  // namespace

double total_sse(const Matrix& points, const Matrix& centroids, std::span<const std::size_t> assignments) {
  double sse = 0.0;
  for (std::size_t i = 0; i < points.rows; ++i) {
    sse += kernels::squared_distance(points.row(i), centroids.row(assignments[i]));
  }
  return sse;
}

KMeansResult lloyd(const Matrix& points, Matrix centroids, std::size_t max_iterations) {
  KMeansResult r;
  r.assignments.assign(points.rows, 0);
  std::vector<double> dist(points.rows);
  assign(points, centroids, r.assignments, dist);
  for (std::size_t it = 1; it <= max_iterations; ++it) {
    r.iterations = it;
    const bool reseeded = update_centroids(points, centroids, r.assignments);
    const bool changed = assign(points, centroids, r.assignments, dist);
    if (!changed && !reseeded) break;
  }
  r.centroids = std::move(centroids);
  r.sse = 0.0;
  for (double d : dist) r.sse += d;
  return r;
}

KMeansResult kmeans(const Matrix& points, std::size_t k, std::uint64_t seed, const KMeansOptions& options) {
  if (k < 1 || k > points.rows) {
    throw Error("kmeans: k=" + std::to_string(k) + " outside [1, " + std::to_string(points.rows) + "]");
  }
  KMeansResult best;
  best.sse = std::numeric_limits<double>::infinity();
  const std::size_t restarts = std::max<std::size_t>(1, options.restarts);
  for (std::size_t r = 0; r < restarts; ++r) {
    Rng rng(derive_seed(seed, r));
    KMeansResult run = lloyd(points, kmeans_plus_plus(points, k, rng), options.max_iterations);
    if (run.sse < best.sse) best = std::move(run);
  }
  return best;
}

ElbowResult choose_k(const Matrix& points, std::size_t k_max, double epsilon, std::uint64_t seed) {
  constexpr double kRemainingShare = 1.0 / 3.0;
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw Error("choose_k: epsilon must be in (0, 1)");
  ElbowResult out;
  if (points.rows < 2) {
    out.k = 1;
    if (points.rows == 1) {
      out.clustering = kmeans(points, 1, seed);
      out.sse_curve.emplace_back(1, out.clustering.sse);
    }
    return out;
  }
  if (k_max < 2) throw Error("choose_k: k_max must be >= 2");
  k_max = std::min(k_max, points.rows);

  std::vector<KMeansResult> runs;
  for (std::size_t k = 1; k <= k_max; ++k) {
    KMeansResult run = kmeans(points, k, derive_seed(seed, k));
    if (k > 1) {
      // Warm start: previous centroids plus the worst-fit point.
      const KMeansResult& prev = runs.back();
      std::size_t far = 0;
      double far_d = -1.0;
      for (std::size_t i = 0; i < points.rows; ++i) {
        const double d = kernels::squared_distance(points.row(i), prev.centroids.row(prev.assignments[i]));
        if (d > far_d) {
          far_d = d;
          far = i;
        }
      }
      Matrix init(k, points.cols);
      std::copy(prev.centroids.data.begin(), prev.centroids.data.end(), init.data.begin());
      std::copy(points.row(far).begin(), points.row(far).end(), init.row(k - 1).begin());
      KMeansResult warm = lloyd(points, std::move(init));
      if (warm.sse < run.sse) run = std::move(warm);
    }
    out.sse_curve.emplace_back(k, run.sse);
    runs.push_back(std::move(run));

    if (runs.back().sse <= 0.0) {
      out.k = k;
      out.clustering = std::move(runs.back());
      return out;
    }
    if (k >= 2) {
      const double drop = runs[k - 2].sse - runs[k - 1].sse;
      if (drop / runs.front().sse < epsilon && drop / runs[k - 2].sse < kRemainingShare) {
        out.k = k - 1;
        out.clustering = std::move(runs[k - 2]);
        return out;
      }
    }
  }
  out.k = k_max;
  out.clustering = std::move(runs.back());
  return out;
}

Matrix to_matrix(std::span<const EmbeddingVector> vectors) {
  if (vectors.empty()) return {};
  const std::size_t d = vectors.front().dimension();
  Matrix m(vectors.size(), d);
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    if (vectors[i].dimension() != d) throw Error("vectors have mixed dimensions");
    std::copy(vectors[i].values().begin(), vectors[i].values().end(), m.row(i).begin());
  }
  return m;
}

}  // namespace querc
