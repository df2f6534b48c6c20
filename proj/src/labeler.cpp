#include <algorithm>
#include <cstring>
#include <numeric>

#include "querc/errors.hpp"
#include "querc/labeler.hpp"
#include "querc/random.hpp"

namespace querc {

namespace {

std::uint64_t example_key(std::uint64_t seed, std::span<const double> v, std::string_view label) {
  std::uint64_t h = fnv1a(label, splitmix64(seed));
  h = fnv1a({reinterpret_cast<const char*>(v.data()), v.size() * sizeof(double)}, h);
  return splitmix64(h);
}

Matrix select_rows(const Matrix& x, std::span<const std::size_t> rows) {
  Matrix out(rows.size(), x.cols);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    std::copy(x.row(rows[r]).begin(), x.row(rows[r]).end(), out.row(r).begin());
  }
  return out;
}

}  // namespace

CrossValidation cross_validate(const Matrix& x, std::span<const std::string> y, std::size_t folds,
                               const ForestConfig& config) {
  if (folds < 2) throw Error("cross_validate: folds must be >= 2");
  if (x.rows != y.size()) throw Error("cross_validate: X and y differ in length");
  if (x.rows < folds) throw Error("cross_validate: fewer samples than folds");

  const std::size_t n = x.rows;
  std::vector<std::uint64_t> keys(n);
  for (std::size_t i = 0; i < n; ++i) keys[i] = example_key(config.seed, x.row(i), y[i]);

  // Group by label, order each group by key; identical (vector, label)
  // pairs tie and are interchangeable.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (y[a] != y[b]) return y[a] < y[b];
    return keys[a] < keys[b];
  });

  CrossValidation cv;
  cv.fold_of.assign(n, 0);
  cv.predicted.assign(n, {});
  std::size_t next = 0;
  for (std::size_t i : order) {
    cv.fold_of[i] = next;
    next = (next + 1) % folds;
  }

  double sum = 0.0;
  std::size_t used = 0;
  for (std::size_t f = 0; f < folds; ++f) {
    std::vector<std::size_t> train, test;
    for (std::size_t i : order) (cv.fold_of[i] == f ? test : train).push_back(i);
    if (test.empty()) {
      cv.fold_accuracy.push_back(0.0);
      continue;
    }
    std::vector<std::string> train_y;
    train_y.reserve(train.size());
    for (std::size_t i : train) train_y.push_back(y[i]);
    const ForestModel model = train_forest(select_rows(x, train), train_y, config);
    std::size_t correct = 0;
    for (std::size_t i : test) {
      cv.predicted[i] = model.predict(x.row(i)).label;
      if (cv.predicted[i] == y[i]) ++correct;
    }
    const double acc = static_cast<double>(correct) / static_cast<double>(test.size());
    cv.fold_accuracy.push_back(acc);
    sum += acc;
    ++used;
  }
  cv.accuracy = sum / static_cast<double>(used);
  return cv;
}

}  // namespace querc
