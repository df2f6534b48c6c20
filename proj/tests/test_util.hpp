#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include <unistd.h>

#include "querc/matrix.hpp"
#include "querc/random.hpp"
#include "querc/workload.hpp"

namespace querc::testing {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "querc") {
    static std::uint64_t counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            (tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::string read_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

inline Matrix random_matrix(Rng& rng, std::size_t rows, std::size_t cols, double lo = -1.0, double hi = 1.0) {
  Matrix m(rows, cols);
  for (auto& v : m.data) v = rng.uniform(lo, hi);
  return m;
}

inline LabeledQuery query(std::string text, std::vector<std::pair<std::string, std::string>> labels = {}) {
  LabeledQuery q;
  q.query_text = std::move(text);
  for (auto& [k, v] : labels) q.labels.emplace(std::move(k), std::move(v));
  return q;
}

// `per_template` instances of each of four structurally different query shapes.
inline WorkloadLog four_template_log(std::size_t per_template, std::uint64_t seed) {
  static const char* shapes[] = {
      "SELECT * FROM orders WHERE custkey = {} AND status = '{}'",
      "SELECT region, COUNT(*) FROM sales WHERE day BETWEEN {} AND {} GROUP BY region ORDER BY region",
      "UPDATE accounts SET balance = balance - {} WHERE id IN ({}, {})",
      "INSERT INTO events (kind, ts, payload) VALUES ('{}', {}, '{}')",
  };
  Rng rng(seed);
  WorkloadLog log;
  for (std::size_t i = 0; i < per_template; ++i) {
    for (std::size_t t = 0; t < 4; ++t) {
      std::string text = shapes[t];
      std::size_t pos;
      while ((pos = text.find("{}")) != std::string::npos) text.replace(pos, 2, std::to_string(rng.below(100000)));
      log.records.push_back(query(text, {{"template", "t" + std::to_string(t)}}));
    }
  }
  return log;
}

}  // namespace querc::testing
