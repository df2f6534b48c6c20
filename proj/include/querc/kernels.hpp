#pragma once

// Dense double-precision inner loops used by the embedders and k-means.
//
// Every kernel has a scalar reference implementation. On x86-64 an AVX2/FMA
// variant is built as well and chosen at runtime when the CPU supports it.
// The environment variable QUERC_KERNELS=scalar forces the reference path.

#include <cstddef>
#include <span>
#include <string_view>

namespace querc::kernels {

enum class Isa { scalar, avx2 };

struct KernelTable {
  double (*dot)(const double* a, const double* b, std::size_t n);
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  double (*squared_distance)(const double* a, const double* b, std::size_t n);
  void (*scale)(double alpha, double* x, std::size_t n);
};

const KernelTable& scalar_table();
// nullptr when the AVX2 variant was not compiled in or the CPU lacks AVX2/FMA.
const KernelTable* avx2_table();

Isa active_isa();
std::string_view isa_name(Isa isa);
// Overrides runtime selection; used by equivalence tests and benchmarks.
// Returns false if the requested ISA is unavailable.
bool force_isa(Isa isa);

const KernelTable& active();

inline double dot(std::span<const double> a, std::span<const double> b) {
  return active().dot(a.data(), b.data(), a.size());
}

// y += alpha * x
inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  active().axpy(alpha, x.data(), y.data(), x.size());
}

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  return active().squared_distance(a.data(), b.data(), a.size());
}

inline void scale(double alpha, std::span<double> x) {
  active().scale(alpha, x.data(), x.size());
}

// y += A x, A row-major rows x cols.
inline void gemv(std::span<const double> a, std::size_t rows, std::size_t cols,
                 std::span<const double> x, std::span<double> y) {
  const auto& k = active();
  for (std::size_t r = 0; r < rows; ++r) y[r] += k.dot(a.data() + r * cols, x.data(), cols);
}

// y += A^T x, A row-major rows x cols, x has `rows` entries, y has `cols`.
inline void gemv_transposed(std::span<const double> a, std::size_t rows, std::size_t cols,
                            std::span<const double> x, std::span<double> y) {
  const auto& k = active();
  for (std::size_t r = 0; r < rows; ++r) {
    if (x[r] != 0.0) k.axpy(x[r], a.data() + r * cols, y.data(), cols);
  }
}

// A += alpha * x y^T
inline void rank1_update(double alpha, std::span<const double> x, std::span<const double> y,
                         std::span<double> a) {
  const auto& k = active();
  const std::size_t cols = y.size();
  for (std::size_t r = 0; r < x.size(); ++r) {
    if (x[r] != 0.0) k.axpy(alpha * x[r], y.data(), a.data() + r * cols, cols);
  }
}

}  // namespace querc::kernels
