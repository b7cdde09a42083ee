#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tgl/matrix.hpp"

namespace tgl {

// Which operand dimension is partitioned across workers:
//   Inner      — rows of X; each thread computes whole output cells as
//                row-by-column dot products.
//   Outer      — the shared k dimension (columns of X / rows of Y); each
//                thread accumulates rank-1 partial sums.
//   RowWise    — rows of X; each output row accumulates scaled rows of Y.
//   ColumnWise — columns of Y; each output column accumulates scaled
//                columns of X.
enum class MMStrategy { Inner, Outer, RowWise, ColumnWise };

const char* strategy_name(MMStrategy s);
MMStrategy strategy_from_name(const std::string& name);  // throws ConfigError

struct KernelTiming {
  std::string label;
  MMStrategy strategy;
  int threads = 1;
  std::int64_t wall_ns = 0;
  std::size_t m = 0;  // operand shapes: (m, k) x (k, n)
  std::size_t k = 0;
  std::size_t n = 0;
};

// Z = X * Y with the given partitioning strategy on the shared worker pool.
// Thread counts above the partitionable dimension are clamped. Summation
// order per output cell is ascending k for Inner/RowWise/ColumnWise, so
// those three are bitwise identical to the sequential triple loop at any
// thread count. Outer accumulates per-thread partial buffers over
// contiguous k blocks, reduced in ascending thread-id order.
Matrix matmul(const Matrix& x, const Matrix& y, MMStrategy s, int threads);

// As matmul, but for Outer the output cells are updated with atomic
// fetch-adds instead of private buffers. Accumulation order is then
// scheduling-dependent; results agree with the oracle within 1e-9.
Matrix matmul_outer_atomic(const Matrix& x, const Matrix& y, int threads);

// As matmul; wall time covers compute only, not allocation.
std::pair<Matrix, KernelTiming> matmul_timed(const Matrix& x, const Matrix& y, MMStrategy s,
                                             int threads, const std::string& label);

// Sequential i-j-k triple loop. Reference implementation for tests and for
// equivalence auditing; kept free of any strategy dispatch.
Matrix matmul_naive(const Matrix& x, const Matrix& y);

}  // namespace tgl
