#include "tgl/mm_kernels.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <memory>

#include "tgl/error.hpp"
#include "tgl/thread_pool.hpp"

namespace tgl {

namespace {

void check_shapes(const Matrix& x, const Matrix& y) {
  if (x.cols() != y.rows()) {
    throw ShapeError("matmul: incompatible shapes " + x.shape_str() + " x " + y.shape_str());
  }
}

// Contiguous block [begin, end) owned by `chunk` when `extent` items are
// split across `chunks` workers, block size ceil(extent / chunks).
struct Block {
  std::size_t begin;
  std::size_t end;
};

Block block_of(std::size_t extent, std::size_t chunks, std::size_t chunk) {
  const std::size_t step = (extent + chunks - 1) / chunks;
  const std::size_t begin = std::min(extent, chunk * step);
  return {begin, std::min(extent, begin + step)};
}

void inner_rows(Matrix& z, const Matrix& x, const Matrix& y, std::size_t r0, std::size_t r1) {
  const std::size_t n = y.cols();
  const std::size_t kk = x.cols();
  for (std::size_t i = r0; i < r1; ++i) {
    const double* xi = x.row(i);
    double* zi = z.row(i);
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < kk; ++k) {
        acc += xi[k] * y(k, j);
      }
      zi[j] = acc;
    }
  }
}

void rowwise_rows(Matrix& z, const Matrix& x, const Matrix& y, std::size_t r0, std::size_t r1) {
  const std::size_t n = y.cols();
  const std::size_t kk = x.cols();
  for (std::size_t i = r0; i < r1; ++i) {
    const double* xi = x.row(i);
    double* zi = z.row(i);
    for (std::size_t k = 0; k < kk; ++k) {
      const double a = xi[k];
      const double* yk = y.row(k);
      for (std::size_t j = 0; j < n; ++j) {
        zi[j] += a * yk[j];
      }
    }
  }
}

void columnwise_cols(Matrix& z, const Matrix& x, const Matrix& y, std::size_t c0, std::size_t c1) {
  const std::size_t m = x.rows();
  const std::size_t kk = x.cols();
  for (std::size_t j = c0; j < c1; ++j) {
    for (std::size_t k = 0; k < kk; ++k) {
      const double b = y(k, j);
      for (std::size_t i = 0; i < m; ++i) {
        z(i, j) += x(i, k) * b;
      }
    }
  }
}

void outer_ks(Matrix& acc, const Matrix& x, const Matrix& y, std::size_t k0, std::size_t k1) {
  const std::size_t m = x.rows();
  const std::size_t n = y.cols();
  for (std::size_t k = k0; k < k1; ++k) {
    const double* yk = y.row(k);
    for (std::size_t i = 0; i < m; ++i) {
      const double a = x(i, k);
      double* ai = acc.row(i);
      for (std::size_t j = 0; j < n; ++j) {
        ai[j] += a * yk[j];
      }
    }
  }
}

int clamp_threads(MMStrategy s, const Matrix& x, const Matrix& y, int threads) {
  std::size_t extent = 0;
  switch (s) {
    case MMStrategy::Inner:
    case MMStrategy::RowWise:
      extent = x.rows();
      break;
    case MMStrategy::ColumnWise:
      extent = y.cols();
      break;
    case MMStrategy::Outer:
      extent = x.cols();
      break;
  }
  return static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(threads), extent));
}

// Scratch preallocated so matmul_timed can exclude allocation from the
// measured window.
struct Scratch {
  std::vector<Matrix> outer_partials;
};

Scratch make_scratch(const Matrix& x, const Matrix& y, MMStrategy s, int threads) {
  Scratch scratch;
  if (s == MMStrategy::Outer) {
    const int used = clamp_threads(s, x, y, threads);
    scratch.outer_partials.assign(static_cast<std::size_t>(used), Matrix(x.rows(), y.cols()));
  }
  return scratch;
}

void matmul_into(Matrix& z, const Matrix& x, const Matrix& y, MMStrategy s, int threads,
                 Scratch& scratch) {
  const int used = clamp_threads(s, x, y, threads);
  if (used == 0) return;  // degenerate empty operand
  const auto chunks = static_cast<std::size_t>(used);
  auto& pool = ThreadPool::instance();

  switch (s) {
    case MMStrategy::Inner:
      pool.run_chunks(chunks, [&](std::size_t c) {
        const Block b = block_of(x.rows(), chunks, c);
        inner_rows(z, x, y, b.begin, b.end);
      });
      break;
    case MMStrategy::RowWise:
      pool.run_chunks(chunks, [&](std::size_t c) {
        const Block b = block_of(x.rows(), chunks, c);
        rowwise_rows(z, x, y, b.begin, b.end);
      });
      break;
    case MMStrategy::ColumnWise:
      pool.run_chunks(chunks, [&](std::size_t c) {
        const Block b = block_of(y.cols(), chunks, c);
        columnwise_cols(z, x, y, b.begin, b.end);
      });
      break;
    case MMStrategy::Outer:
      pool.run_chunks(chunks, [&](std::size_t c) {
        const Block b = block_of(x.cols(), chunks, c);
        outer_ks(scratch.outer_partials[c], x, y, b.begin, b.end);
      });
      // Reduce partial buffers in ascending thread-id order so reruns at a
      // fixed thread count are bit-reproducible.
      for (const Matrix& partial : scratch.outer_partials) {
        for (std::size_t i = 0; i < z.size(); ++i) {
          z.data()[i] += partial.data()[i];
        }
      }
      break;
  }
}

}  // namespace

const char* strategy_name(MMStrategy s) {
  switch (s) {
    case MMStrategy::Inner:
      return "inner";
    case MMStrategy::Outer:
      return "outer";
    case MMStrategy::RowWise:
      return "rowwise";
    case MMStrategy::ColumnWise:
      return "columnwise";
  }
  return "?";
}

MMStrategy strategy_from_name(const std::string& name) {
  std::string key;
  for (char ch : name) {
    if (ch != '-' && ch != '_') key += static_cast<char>(std::tolower(ch));
  }
  if (key == "inner") return MMStrategy::Inner;
  if (key == "outer") return MMStrategy::Outer;
  if (key == "rowwise" || key == "row") return MMStrategy::RowWise;
  if (key == "columnwise" || key == "colwise" || key == "column" || key == "col") {
    return MMStrategy::ColumnWise;
  }
  throw ConfigError("unknown MM strategy '" + name +
                    "' (expected inner|outer|rowwise|columnwise)");
}

Matrix matmul(const Matrix& x, const Matrix& y, MMStrategy s, int threads) {
  check_shapes(x, y);
  if (threads < 1) throw ConfigError("matmul: threads must be >= 1");
  Matrix z(x.rows(), y.cols());
  Scratch scratch = make_scratch(x, y, s, threads);
  matmul_into(z, x, y, s, threads, scratch);
  return z;
}

Matrix matmul_outer_atomic(const Matrix& x, const Matrix& y, int threads) {
  check_shapes(x, y);
  if (threads < 1) throw ConfigError("matmul: threads must be >= 1");
  const int used = clamp_threads(MMStrategy::Outer, x, y, threads);
  Matrix z(x.rows(), y.cols());
  if (used == 0) return z;

  const std::size_t cells = z.size();
  auto atomic_cells = std::make_unique<std::atomic<double>[]>(cells);
  for (std::size_t i = 0; i < cells; ++i) atomic_cells[i].store(0.0, std::memory_order_relaxed);

  const auto chunks = static_cast<std::size_t>(used);
  const std::size_t n = y.cols();
  ThreadPool::instance().run_chunks(chunks, [&](std::size_t c) {
    const Block b = block_of(x.cols(), chunks, c);
    for (std::size_t k = b.begin; k < b.end; ++k) {
      const double* yk = y.row(k);
      for (std::size_t i = 0; i < x.rows(); ++i) {
        const double a = x(i, k);
        for (std::size_t j = 0; j < n; ++j) {
          atomic_cells[i * n + j].fetch_add(a * yk[j], std::memory_order_relaxed);
        }
      }
    }
  });
  for (std::size_t i = 0; i < cells; ++i) z.data()[i] = atomic_cells[i].load();
  return z;
}

std::pair<Matrix, KernelTiming> matmul_timed(const Matrix& x, const Matrix& y, MMStrategy s,
                                             int threads, const std::string& label) {
  check_shapes(x, y);
  if (threads < 1) throw ConfigError("matmul: threads must be >= 1");
  Matrix z(x.rows(), y.cols());
  Scratch scratch = make_scratch(x, y, s, threads);

  const auto start = std::chrono::steady_clock::now();
  matmul_into(z, x, y, s, threads, scratch);
  const auto stop = std::chrono::steady_clock::now();

  KernelTiming timing;
  timing.label = label;
  timing.strategy = s;
  timing.threads = threads;
  timing.wall_ns = std::chrono::duration_cast<std::chrono::nanoseconds>(stop - start).count();
  timing.m = x.rows();
  timing.k = x.cols();
  timing.n = y.cols();
  return {std::move(z), std::move(timing)};
}

Matrix matmul_naive(const Matrix& x, const Matrix& y) {
  check_shapes(x, y);
  Matrix z(x.rows(), y.cols());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t j = 0; j < y.cols(); ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < x.cols(); ++k) {
        acc += x(i, k) * y(k, j);
      }
      z(i, j) = acc;
    }
  }
  return z;
}

}  // namespace tgl
